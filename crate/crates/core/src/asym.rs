//! Asymptotic estimates for `N_n(ℓ, m)` and its consecutive differences.
//!
//! Everything is computed in log space; [`Estimate::value`] is `exp(log_value)`
//! and may overflow to `+∞` for large boxes.

use std::f64::consts::{LN_2, PI};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::BoxSpec;
use crate::lclt::normal_approx;
use crate::params::{solve_discrete_tilt, solve_tilt, AspectFill, DiscreteSums, DiscreteTilt};
use crate::special::log1mexp_unchecked;

/// Moments of `(S_m, T_m) = (Σ X_j, Σ j X_j)` under a discrete tilt.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentData {
    pub m: u64,
    /// `E S_m`
    pub mu: f64,
    /// `E T_m`
    pub nu: f64,
    /// `Var S_m / m`
    pub alpha: f64,
    /// `Cov(S_m, T_m) / m²`
    pub beta: f64,
    /// `Var T_m / m³`
    pub gamma: f64,
    pub delta_m: f64,
    /// `L_m = Σ log p_j`
    pub log_norm: f64,
}

/// Moments of the product measure with `q_j = e^{−c − d j/m}`.
pub fn moments(tilt: &DiscreteTilt) -> Result<MomentData> {
    if !(tilt.c > 0.0 && tilt.c.is_finite()) || !(tilt.d >= 0.0 && tilt.d.is_finite()) {
        return Err(crate::error::domain(
            "moments",
            format!("(c, d) = ({}, {}) outside c > 0, d >= 0", tilt.c, tilt.d),
        ));
    }
    if tilt.m == 0 {
        return Err(crate::error::domain("moments", "m must be positive"));
    }
    let s = DiscreteSums::new(tilt.m, tilt.c, tilt.d);
    let mf = tilt.m as f64;
    let alpha = s.g0 / mf;
    let beta = s.g1 / (mf * mf);
    let gamma = s.g2 / (mf * mf * mf);
    Ok(MomentData {
        m: tilt.m,
        mu: s.f0,
        nu: s.f1,
        alpha,
        beta,
        gamma,
        delta_m: alpha * gamma - beta * beta,
        log_norm: s.log_norm,
    })
}

/// An asymptotic estimate held in log space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub log_value: f64,
    pub value: f64,
    /// `log_value / m`
    pub exponential_rate: f64,
    /// The formula does not apply here (a difference estimate on the symmetry line).
    pub regime_excluded: bool,
    /// `m·|A − 2B| < 1`: the tilt is `O(1/m)` and the difference asymptotics are unreliable.
    pub weak_tilt: bool,
}

impl Estimate {
    fn from_log(log_value: f64, m: u64) -> Self {
        Self {
            log_value,
            value: log_value.exp(),
            exponential_rate: log_value / m as f64,
            regime_excluded: false,
            weak_tilt: false,
        }
    }
}

fn nondegenerate(op: &'static str, m: u64, l: u64, n: u64) -> Result<BoxSpec> {
    let spec = BoxSpec::new(m, l, n)?;
    if n == 0 || n == spec.area() {
        return Err(Error::Degenerate { op, n });
    }
    Ok(spec)
}

/// Leading exponential rate `cA + 2dB − log(1 − e^{−c−d})` of the continuum estimate.
pub fn tilted_rate(a: f64, b: f64) -> Result<f64> {
    let regime = AspectFill::new(a, b)?;
    let t = solve_tilt(&regime)?;
    if t.d == 0.0 {
        let a = regime.a;
        return Ok((a + 1.0) * (a + 1.0).ln() - a * a.ln());
    }
    Ok(t.c * regime.a + 2.0 * t.d * regime.b - log1mexp_unchecked(t.c + t.d))
}

/// Rate `(1 + A)·log 2` of the fair-coin count `2^{m+ℓ}`, ignoring the Gaussian factor.
pub fn fair_coin_rate(a: f64) -> f64 {
    (1.0 + a) * LN_2
}

/// Continuum estimate
/// `exp{m[cA + 2dB − log(1 − e^{−c−d})]} / (2πm² √(Δ (1 − e^{−c})(1 − e^{−c−d})))`,
/// with the elementary closed form `√3/(Aπm²)·((A+1)^{A+1}/A^A)^m` on `B = A/2`.
pub fn estimate_theorem1(m: u64, l: u64, n: u64) -> Result<Estimate> {
    nondegenerate("estimate_theorem1", m, l, n)?;
    let regime = AspectFill::from_box(m, l, n)?;
    let t = solve_tilt(&regime)?;
    let mf = m as f64;
    let a = regime.a;
    let log_value = if t.d == 0.0 {
        0.5 * 3f64.ln() - (a * PI * mf * mf).ln() + mf * ((a + 1.0) * (a + 1.0).ln() - a * a.ln())
    } else {
        let delta = crate::params::delta(t)?;
        let h_c = log1mexp_unchecked(t.c);
        let h_e = log1mexp_unchecked(t.c + t.d);
        mf * (t.c * a + 2.0 * t.d * regime.b - h_e)
            - (2.0 * PI * mf * mf).ln()
            - 0.5 * (delta.ln() + h_c + h_e)
    };
    Ok(Estimate::from_log(log_value, m))
}

/// Finite-`m` estimate `exp(−L_m + c_m ℓ + d_m n/m) / (2πm²√Δ_m)` at the discrete tilt.
pub fn estimate_theorem1prime(m: u64, l: u64, n: u64) -> Result<Estimate> {
    let spec = nondegenerate("estimate_theorem1prime", m, l, n)?;
    let n_eff = if 2 * n > spec.area() {
        spec.area() - n
    } else {
        n
    };
    let tilt = solve_discrete_tilt(m, l, n_eff)?;
    let mo = moments(&tilt)?;
    let mf = m as f64;
    let log_value = -mo.log_norm + tilt.c * l as f64 + tilt.d * n_eff as f64 / mf
        - (2.0 * PI * mf * mf * mo.delta_m.sqrt()).ln();
    Ok(Estimate::from_log(log_value, m))
}

/// `(d/m)·estimate_theorem1` for `N_{n+1} − N_n`, `n ≤ ℓm/2`.
///
/// On the symmetry line the value is 0 and `regime_excluded` is set.
pub fn estimate_difference(m: u64, l: u64, n: u64) -> Result<Estimate> {
    let spec = nondegenerate("estimate_difference", m, l, n)?;
    if 2 * n > spec.area() {
        return Err(Error::Range {
            op: "estimate_difference",
            detail: format!("n = {n} must not exceed l*m/2"),
        });
    }
    let regime = AspectFill::from_box(m, l, n)?;
    let weak_tilt = m as f64 * (regime.a - 2.0 * regime.b).abs() < 1.0;
    if 2 * n == spec.area() {
        return Ok(Estimate {
            log_value: f64::NEG_INFINITY,
            value: 0.0,
            exponential_rate: f64::NEG_INFINITY,
            regime_excluded: true,
            weak_tilt,
        });
    }
    let d = solve_tilt(&regime)?.d;
    let base = estimate_theorem1(m, l, n)?;
    let mut out = Estimate::from_log(base.log_value + (d / m as f64).ln(), m);
    out.weak_tilt = weak_tilt;
    Ok(out)
}

/// Lower bound `0.004·2^{√s}/s^{9/4}`, `s = min(2n, ℓ², m²)`, for `N_n − N_{n−1}`.
///
/// Returns 0 when `s = 0`.
pub fn pak_panova_bound(m: u64, l: u64, n: u64) -> f64 {
    let s = (2 * n).min(l * l).min(m * m) as f64;
    if s == 0.0 {
        return 0.0;
    }
    0.004 * 2f64.powf(s.sqrt()) / s.powf(2.25)
}

/// Fair-coin estimate `2^{m+ℓ+1}·N̂(ℓ, n)`, where `N̂` is the Gaussian
/// approximation to `P(S_m = ℓ, T_m = n)` with every `p_j = 1/2`.
pub fn takacs_estimate(m: u64, l: u64, n: u64) -> Result<Estimate> {
    nondegenerate("takacs_estimate", m, l, n)?;
    let mo = moments(&DiscreteTilt::fair(m))?;
    let density = normal_approx(l as i64, n as i64, &mo)?;
    let log_value = (m + l + 1) as f64 * LN_2 + density.ln();
    Ok(Estimate::from_log(log_value, m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{coeff, kronecker_diff, ln_big};
    use crate::params::solve_tilt;
    use num_traits::ToPrimitive;

    fn log_exact(m: u64, l: u64, n: u64) -> f64 {
        ln_big(&coeff(BoxSpec::new(m, l, n).unwrap()).unwrap())
    }

    #[test]
    fn fair_moments() {
        let m = 20;
        let mo = moments(&DiscreteTilt::fair(m)).unwrap();
        assert!((mo.alpha - 2.0 * 21.0 / 20.0).abs() < 1e-13);
        assert!((mo.mu - 21.0).abs() < 1e-12);
        assert!((mo.log_norm + 21.0 * LN_2).abs() < 1e-12);
    }

    #[test]
    fn central_delta_limit() {
        let t = solve_discrete_tilt(400, 400, 80_000).unwrap();
        let mo = moments(&t).unwrap();
        assert!((mo.delta_m - 1.0 / 3.0).abs() < 1e-2);
    }

    #[test]
    fn cauchy_schwarz_strict() {
        let t = solve_discrete_tilt(50, 50, 600).unwrap();
        let mo = moments(&t).unwrap();
        assert!(mo.beta * mo.beta < mo.alpha * mo.gamma);
        assert!(mo.delta_m > 0.0);
    }

    #[test]
    fn central_closed_form() {
        let m = 30;
        let e = estimate_theorem1(m, m, m * m / 2).unwrap();
        let mf = m as f64;
        let expect = 0.5 * 3f64.ln() - (PI * mf * mf).ln() + mf * 4f64.ln();
        assert!((e.log_value - expect).abs() < 1e-12);
    }

    #[test]
    fn continuum_estimate_continuous_across_symmetry_line() {
        // Just off B = A/2 the d > 0 branch must approach the closed form.
        let m = 1000;
        let centre = estimate_theorem1(m, m, m * m / 2).unwrap().log_value;
        let near = estimate_theorem1(m, m, m * m / 2 - 1).unwrap().log_value;
        assert!((centre - near).abs() < 1e-5, "{centre} vs {near}");
    }

    #[test]
    fn reflection_invariance() {
        for &(m, l, n) in &[(12, 12, 48), (10, 17, 33), (9, 4, 5)] {
            let area = m * l;
            let a = estimate_theorem1(m, l, n).unwrap().log_value;
            let b = estimate_theorem1(m, l, area - n).unwrap().log_value;
            assert_eq!(a, b);
            let a = estimate_theorem1prime(m, l, n).unwrap().log_value;
            let b = estimate_theorem1prime(m, l, area - n).unwrap().log_value;
            assert_eq!(a, b);
        }
    }

    #[test]
    fn finite_estimate_small_box() {
        let ratio =
            (log_exact(6, 6, 18) - estimate_theorem1prime(6, 6, 18).unwrap().log_value).exp();
        assert!((0.5..2.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn difference_is_scaled_continuum_estimate() {
        let (m, l, n) = (48, 48, 768);
        let d = solve_tilt(&AspectFill::from_box(m, l, n).unwrap())
            .unwrap()
            .d;
        let diff = estimate_difference(m, l, n).unwrap();
        let base = estimate_theorem1(m, l, n).unwrap();
        assert!((diff.value / base.value - d / m as f64).abs() < 1e-14);
        assert!(!diff.weak_tilt);
    }

    #[test]
    fn difference_on_symmetry_line() {
        let e = estimate_difference(10, 10, 50).unwrap();
        assert_eq!(e.value, 0.0);
        assert!(e.regime_excluded && e.weak_tilt);
        assert!(estimate_difference(10, 10, 51).is_err());
    }

    #[test]
    fn difference_ratio_at_48() {
        let (m, n) = (48, 48 * 48 / 3);
        let spec = BoxSpec::new(m, m, n).unwrap();
        let log_diff = kronecker_diff(spec).unwrap().to_f64().unwrap().ln();
        let d = solve_tilt(&AspectFill::from_box(m, m, n).unwrap())
            .unwrap()
            .d;
        // against (d/m)·N_n with N_n exact, then against the full estimate
        let vs_exact = (log_diff - log_exact(m, m, n) - (d / m as f64).ln()).exp();
        assert!((vs_exact - 0.97852).abs() < 1e-4, "{vs_exact}");
        let vs_estimate = (log_diff - estimate_difference(m, m, n).unwrap().log_value).exp();
        assert!(
            (vs_estimate - 0.97852 * 0.98611).abs() < 2e-4,
            "{vs_estimate}"
        );
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(
            estimate_theorem1(5, 5, 0),
            Err(Error::Degenerate { .. })
        ));
        assert!(matches!(
            estimate_theorem1prime(5, 5, 25),
            Err(Error::Degenerate { .. })
        ));
    }

    #[test]
    fn pak_panova_values() {
        let s: f64 = 40.0;
        assert!(
            (pak_panova_bound(10, 10, 20) - 0.004 * 2f64.powf(s.sqrt()) / s.powf(2.25)).abs()
                < 1e-18
        );
        // ℓ = m, n ≤ m²/2 gives s = 2n
        assert_eq!(pak_panova_bound(9, 9, 7), pak_panova_bound(100, 100, 7));
        assert_eq!(pak_panova_bound(3, 30, 40), pak_panova_bound(3, 3, 40));
    }

    #[test]
    fn takacs_rate_and_ordering() {
        assert!((fair_coin_rate(1.0) - 4f64.ln()).abs() < 1e-15);
        assert!((tilted_rate(1.0, 0.5).unwrap() - 4f64.ln()).abs() < 1e-12);
        assert!(fair_coin_rate(1.0) > tilted_rate(1.0, 0.2).unwrap());
        // the Gaussian factor is subexponential only on the symmetry line
        let m = 2000;
        let centre = takacs_estimate(m, m, m * m / 2).unwrap();
        assert!((centre.exponential_rate - fair_coin_rate(1.0)).abs() < 0.01);
        let off = takacs_estimate(m, m, m * m / 5).unwrap();
        assert!(off.exponential_rate < centre.exponential_rate);
    }

    #[test]
    fn takacs_matches_exact_at_centre() {
        let m = 40;
        let ratio = (log_exact(m, m, 800) - takacs_estimate(m, m, 800).unwrap().log_value).exp();
        assert!((ratio - 1.0).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn exponent_reconciliation() {
        // −L_m/m + c_m A + d_m B → cA + 2dB − log(1 − e^{−c−d})
        let rate = tilted_rate(1.0, 1.0 / 3.0).unwrap();
        let mut prev = f64::INFINITY;
        for &m in &[50u64, 100, 200, 400] {
            let n = m * m / 3;
            let t = solve_discrete_tilt(m, m, n).unwrap();
            let mo = moments(&t).unwrap();
            let mf = m as f64;
            let discrete = -mo.log_norm / mf + t.c + t.d * n as f64 / (mf * mf);
            let gap = (discrete - rate).abs();
            assert!(gap < prev && gap * mf < 5.0, "m={m}: gap {gap}");
            prev = gap;
        }
    }
}
