//! Tilt parameters of the geometric ensemble.
//!
//! The continuum map `ψ(c, d) = (A, B)` is
//!
//! ```text
//! A = ∫₀¹ f(c + d t) dt,    B = ∫₀¹ t · f(c + d t) dt,    f(s) = 1/(e^s − 1)
//! ```
//!
//! and its Jacobian has entries `−∫₀¹ tᵏ g(c + d t) dt` for `k = 0, 1, 2`,
//! with `g(s) = e^{−s}/(1 − e^{−s})² = −f′(s)`. The discrete analogue replaces
//! each integral by the sum over `t = j/m`, `j = 0..=m`.
//!
//! Integrals are evaluated by a fixed Gauss–Legendre rule when `d` is small
//! relative to `c` (where the closed forms cancel catastrophically), and by the
//! closed forms in terms of `log(1 − e^{−s})` and `Li₂(e^{−s})` otherwise.

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::special::{
    gauss_legendre, geom_mean, geom_var, li2_unchecked, log1mexp_unchecked, KahanSum, ZETA2,
};

const BISECTION_CAP: usize = 200;
const NEWTON_CAP: usize = 50;

/// Continuum regime point `(A, B) = (ℓ/m, n/m²)`, normalised so that `B ≤ A/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AspectFill {
    pub a: f64,
    pub b: f64,
    /// The input had `B > A/2` and was mapped through `n ↦ ℓm − n`.
    pub reflected: bool,
}

impl AspectFill {
    /// Normalises `(A, B)` with `0 < B < A`, reflecting when `B > A/2`.
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(domain("AspectFill", format!("A = {a} must be positive")));
        }
        if !(b.is_finite() && b > 0.0 && b < a) {
            return Err(domain(
                "AspectFill",
                format!("B = {b} must lie in (0, A = {a})"),
            ));
        }
        if b > 0.5 * a {
            Ok(Self {
                a,
                b: a - b,
                reflected: true,
            })
        } else {
            Ok(Self {
                a,
                b,
                reflected: false,
            })
        }
    }

    /// Regime of the box `(m, ℓ, n)`; reflects `n ↦ ℓm − n` when `n > ℓm/2`.
    pub fn from_box(m: u64, l: u64, n: u64) -> Result<Self> {
        if m == 0 || l == 0 {
            return Err(domain("AspectFill::from_box", "m and l must be positive"));
        }
        if n == 0 || n >= l * m {
            return Err(Error::Degenerate {
                op: "AspectFill::from_box",
                n,
            });
        }
        let mf = m as f64;
        let reflected = 2 * n > l * m;
        let n_eff = if reflected { l * m - n } else { n };
        Ok(Self {
            a: l as f64 / mf,
            b: n_eff as f64 / (mf * mf),
            reflected,
        })
    }

    /// True on the symmetry line `B = A/2`, where `d = 0`.
    pub fn is_central(&self) -> bool {
        self.b == 0.5 * self.a
    }
}

/// Continuum tilt `(c, d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tilt {
    pub c: f64,
    pub d: f64,
}

impl Tilt {
    pub fn new(c: f64, d: f64) -> Result<Self> {
        check_tilt("Tilt::new", c, d)?;
        Ok(Self { c, d })
    }
}

/// Discrete tilt `(c_m, d_m)` solving the finite-`m` moment equations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiscreteTilt {
    pub c: f64,
    pub d: f64,
    pub m: u64,
}

impl DiscreteTilt {
    /// Untilted fair-coin ensemble: every `p_j = 1/2`.
    pub fn fair(m: u64) -> Self {
        Self {
            c: std::f64::consts::LN_2,
            d: 0.0,
            m,
        }
    }

    /// Exponent `s_j = c + d·j/m` with `q_j = e^{−s_j}`.
    #[inline]
    pub fn exponent(&self, j: u64) -> f64 {
        if self.m == 0 {
            self.c
        } else {
            self.c + self.d * j as f64 / self.m as f64
        }
    }
}

/// Jacobian of `ψ` with respect to `(c, d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JacobianMatrix {
    pub a_c: f64,
    pub a_d: f64,
    pub b_c: f64,
    pub b_d: f64,
}

impl JacobianMatrix {
    pub fn det(&self) -> f64 {
        self.a_c * self.b_d - self.a_d * self.b_c
    }

    pub fn trace(&self) -> f64 {
        self.a_c + self.b_d
    }

    /// Eigenvalues in increasing order (the matrix is symmetric).
    pub fn eigenvalues(&self) -> (f64, f64) {
        let half_tr = 0.5 * self.trace();
        let half_diff = 0.5 * (self.a_c - self.b_d);
        let r = half_diff.hypot(self.a_d);
        (half_tr - r, half_tr + r)
    }

    /// Solves `J·x = rhs`.
    fn solve(&self, rhs: (f64, f64)) -> (f64, f64) {
        let det = self.det();
        (
            (self.b_d * rhs.0 - self.a_d * rhs.1) / det,
            (self.a_c * rhs.1 - self.b_c * rhs.0) / det,
        )
    }
}

fn check_tilt(op: &'static str, c: f64, d: f64) -> Result<()> {
    if !(c.is_finite() && c > 0.0) {
        return Err(domain(op, format!("c = {c} must be positive")));
    }
    if !(d.is_finite() && d >= 0.0) {
        return Err(domain(op, format!("d = {d} must be nonnegative")));
    }
    Ok(())
}

/// `∫₀¹ tᵏ f(c+dt) dt` for k = 0, 1 and `∫₀¹ tᵏ g(c+dt) dt` for k = 0, 1, 2.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TiltIntegrals {
    pub f0: f64,
    pub f1: f64,
    pub g0: f64,
    pub g1: f64,
    pub g2: f64,
}

impl TiltIntegrals {
    pub(crate) fn new(c: f64, d: f64) -> Self {
        if d <= 2.0 * c && d <= 4.0 {
            Self::quadrature(c, d)
        } else {
            Self::closed_form(c, d)
        }
    }

    fn quadrature(c: f64, d: f64) -> Self {
        let mut out = Self {
            f0: 0.0,
            f1: 0.0,
            g0: 0.0,
            g1: 0.0,
            g2: 0.0,
        };
        for &(t, w) in gauss_legendre() {
            let s = c + d * t;
            let f = w * geom_mean(s);
            let g = w * geom_var(s);
            out.f0 += f;
            out.f1 += t * f;
            out.g0 += g;
            out.g1 += t * g;
            out.g2 += t * t * g;
        }
        out
    }

    fn closed_form(c: f64, d: f64) -> Self {
        let e = c + d;
        let h_c = log1mexp_unchecked(c);
        let h_e = log1mexp_unchecked(e);
        // ∫_c^{c+d} log(1 − e^{−s}) ds = Li₂(e^{−c−d}) − Li₂(e^{−c})
        let li_c = li2_unchecked((-c).exp());
        let li_e = li2_unchecked((-e).exp());
        let f0 = (h_e - h_c) / d;
        let f1 = (d * h_e + li_c - li_e) / (d * d);
        let f_c = geom_mean(c);
        let f_e = geom_mean(e);
        // g = −f′, then integrate by parts for the t and t² moments.
        Self {
            f0,
            f1,
            g0: (f_c - f_e) / d,
            g1: (f0 - f_e) / d,
            g2: (2.0 * f1 - f_e) / d,
        }
    }
}

/// The map `(c, d) ↦ (A, B)`.
pub fn psi(tilt: Tilt) -> Result<AspectFill> {
    check_tilt("psi", tilt.c, tilt.d)?;
    let ints = TiltIntegrals::new(tilt.c, tilt.d);
    Ok(AspectFill {
        a: ints.f0,
        b: ints.f1,
        reflected: false,
    })
}

/// Jacobian of [`psi`]; symmetric by construction.
pub fn jacobian(tilt: Tilt) -> Result<JacobianMatrix> {
    check_tilt("jacobian", tilt.c, tilt.d)?;
    let ints = TiltIntegrals::new(tilt.c, tilt.d);
    Ok(JacobianMatrix {
        a_c: -ints.g0,
        a_d: -ints.g1,
        b_c: -ints.g1,
        b_d: -ints.g2,
    })
}

/// `Δ = det J`, the limit of the normalised covariance determinant.
pub fn delta(tilt: Tilt) -> Result<f64> {
    check_tilt("delta", tilt.c, tilt.d)?;
    if tilt.d == 0.0 {
        // A²(A+1)²/12 with A = 1/(e^c − 1)
        let a = geom_mean(tilt.c);
        return Ok(a * a * (a + 1.0) * (a + 1.0) / 12.0);
    }
    let ints = TiltIntegrals::new(tilt.c, tilt.d);
    Ok(ints.g0 * ints.g2 - ints.g1 * ints.g1)
}

/// The explicit closed form of `Δ` in terms of `(A, B, c, d)`.
///
/// Loses roughly `2·log10(1/d)` digits as `d → 0`; [`delta`] is the robust route.
pub fn delta_closed_form(regime: &AspectFill, tilt: Tilt) -> Result<f64> {
    check_tilt("delta_closed_form", tilt.c, tilt.d)?;
    if tilt.d == 0.0 {
        return Err(domain("delta_closed_form", "undefined at d = 0"));
    }
    let (a, b, c, d) = (regime.a, regime.b, tilt.c, tilt.d);
    let em_c = c.exp_m1();
    let num = 2.0 * b * c.exp() * d.exp_m1() + 2.0 * a * em_c - 1.0;
    let den = d * d * (c + d).exp_m1() * em_c;
    Ok(num / den - a * a / (d * d))
}

/// `c` as a function of `(A, d)` along the curve where the `A` equation holds.
pub fn c_from_aspect(a: f64, d: f64) -> f64 {
    if d == 0.0 {
        (1.0 / a).ln_1p()
    } else {
        log1mexp_unchecked((a + 1.0) * d) - log1mexp_unchecked(a * d)
    }
}

fn residual(target: &AspectFill, tilt: Tilt) -> (f64, f64) {
    let ints = TiltIntegrals::new(tilt.c, tilt.d);
    (target.a - ints.f0, target.b - ints.f1)
}

fn sup_norm(r: (f64, f64)) -> f64 {
    r.0.abs().max(r.1.abs())
}

/// Inverts [`psi`]: bisection on `d ↦ B(c(A, d), d)` brackets the root, then
/// two-dimensional Newton with the analytic Jacobian polishes it.
///
/// For very wide boxes (`A·d` beyond ≈ 745) the exact `c` underflows: the
/// returned `c` is then `0.0` or subnormal and `d` solves the `c = 0` form of
/// the `B` equation.
pub fn solve_tilt(regime: &AspectFill) -> Result<Tilt> {
    let (a, b) = (regime.a, regime.b);
    if !(a.is_finite() && a > 0.0 && b.is_finite() && b > 0.0) {
        return Err(domain("solve_tilt", format!("(A, B) = ({a}, {b})")));
    }
    if b > 0.5 * a {
        return Err(domain(
            "solve_tilt",
            format!("B = {b} > A/2; normalise first"),
        ));
    }
    if regime.is_central() {
        return Ok(Tilt {
            c: (1.0 / a).ln_1p(),
            d: 0.0,
        });
    }

    // Beyond A·d ≈ 745 the true c is below the smallest double; there the
    // c = 0 form of the B equation is exact to working precision.
    let fill_at = |d: f64| -> f64 {
        let c = c_from_aspect(a, d);
        if c >= f64::MIN_POSITIVE {
            TiltIntegrals::new(c, d).f1
        } else {
            zero_c_fill(d)
        }
    };

    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut steps = 0;
    while fill_at(hi) >= b {
        lo = hi;
        hi *= 2.0;
        steps += 1;
        if steps >= BISECTION_CAP {
            return Err(Error::NonConvergence {
                op: "solve_tilt (bracketing)",
                iterations: steps,
                residual: f64::NAN,
            });
        }
    }
    let underflow = c_from_aspect(a, lo) < f64::MIN_POSITIVE;
    let rel_width = if underflow { 4.0 * f64::EPSILON } else { 1e-6 };
    while hi - lo > rel_width * hi && steps < BISECTION_CAP {
        let mid = 0.5 * (lo + hi);
        if fill_at(mid) > b {
            lo = mid;
        } else {
            hi = mid;
        }
        steps += 1;
    }

    let d0 = 0.5 * (lo + hi);
    let c0 = c_from_aspect(a, d0);
    if c0 < f64::MIN_POSITIVE {
        let res = (zero_c_fill(d0) - b).abs();
        return if res < 1e-11 * a.max(1.0) {
            Ok(Tilt { c: c0, d: d0 })
        } else {
            Err(Error::NonConvergence {
                op: "solve_tilt",
                iterations: steps,
                residual: res,
            })
        };
    }
    let seed = Tilt { c: c0, d: d0 };
    let tol = 1e-11 * a.max(1.0);
    let best = newton_polish(regime, seed)?;
    let res = sup_norm(residual(regime, best));
    if res < tol {
        Ok(best)
    } else {
        Err(Error::NonConvergence {
            op: "solve_tilt",
            iterations: NEWTON_CAP,
            residual: res,
        })
    }
}

/// `B` at `c = 0`: `[d·log(1 − e^{−d}) + π²/6 − Li₂(e^{−d})]/d²`.
fn zero_c_fill(d: f64) -> f64 {
    (d * log1mexp_unchecked(d) + ZETA2 - li2_unchecked((-d).exp())) / (d * d)
}

fn newton_polish(target: &AspectFill, seed: Tilt) -> Result<Tilt> {
    let floor = 4.0 * f64::EPSILON * target.a.max(1.0);
    let mut x = seed;
    let mut r = residual(target, x);
    let mut norm = sup_norm(r);
    for _ in 0..NEWTON_CAP {
        if norm <= floor {
            break;
        }
        let jac = jacobian(x)?;
        let (dc, dd) = jac.solve(r);
        let mut lambda = 1.0;
        let mut improved = None;
        for _ in 0..40 {
            let cand = Tilt {
                c: x.c + lambda * dc,
                d: (x.d + lambda * dd).max(0.0),
            };
            if cand.c > 0.0 {
                let rc = residual(target, cand);
                let nc = sup_norm(rc);
                if nc < norm {
                    improved = Some((cand, rc, nc));
                    break;
                }
            }
            lambda *= 0.5;
        }
        match improved {
            Some((cand, rc, nc)) => {
                x = cand;
                r = rc;
                norm = nc;
            }
            None => break,
        }
    }
    Ok(x)
}

/// Root `d > 0` of `B·d² = d·log(1 − e^{−d}) + π²/6 − Li₂(e^{−d})`, the limit of
/// `solve_tilt(A, B).d` as `A → ∞` (where `c → 0`).
pub fn large_aspect_limit_d(b: f64) -> Result<f64> {
    if !(b.is_finite() && b > 0.0) {
        return Err(domain(
            "large_aspect_limit_d",
            format!("B = {b} must be positive"),
        ));
    }
    // decreases from ∞ to 0
    let fill = zero_c_fill;
    let (mut lo, mut hi) = (1e-8, 1.0);
    while fill(hi) > b {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::NonConvergence {
                op: "large_aspect_limit_d",
                iterations: 0,
                residual: f64::NAN,
            });
        }
    }
    for _ in 0..BISECTION_CAP {
        let mid = 0.5 * (lo + hi);
        if fill(mid) > b {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Compensated sums over `j = 0..=m` of `f_j`, `j f_j`, `g_j`, `j g_j`,
/// `j² g_j` and `log p_j` for `s_j = c + d·j/m`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct DiscreteSums {
    pub f0: f64,
    pub f1: f64,
    pub g0: f64,
    pub g1: f64,
    pub g2: f64,
    pub log_norm: f64,
    /// `Σ j·|f_j|`, the magnitude scale of the area equation.
    pub f1_scale: f64,
}

impl DiscreteSums {
    pub(crate) fn new(m: u64, c: f64, d: f64) -> Self {
        let mut acc = [KahanSum::default(); 6];
        let mut scale = 0.0;
        let mf = m.max(1) as f64;
        for j in 0..=m {
            let jf = j as f64;
            let s = c + d * jf / mf;
            let f = geom_mean(s);
            let g = geom_var(s);
            acc[0].add(f);
            acc[1].add(jf * f);
            acc[2].add(g);
            acc[3].add(jf * g);
            acc[4].add(jf * jf * g);
            acc[5].add(log1mexp_unchecked(s));
            scale += jf * f.abs();
        }
        Self {
            f0: acc[0].value(),
            f1: acc[1].value(),
            g0: acc[2].value(),
            g1: acc[3].value(),
            g2: acc[4].value(),
            log_norm: acc[5].value(),
            f1_scale: scale,
        }
    }
}

/// Residuals `(Σ f_j − ℓ, Σ j f_j − n)` of the discrete moment equations.
pub fn discrete_residuals(m: u64, l: u64, n: u64, c: f64, d: f64) -> (f64, f64) {
    let sums = DiscreteSums::new(m, c, d);
    (sums.f0 - l as f64, sums.f1 - n as f64)
}

/// Solves `E S_m = ℓ`, `E T_m = n` for `(c_m, d_m)` by damped Newton, seeded at
/// the continuum tilt of `(ℓ/m, n/m²)`.
///
/// Requires `0 < n ≤ ℓm/2`.
pub fn solve_discrete_tilt(m: u64, l: u64, n: u64) -> Result<DiscreteTilt> {
    if m == 0 || l == 0 {
        return Err(domain("solve_discrete_tilt", "m and l must be positive"));
    }
    if n == 0 || n == l * m {
        return Err(Error::Degenerate {
            op: "solve_discrete_tilt",
            n,
        });
    }
    if 2 * n > l * m {
        return Err(domain(
            "solve_discrete_tilt",
            format!("n = {n} > l*m/2; reflect n -> l*m - n first"),
        ));
    }
    if 2 * n == l * m {
        // Constant summand: (m+1)/(e^c − 1) = ℓ.
        let c = ((m + 1) as f64 / l as f64).ln_1p();
        return Ok(DiscreteTilt { c, d: 0.0, m });
    }

    let mf = m as f64;
    let (lf, nf) = (l as f64, n as f64);
    let seed = solve_tilt(&AspectFill::from_box(m, l, n)?)?;
    let eval = |c: f64, d: f64| {
        let s = DiscreteSums::new(m, c, d);
        let r = ((s.f0 - lf) / mf, (s.f1 - nf) / (mf * mf));
        (s, r)
    };
    let admissible = |c: f64, d: f64| c > 0.0 && c + d.min(0.0) > 0.0;

    let (mut c, mut d) = (seed.c, seed.d);
    let (mut sums, mut r) = eval(c, d);
    let mut norm = sup_norm(r);
    let tolerances = |s: &DiscreteSums| {
        let t1 = 1e-9_f64.max(16.0 * f64::EPSILON * s.f0.abs());
        let t2 = 1e-9_f64.max(16.0 * f64::EPSILON * s.f1_scale);
        (t1, t2)
    };
    let converged = |s: &DiscreteSums| {
        let (t1, t2) = tolerances(s);
        (s.f0 - lf).abs() < t1 && (s.f1 - nf).abs() < t2
    };

    let mut iterations = 0;
    while iterations < NEWTON_CAP {
        iterations += 1;
        let jac = JacobianMatrix {
            a_c: -sums.g0 / mf,
            a_d: -sums.g1 / (mf * mf),
            b_c: -sums.g1 / (mf * mf),
            b_d: -sums.g2 / (mf * mf * mf),
        };
        let (dc, dd) = jac.solve((-r.0, -r.1));
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let (cc, cd) = (c + lambda * dc, d + lambda * dd);
            if admissible(cc, cd) {
                let (s2, r2) = eval(cc, cd);
                let n2 = sup_norm(r2);
                if n2 < norm {
                    c = cc;
                    d = cd;
                    sums = s2;
                    r = r2;
                    norm = n2;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if converged(&sums)
            && (!accepted || (dc.abs() <= 1e-15 * c && dd.abs() <= 1e-15 * d.max(1.0)))
        {
            break;
        }
        if !accepted {
            break;
        }
    }

    if converged(&sums) {
        Ok(DiscreteTilt {
            c,
            d: d.max(0.0),
            m,
        })
    } else {
        let res = (sums.f0 - lf).abs().max((sums.f1 - nf).abs());
        Err(Error::NonConvergence {
            op: "solve_discrete_tilt",
            iterations,
            residual: res,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::oracle::adaptive_simpson;
    use std::f64::consts::LN_2;

    fn quad_psi(c: f64, d: f64) -> (f64, f64) {
        let a = adaptive_simpson(&|t: f64| geom_mean(c + d * t), 0.0, 1.0, 1e-14);
        let b = adaptive_simpson(&|t: f64| t * geom_mean(c + d * t), 0.0, 1.0, 1e-14);
        (a, b)
    }

    fn quad_g(c: f64, d: f64, k: i32) -> f64 {
        adaptive_simpson(&|t: f64| t.powi(k) * geom_var(c + d * t), 0.0, 1.0, 1e-14)
    }

    #[test]
    fn psi_central_values() {
        let r = psi(Tilt { c: LN_2, d: 0.0 }).unwrap();
        assert!((r.a - 1.0).abs() < 1e-14 && (r.b - 0.5).abs() < 1e-14);
        let r = psi(Tilt {
            c: 1.5_f64.ln(),
            d: 0.0,
        })
        .unwrap();
        assert!((r.a - 2.0).abs() < 1e-13 && (r.b - 1.0).abs() < 1e-13);
    }

    #[test]
    fn psi_matches_quadrature() {
        for &(c, d) in &[
            (0.5, 1.0),
            (0.2, 3.0),
            (1.3, 0.01),
            (0.05, 0.08),
            (2.0, 7.0),
            (0.7, 4.5),
        ] {
            let r = psi(Tilt { c, d }).unwrap();
            let (qa, qb) = quad_psi(c, d);
            assert!(
                (r.a - qa).abs() < 1e-12 * qa.max(1.0),
                "A at ({c},{d}): {} vs {qa}",
                r.a
            );
            assert!(
                (r.b - qb).abs() < 1e-12 * qb.max(1.0),
                "B at ({c},{d}): {} vs {qb}",
                r.b
            );
        }
    }

    #[test]
    fn psi_continuous_across_regime_switch() {
        let c = 0.4;
        let below = psi(Tilt {
            c,
            d: 0.8 * (1.0 - 1e-12),
        })
        .unwrap();
        let above = psi(Tilt {
            c,
            d: 0.8 * (1.0 + 1e-12),
        })
        .unwrap();
        // d moves by 1.6e-12 across the switch
        assert!((below.a - above.a).abs() < 2e-12);
        assert!((below.b - above.b).abs() < 2e-12);
    }

    #[test]
    fn psi_small_d_is_smooth() {
        // second-order expansion about d = 0: B = f/2 + f′ d/3 + f″ d²/8
        let c = 0.9;
        let f = geom_mean(c);
        let fp = -geom_var(c);
        for &d in &[1e-7, 1e-5, 1e-3] {
            let b = psi(Tilt { c, d }).unwrap().b;
            assert!(
                (b - (0.5 * f + fp * d / 3.0)).abs() < 10.0 * d * d,
                "d = {d}"
            );
        }
    }

    #[test]
    fn psi_domain_errors() {
        assert!(psi(Tilt { c: 0.0, d: 1.0 }).is_err());
        assert!(psi(Tilt { c: 1.0, d: -0.1 }).is_err());
    }

    #[test]
    fn jacobian_symmetric_and_negative_definite() {
        let j = jacobian(Tilt { c: LN_2, d: 0.0 }).unwrap();
        assert_eq!(j.a_d, j.b_c);
        let (lo, hi) = jacobian(Tilt { c: 0.5, d: 1.0 }).unwrap().eigenvalues();
        assert!(lo < 0.0 && hi < 0.0);
    }

    #[test]
    fn jacobian_matches_quadrature() {
        let j = jacobian(Tilt { c: 0.7, d: 0.9 }).unwrap();
        assert!((j.a_c + quad_g(0.7, 0.9, 0)).abs() < 1e-10);
        assert!((j.a_d + quad_g(0.7, 0.9, 1)).abs() < 1e-10);
        assert!((j.b_d + quad_g(0.7, 0.9, 2)).abs() < 1e-10);
        let j = jacobian(Tilt { c: 0.3, d: 2.5 }).unwrap();
        assert!((j.a_c + quad_g(0.3, 2.5, 0)).abs() < 1e-10);
        assert!((j.b_d + quad_g(0.3, 2.5, 2)).abs() < 1e-10);
    }

    #[test]
    fn solve_tilt_central_is_elementary() {
        let t = solve_tilt(&AspectFill::new(1.0, 0.5).unwrap()).unwrap();
        assert_eq!(t.d, 0.0);
        assert!((t.c - LN_2).abs() < 1e-15);
    }

    /// Independent route: bisection on F(d) = ψ₂(c(A, d), d) with quadrature ψ₂.
    #[test]
    fn solve_tilt_matches_bisection_oracle() {
        let (a, b) = (1.0, 1.0 / 3.0);
        let fill = |d: f64| quad_psi(c_from_aspect(a, d), d).1;
        let (mut lo, mut hi) = (1e-9, 8.0);
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if fill(mid) > b {
                lo = mid
            } else {
                hi = mid
            }
        }
        let d_oracle = 0.5 * (lo + hi);
        let t = solve_tilt(&AspectFill::new(a, b).unwrap()).unwrap();
        assert!(t.d > 0.0);
        assert!((t.d - d_oracle).abs() < 1e-10, "{} vs {}", t.d, d_oracle);
        assert!((t.c - c_from_aspect(a, d_oracle)).abs() < 1e-10);
        let back = psi(t).unwrap();
        assert!((back.a - a).abs() < 1e-11 && (back.b - b).abs() < 1e-11);
    }

    #[test]
    fn solve_tilt_rejects_unnormalised() {
        let raw = AspectFill {
            a: 1.0,
            b: 0.7,
            reflected: false,
        };
        assert!(matches!(solve_tilt(&raw), Err(Error::Domain { .. })));
    }

    #[test]
    fn aspect_fill_reflects() {
        let r = AspectFill::new(1.0, 0.7).unwrap();
        assert!(r.reflected);
        assert!((r.b - 0.3).abs() < 1e-15);
        let r = AspectFill::from_box(10, 10, 60).unwrap();
        assert!(r.reflected && (r.b - 0.4).abs() < 1e-15);
        assert!(AspectFill::new(1.0, 1.0).is_err());
        assert!(AspectFill::from_box(3, 3, 0).is_err());
    }

    #[test]
    fn delta_central_values() {
        assert!((delta(Tilt { c: LN_2, d: 0.0 }).unwrap() - 1.0 / 3.0).abs() < 1e-14);
        assert!(
            (delta(Tilt {
                c: 1.5_f64.ln(),
                d: 0.0
            })
            .unwrap()
                - 3.0)
                .abs()
                < 1e-12
        );
    }

    #[test]
    fn delta_matches_integral_determinant() {
        let t = solve_tilt(&AspectFill::new(1.0, 1.0 / 3.0).unwrap()).unwrap();
        let (g0, g1, g2) = (
            quad_g(t.c, t.d, 0),
            quad_g(t.c, t.d, 1),
            quad_g(t.c, t.d, 2),
        );
        assert!((delta(t).unwrap() - (g0 * g2 - g1 * g1)).abs() < 1e-10);
    }

    #[test]
    fn delta_closed_form_agrees_at_moderate_d() {
        for &(c, d) in &[(0.7, 0.9), (0.3, 1.05), (1.0, 3.0), (0.1, 0.5)] {
            let t = Tilt { c, d };
            let regime = psi(t).unwrap();
            let closed = delta_closed_form(&regime, t).unwrap();
            let robust = delta(t).unwrap();
            assert!(
                (closed - robust).abs() < 1e-9 * robust.max(1.0),
                "({c},{d}): {closed} vs {robust}"
            );
        }
    }

    #[test]
    fn delta_continuous_at_zero() {
        let c = 0.6;
        let at0 = delta(Tilt { c, d: 0.0 }).unwrap();
        let near = delta(Tilt { c, d: 1e-9 }).unwrap();
        assert!(((at0 - near) / at0).abs() < 1e-8);
    }

    #[test]
    fn discrete_central_case_is_exact() {
        let t = solve_discrete_tilt(10, 7, 35).unwrap();
        assert_eq!(t.d, 0.0);
        assert!((t.c - (18.0_f64 / 7.0).ln()).abs() < 1e-15);
        let (r1, r2) = discrete_residuals(10, 7, 35, t.c, t.d);
        assert!(r1.abs() < 1e-12 && r2.abs() < 1e-12);
    }

    #[test]
    fn discrete_residuals_small() {
        let t = solve_discrete_tilt(40, 40, 500).unwrap();
        let (r1, r2) = discrete_residuals(40, 40, 500, t.c, t.d);
        assert!(r1.abs() < 1e-9 && r2.abs() < 1e-9, "{r1} {r2}");
        assert!(t.d > 0.0);
    }

    #[test]
    fn discrete_errors() {
        assert!(matches!(
            solve_discrete_tilt(4, 4, 0),
            Err(Error::Degenerate { .. })
        ));
        assert!(matches!(
            solve_discrete_tilt(4, 4, 16),
            Err(Error::Degenerate { .. })
        ));
        assert!(matches!(
            solve_discrete_tilt(4, 4, 9),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn discrete_tiny_box() {
        let t = solve_discrete_tilt(1, 3, 1).unwrap();
        let (r1, r2) = discrete_residuals(1, 3, 1, t.c, t.d);
        assert!(r1.abs() < 1e-9 && r2.abs() < 1e-9);
    }

    #[test]
    fn large_aspect_root() {
        // as printed (B multiplying the bracket) the equation has no positive root:
        // d·log(1 − e^{−d}) − Li₂(e^{−d}) < 0 for every d > 0
        for i in 1..200 {
            let d = i as f64 * 0.1;
            assert!(d * log1mexp_unchecked(d) - li2_unchecked((-d).exp()) < 0.0);
        }
        let b = 1.0 / 3.0;
        let d_inf = large_aspect_limit_d(b).unwrap();
        let mut prev_gap = f64::INFINITY;
        let mut prev_c = f64::INFINITY;
        for &a in &[10.0, 100.0, 1000.0] {
            let t = solve_tilt(&AspectFill::new(a, b).unwrap()).unwrap();
            let gap = (t.d - d_inf).abs();
            assert!(t.c < prev_c && gap <= prev_gap);
            prev_c = t.c;
            prev_gap = gap;
        }
        assert!(prev_gap < 1e-8, "gap {prev_gap}");
    }
}
