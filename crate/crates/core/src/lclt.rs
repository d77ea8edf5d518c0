//! Local limit theorem for `(S_m, T_m) = (Σ X_j, Σ j X_j)` with independent
//! reduced geometrics `P(X_j = k) = p_j q_j^k`.
//!
//! [`exact_joint_pmf`] is the oracle. Writing `X_j = 0` with probability `p_j`
//! and `X_j = 1 + X_j′` otherwise gives, after adding variable `j`,
//!
//! ```text
//! P_j(a, b) = p_j · P_{j−1}(a, b) + q_j · P_j(a − 1, b − j)
//! ```
//!
//! which updates a dense table in place in `O(1)` per cell. Both coordinates
//! only grow, so every entry inside the stored window is exact; the mass
//! outside is bounded by Chernoff tails.

use std::f64::consts::PI;

use serde::Serialize;

use crate::asym::MomentData;
use crate::error::{domain, Error, Result};
use crate::params::DiscreteTilt;
use crate::special::KahanSum;

/// Largest `m` the table oracle accepts.
pub const MAX_TABLE_M: usize = 60;
const MAX_TABLE_BYTES: u64 = 2 << 30;
/// Default tail budget for [`exact_joint_pmf`].
pub const DEFAULT_TAIL_EPS: f64 = 1e-12;
const RING_SIGMAS: f64 = 3.0;

/// Parameters `p_0, …, p_m` of independent reduced geometrics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeometricFamily {
    pub params: Vec<f64>,
    /// Largest `δ` with every `p_j ∈ [δ, 1 − δ]`.
    pub delta: f64,
}

impl GeometricFamily {
    pub fn new(params: Vec<f64>) -> Result<Self> {
        if params.is_empty() {
            return Err(domain("GeometricFamily", "need at least one parameter"));
        }
        if let Some(p) = params.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
            return Err(domain("GeometricFamily", format!("p = {p} outside (0, 1)")));
        }
        let delta = params.iter().map(|&p| p.min(1.0 - p)).fold(0.5, f64::min);
        Ok(Self { params, delta })
    }

    /// All `p_j = 1/2`.
    pub fn fair(m: usize) -> Self {
        Self {
            params: vec![0.5; m + 1],
            delta: 0.5,
        }
    }

    /// `p_j = 1 − e^{−c − d j/m}`.
    pub fn tilted(tilt: &DiscreteTilt) -> Result<Self> {
        let params = (0..=tilt.m)
            .map(|j| -(-tilt.exponent(j)).exp_m1())
            .collect();
        Self::new(params)
    }

    /// Index of the last variable.
    pub fn m(&self) -> usize {
        self.params.len() - 1
    }

    /// Moments of `(S_m, T_m)`; requires `m ≥ 1`.
    pub fn moments(&self) -> Result<MomentData> {
        let m = self.m();
        if m == 0 {
            return Err(domain("GeometricFamily::moments", "m must be positive"));
        }
        let mut acc = [KahanSum::default(); 6];
        for (j, &p) in self.params.iter().enumerate() {
            let jf = j as f64;
            let q = 1.0 - p;
            let mean = q / p;
            let var = mean / p;
            acc[0].add(mean);
            acc[1].add(jf * mean);
            acc[2].add(var);
            acc[3].add(jf * var);
            acc[4].add(jf * jf * var);
            acc[5].add(p.ln());
        }
        let mf = m as f64;
        let alpha = acc[2].value() / mf;
        let beta = acc[3].value() / (mf * mf);
        let gamma = acc[4].value() / (mf * mf * mf);
        Ok(MomentData {
            m: m as u64,
            mu: acc[0].value(),
            nu: acc[1].value(),
            alpha,
            beta,
            gamma,
            delta_m: alpha * gamma - beta * beta,
            log_norm: acc[5].value(),
        })
    }
}

/// Bivariate Gaussian density with the mean and covariance of `(S_m, T_m)`,
/// evaluated at the lattice point `(a, b)`.
pub fn normal_approx(a: i64, b: i64, moments: &MomentData) -> Result<f64> {
    if moments.delta_m.is_nan() || moments.delta_m <= 0.0 {
        return Err(Error::Singular {
            det: moments.delta_m,
        });
    }
    let mf = moments.m as f64;
    let x = (a as f64 - moments.mu) / mf.sqrt();
    let y = (b as f64 - moments.nu) / (mf * mf.sqrt());
    Ok(gaussian(x, y, moments, mf))
}

#[inline]
fn gaussian(x: f64, y: f64, mo: &MomentData, mf: f64) -> f64 {
    let q = (mo.gamma * x * x - 2.0 * mo.beta * x * y + mo.alpha * y * y) / mo.delta_m;
    (-0.5 * q).exp() / (2.0 * PI * mf * mf * mo.delta_m.sqrt())
}

/// Quadratic form `Q` of [`normal_approx`] at `(a, b)`; nonnegative.
pub fn quadratic_form(a: f64, b: f64, moments: &MomentData) -> f64 {
    let mf = moments.m as f64;
    let x = (a - moments.mu) / mf.sqrt();
    let y = (b - moments.nu) / (mf * mf.sqrt());
    (moments.gamma * x * x - 2.0 * moments.beta * x * y + moments.alpha * y * y) / moments.delta_m
}

/// `P((S_m, T_m) = (a, b))` on the window `[0, a_max] × [0, b_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmfTable {
    pub m: usize,
    pub a_max: usize,
    pub b_max: usize,
    probs: Vec<f64>,
    /// Upper bound on the probability mass outside the window.
    pub truncation_error: f64,
}

impl JointPmfTable {
    /// Zero outside the window.
    pub fn get(&self, a: i64, b: i64) -> f64 {
        if a < 0 || b < 0 || a as usize > self.a_max || b as usize > self.b_max {
            0.0
        } else {
            self.probs[a as usize * (self.b_max + 1) + b as usize]
        }
    }

    pub fn total_mass(&self) -> f64 {
        let mut s = KahanSum::default();
        self.probs.iter().for_each(|&p| s.add(p));
        s.value()
    }

    /// `P(S_m = a)` restricted to the window.
    pub fn marginal_s(&self) -> Vec<f64> {
        self.probs
            .chunks(self.b_max + 1)
            .map(|row| row.iter().sum())
            .collect()
    }

    /// Sum of `w(a, b)·P(a, b)` over the window.
    pub fn expect(&self, w: impl Fn(f64, f64) -> f64) -> f64 {
        let mut s = KahanSum::default();
        for (a, row) in self.probs.chunks(self.b_max + 1).enumerate() {
            for (b, &p) in row.iter().enumerate() {
                if p != 0.0 {
                    s.add(p * w(a as f64, b as f64));
                }
            }
        }
        s.value()
    }
}

/// Smallest `cap ≥ 0` with `P(Σ_j w_j X_j > cap) ≤ budget`, by minimising the
/// Chernoff bound over `θ`. Returns the cap and the bound it certifies.
fn chernoff_cap(params: &[f64], weight: impl Fn(usize) -> f64, budget: f64) -> (usize, f64) {
    let terms: Vec<(f64, f64)> = params
        .iter()
        .enumerate()
        .filter(|(j, _)| weight(*j) > 0.0)
        .map(|(j, &p)| (p, weight(j)))
        .collect();
    if terms.is_empty() {
        return (0, 0.0);
    }
    // log E exp(θ Σ w X) = Σ [log p − log(1 − q e^{θ w})], finite for θ w < −log q
    let theta_max = terms
        .iter()
        .map(|&(p, w)| -(1.0 - p).ln() / w)
        .fold(f64::INFINITY, f64::min);
    let log_mgf = |theta: f64| -> f64 {
        terms
            .iter()
            .map(|&(p, w)| p.ln() - (-((1.0 - p).ln() + theta * w).exp()).ln_1p())
            .sum()
    };
    let log_budget = budget.ln();
    let threshold = |theta: f64| (log_mgf(theta) - log_budget) / theta;

    let (mut lo, mut hi) = (theta_max * 1e-9, theta_max * (1.0 - 1e-9));
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (threshold(x1), threshold(x2));
    for _ in 0..200 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = threshold(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = threshold(x2);
        }
        if hi - lo < 1e-12 * theta_max {
            break;
        }
    }
    let theta = 0.5 * (lo + hi);
    // need cap + 1 ≥ threshold(θ)
    let cap = (threshold(theta).ceil() - 1.0).max(0.0) as usize;
    let bound = (log_mgf(theta) - theta * (cap as f64 + 1.0)).exp().min(1.0);
    (cap, bound)
}

/// Exact joint PMF of `(S_m, T_m)` on a window holding all but `tail_eps` of the mass.
pub fn exact_joint_pmf(family: &GeometricFamily, tail_eps: f64) -> Result<JointPmfTable> {
    let m = family.m();
    if m > MAX_TABLE_M {
        return Err(Error::SizeGuard {
            op: "exact_joint_pmf",
            detail: format!("m = {m} exceeds {MAX_TABLE_M}"),
        });
    }
    if !(tail_eps > 0.0 && tail_eps < 1.0) {
        return Err(domain(
            "exact_joint_pmf",
            format!("tail_eps = {tail_eps} outside (0, 1)"),
        ));
    }
    let (a_max, bound_a) = chernoff_cap(&family.params, |_| 1.0, 0.5 * tail_eps);
    let (b_max, bound_b) = chernoff_cap(&family.params, |j| j as f64, 0.5 * tail_eps);
    let width = b_max + 1;
    let cells = (a_max as u64 + 1) * width as u64;
    if cells * 8 > MAX_TABLE_BYTES {
        return Err(Error::SizeGuard {
            op: "exact_joint_pmf",
            detail: format!("{cells} cells exceed the memory guard"),
        });
    }

    let mut probs = vec![0.0; cells as usize];
    probs[0] = 1.0;
    for (j, &p) in family.params.iter().enumerate() {
        let q = 1.0 - p;
        for a in 0..=a_max {
            let row = a * width;
            for b in 0..width {
                let carried = if a > 0 && b >= j {
                    probs[row - width + b - j]
                } else {
                    0.0
                };
                probs[row + b] = p * probs[row + b] + q * carried;
            }
        }
    }
    Ok(JointPmfTable {
        m,
        a_max,
        b_max,
        probs,
        truncation_error: bound_a + bound_b,
    })
}

/// Summary of one LCLT verification run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LcltReport {
    pub m: usize,
    /// `sup m²·|p_m(a, b) − N_m(a, b)|`
    pub sup_error: f64,
    /// `sup |Δ_b p_m − Δ_b N_m|`
    pub diff_sup_error: f64,
    /// `m⁴ · diff_sup_error`
    pub scaled_diff_error: f64,
    /// `|p_m − N_m| / N_m` at the lattice point nearest the mean.
    pub central_relative_error: f64,
    pub truncation_error: f64,
}

/// Runs both sup statistics over the table window widened by a ring of
/// three standard deviations on every side, where `p_m` is taken as 0.
pub fn lclt_report(family: &GeometricFamily) -> Result<LcltReport> {
    let table = exact_joint_pmf(family, DEFAULT_TAIL_EPS)?;
    let mo = family.moments()?;
    let m = table.m;
    let mf = m as f64;
    let ring_a = (RING_SIGMAS * (mo.alpha * mf).sqrt()).ceil() as i64;
    let ring_b = (RING_SIGMAS * (mo.gamma * mf * mf * mf).sqrt()).ceil() as i64;
    let (a_lo, a_hi) = (-ring_a, table.a_max as i64 + ring_a);
    let (b_lo, b_hi) = (-ring_b, table.b_max as i64 + ring_b);

    let mut sup = 0.0_f64;
    let mut diff_sup = 0.0_f64;
    let mut normal_row = Vec::with_capacity((b_hi - b_lo + 2) as usize);
    for a in a_lo..=a_hi {
        normal_row.clear();
        for b in b_lo..=b_hi + 1 {
            normal_row.push(normal_approx(a, b, &mo)?);
        }
        let mut prev_gap = table.get(a, b_lo) - normal_row[0];
        for (k, b) in (b_lo..=b_hi).enumerate() {
            let gap = prev_gap;
            let next_gap = table.get(a, b + 1) - normal_row[k + 1];
            sup = sup.max(gap.abs());
            diff_sup = diff_sup.max((next_gap - gap).abs());
            prev_gap = next_gap;
        }
    }

    let (ca, cb) = (mo.mu.round() as i64, mo.nu.round() as i64);
    let centre = normal_approx(ca, cb, &mo)?;
    Ok(LcltReport {
        m,
        sup_error: mf * mf * sup,
        diff_sup_error: diff_sup,
        scaled_diff_error: mf.powi(4) * diff_sup,
        central_relative_error: (table.get(ca, cb) - centre).abs() / centre,
        truncation_error: table.truncation_error,
    })
}

/// `sup_{a,b} m²·|p_m(a, b) − N_m(a, b)|`.
pub fn sup_error(family: &GeometricFamily) -> Result<f64> {
    Ok(lclt_report(family)?.sup_error)
}

/// `sup_{a,b} |p_m(a, b+1) − p_m(a, b) − (N_m(a, b+1) − N_m(a, b))|`.
pub fn diff_sup_error(family: &GeometricFamily) -> Result<f64> {
    Ok(lclt_report(family)?.diff_sup_error)
}
