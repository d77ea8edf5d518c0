//! Real special functions and numerically safe primitives.
//!
//! The dilogarithm follows the convention
//! `dilog(x) = ∫₁ˣ log t / (1 − t) dt = Σ_{k≥1} (1 − x)^k / k²`,
//! which is the classical `Li₂(1 − x)`. Both spellings are exported: callers
//! that already hold `z = 1 − x` (typically `z = e^{−s}` for large `s`) should
//! use [`li2`] to avoid forming `1 − z` in floating point.

use std::f64::consts::{LN_2, PI};
use std::sync::OnceLock;

use crate::error::{domain, Result};

/// `π²/6 = Li₂(1)`.
pub const ZETA2: f64 = PI * PI / 6.0;

const SERIES_CUTOFF: f64 = 1e-17;

/// Power series `Σ z^k / k²`; only called with `|z| ≤ 1/2`.
fn li2_series(z: f64) -> f64 {
    let mut sum = 0.0;
    let mut power = z;
    let mut k = 1.0_f64;
    loop {
        let term = power / (k * k);
        sum += term;
        if term.abs() < SERIES_CUTOFF {
            return sum;
        }
        power *= z;
        k += 1.0;
    }
}

/// Classical dilogarithm `Li₂(z)` for real `z ∈ [−1, 1]`.
pub fn li2(z: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&z) {
        return Err(domain("li2", format!("z = {z} outside [-1, 1]")));
    }
    Ok(li2_unchecked(z))
}

pub(crate) fn li2_unchecked(z: f64) -> f64 {
    if z == 1.0 {
        ZETA2
    } else if z.abs() <= 0.5 {
        li2_series(z)
    } else if z > 0.5 {
        // Euler reflection; 1 − z is exact here.
        let w = 1.0 - z;
        ZETA2 - z.ln() * w.ln() - li2_series(w)
    } else {
        // Landen: Li₂(z) + Li₂(z/(z−1)) = −½ log²(1 − z), z/(z−1) ∈ [1/3, 1/2].
        let l = (-z).ln_1p();
        -li2_series(z / (z - 1.0)) - 0.5 * l * l
    }
}

/// Dilogarithm in the `∫₁ˣ log t/(1−t) dt` convention, defined on `(0, 2)`.
pub fn dilog(x: f64) -> Result<f64> {
    if !(x > 0.0 && x < 2.0) {
        return Err(domain("dilog", format!("x = {x} outside (0, 2)")));
    }
    if x < 0.5 {
        // dilog(x) = Li₂(1 − x) = π²/6 − log(x)·log(1 − x) − Li₂(x)
        Ok(ZETA2 - x.ln() * (-x).ln_1p() - li2_series(x))
    } else {
        Ok(li2_unchecked(1.0 - x))
    }
}

/// `log(1 − e^{−y})` for `y > 0`, accurate to a few ulps in relative terms.
pub fn log1mexp(y: f64) -> Result<f64> {
    if y.is_nan() || y <= 0.0 || y.is_infinite() {
        return Err(domain(
            "log1mexp",
            format!("y = {y} must be positive and finite"),
        ));
    }
    Ok(log1mexp_unchecked(y))
}

#[inline]
pub(crate) fn log1mexp_unchecked(y: f64) -> f64 {
    if y <= LN_2 {
        (-(-y).exp_m1()).ln()
    } else {
        (-(-y).exp()).ln_1p()
    }
}

/// Mean of a reduced geometric with `q = e^{−s}`: `q/p = 1/(e^s − 1)`.
#[inline]
pub fn geom_mean(s: f64) -> f64 {
    let q = (-s).exp();
    q / -(-s).exp_m1()
}

/// Variance of a reduced geometric with `q = e^{−s}`: `q/p² = e^{−s}/(1 − e^{−s})²`.
#[inline]
pub fn geom_var(s: f64) -> f64 {
    let q = (-s).exp();
    let p = -(-s).exp_m1();
    q / (p * p)
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    #[inline]
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

const GL_ORDER: usize = 32;

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub(crate) fn gauss_legendre() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| legendre_rule(GL_ORDER))
}

fn legendre_rule(n: usize) -> Vec<(f64, f64)> {
    let mut rule = Vec::with_capacity(n);
    let nf = n as f64;
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut deriv = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            deriv = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / deriv;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * deriv * deriv);
        rule.push((0.5 * (1.0 - x), 0.5 * w));
    }
    rule
}

#[cfg(test)]
pub(crate) mod oracle {
    //! Test-only adaptive Simpson quadrature, independent of the library's
    //! Gauss–Legendre rule and closed forms.

    pub(crate) fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
        let fa = f(a);
        let fb = f(b);
        let mid = 0.5 * (a + b);
        let fm = f(mid);
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        recurse(f, a, b, fa, fm, fb, whole, tol, 60)
    }

    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
}
