//! Exact Gaussian binomial coefficients.
//!
//! `[m+ℓ choose m]_q = Π_{i=1}^{k} (1 − q^{K+i}) / (1 − q^i)` with
//! `k = min(m, ℓ)` and `K = max(m, ℓ)`. Each factor is applied in place: the
//! division is a prefix recurrence `c[t] += c[t−i]`, the multiplication a
//! descending `c[t] −= c[t−K−i]`. After every factor the vector holds a
//! smaller Gaussian binomial, so all intermediates are nonnegative.

use num_bigint::BigUint;
use num_traits::{CheckedSub, One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{domain, Error, Result};

/// Default limit on the number of coefficients materialised at once.
pub const DEFAULT_CAP: u64 = 250_000;

const BRUTE_FORCE_MAX_SIDE: u64 = 12;

/// A box of `m` rows (parts) and `ℓ` columns (part size), and a size `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BoxSpec {
    pub m: u64,
    pub l: u64,
    pub n: u64,
}

impl BoxSpec {
    pub fn new(m: u64, l: u64, n: u64) -> Result<Self> {
        if m == 0 || l == 0 {
            return Err(domain("BoxSpec", "m and l must be positive"));
        }
        let area = m
            .checked_mul(l)
            .ok_or_else(|| domain("BoxSpec", "l*m overflows"))?;
        if n > area {
            return Err(domain("BoxSpec", format!("n = {n} exceeds l*m = {area}")));
        }
        Ok(Self { m, l, n })
    }

    pub fn area(&self) -> u64 {
        self.m * self.l
    }

    /// The complementary size `ℓm − n`.
    pub fn reflected(&self) -> Self {
        Self {
            n: self.area() - self.n,
            ..*self
        }
    }
}

/// `N_0(ℓ, m), …, N_{ℓm}(ℓ, m)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoefficientVector {
    pub m: u64,
    pub l: u64,
    pub coeffs: Vec<BigUint>,
}

impl CoefficientVector {
    pub fn get(&self, n: u64) -> Option<&BigUint> {
        self.coeffs.get(n as usize)
    }

    /// Value at `q = 1`.
    pub fn total(&self) -> BigUint {
        self.coeffs.iter().sum()
    }

    pub fn is_symmetric(&self) -> bool {
        let c = &self.coeffs;
        (0..c.len() / 2).all(|i| c[i] == c[c.len() - 1 - i])
    }

    /// Nondecreasing up to the midpoint.
    pub fn is_unimodal(&self) -> bool {
        let half = (self.coeffs.len() - 1) / 2;
        self.coeffs[..=half].windows(2).all(|w| w[0] <= w[1])
    }

    /// `N_{n+1} > N_n` for `1 ≤ n < ⌊ℓm/2⌋`.
    pub fn is_strictly_unimodal(&self) -> bool {
        let half = (self.coeffs.len() - 1) / 2;
        half < 2 || self.coeffs[1..=half].windows(2).all(|w| w[0] < w[1])
    }
}

/// Coefficients of the Gaussian binomial up to degree `max_degree`.
fn gaussian_prefix(m: u64, l: u64, max_degree: usize) -> Vec<BigUint> {
    let (small, big) = (m.min(l) as usize, m.max(l) as usize);
    let mut c = vec![BigUint::zero(); max_degree + 1];
    c[0] = BigUint::one();
    for i in 1..=small {
        for t in i..=max_degree {
            let (lo, hi) = c.split_at_mut(t);
            hi[0] += &lo[t - i];
        }
        let shift = big + i;
        for t in (shift..=max_degree).rev() {
            let (lo, hi) = c.split_at_mut(t);
            hi[0] -= &lo[t - shift];
        }
    }
    c
}

fn check_sides(op: &'static str, m: u64, l: u64) -> Result<u64> {
    if m == 0 || l == 0 {
        return Err(domain(op, "m and l must be positive"));
    }
    m.checked_mul(l).ok_or_else(|| domain(op, "l*m overflows"))
}

/// Full coefficient vector with the default size cap.
pub fn coeff_vector(m: u64, l: u64) -> Result<CoefficientVector> {
    coeff_vector_with_cap(m, l, DEFAULT_CAP)
}

pub fn coeff_vector_with_cap(m: u64, l: u64, cap: u64) -> Result<CoefficientVector> {
    let area = check_sides("coeff_vector", m, l)?;
    let required = area + 1;
    if required > cap {
        return Err(Error::CapExceeded { required, cap });
    }
    Ok(CoefficientVector {
        m,
        l,
        coeffs: gaussian_prefix(m, l, area as usize),
    })
}

/// Single coefficient `N_n(ℓ, m)`, computing only up to degree `min(n, ℓm − n)`.
pub fn coeff(spec: BoxSpec) -> Result<BigUint> {
    coeff_with_cap(spec, DEFAULT_CAP)
}

pub fn coeff_with_cap(spec: BoxSpec, cap: u64) -> Result<BigUint> {
    let spec = BoxSpec::new(spec.m, spec.l, spec.n)?;
    let degree = spec.n.min(spec.area() - spec.n);
    let required = degree + 1;
    if required > cap {
        return Err(Error::CapExceeded { required, cap });
    }
    let mut c = gaussian_prefix(spec.m, spec.l, degree as usize);
    Ok(c.swap_remove(degree as usize))
}

/// `N_{n+1}(ℓ, m) − N_n(ℓ, m)` for `n < ℓm/2`.
pub fn kronecker_diff(spec: BoxSpec) -> Result<BigUint> {
    let spec = BoxSpec::new(spec.m, spec.l, spec.n)?;
    if 2 * spec.n >= spec.area() {
        return Err(Error::Range {
            op: "kronecker_diff",
            detail: format!(
                "n = {} must be below l*m/2 = {}",
                spec.n,
                spec.area() as f64 / 2.0
            ),
        });
    }
    let required = spec.n + 2;
    if required > DEFAULT_CAP {
        return Err(Error::CapExceeded {
            required,
            cap: DEFAULT_CAP,
        });
    }
    let c = gaussian_prefix(spec.m, spec.l, spec.n as usize + 1);
    c[spec.n as usize + 1]
        .checked_sub(&c[spec.n as usize])
        .ok_or_else(|| Error::Range {
            op: "kronecker_diff",
            detail: "negative difference".into(),
        })
}

/// Natural logarithm of a big integer, without overflowing `f64`.
pub fn ln_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().map_or(f64::NAN, f64::ln);
    }
    let shift = bits - 64;
    (x >> shift).to_f64().map_or(f64::NAN, f64::ln) + shift as f64 * std::f64::consts::LN_2
}

/// Counts partitions by direct recursion over weakly decreasing part lists.
pub fn brute_force_coeff(spec: BoxSpec) -> Result<BigUint> {
    let spec = BoxSpec::new(spec.m, spec.l, spec.n)?;
    if spec.m > BRUTE_FORCE_MAX_SIDE || spec.l > BRUTE_FORCE_MAX_SIDE {
        return Err(Error::SizeGuard {
            op: "brute_force_coeff",
            detail: format!("m, l must be at most {BRUTE_FORCE_MAX_SIDE}"),
        });
    }
    Ok(BigUint::from(count_parts(spec.n, spec.m, spec.l)))
}

fn count_parts(remaining: u64, slots: u64, max_part: u64) -> u64 {
    if remaining == 0 {
        return 1;
    }
    if slots == 0 || remaining > slots * max_part {
        return 0;
    }
    (1..=max_part.min(remaining))
        .map(|part| count_parts(remaining - part, slots - 1, part))
        .sum()
}
