//! Sampling from the tilted geometric ensemble and, by rejection, uniformly
//! from the partitions of `n` in an `m × ℓ` box.
//!
//! A partition `λ_1 ≥ … ≥ λ_m ≥ 0` with `λ_1 ≤ ℓ` is encoded by its gaps
//! `x_j = λ_j − λ_{j+1}` for `j = 0..=m`, with `λ_0 = ℓ` and `λ_{m+1} = 0`.
//! Then `Σ x_j = ℓ` and `Σ j x_j = Σ λ_i`. Under the product measure every
//! gap vector with the same `(Σ x_j, Σ j x_j)` has the same probability, so
//! conditioning on `(ℓ, n)` is uniform.

use std::f64::consts::PI;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::asym::moments;
use crate::error::{domain, Error, Result};
use crate::exact::BoxSpec;
use crate::params::{solve_discrete_tilt, DiscreteTilt};
use crate::special::geom_mean;

/// Gaps `x_0, …, x_m`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GapVector {
    pub x: Vec<u64>,
}

impl GapVector {
    /// `(Σ x_j, Σ j x_j)`
    pub fn totals(&self) -> (u64, u64) {
        self.x
            .iter()
            .enumerate()
            .fold((0, 0), |(s, t), (j, &x)| (s + x, t + j as u64 * x))
    }
}

/// Parts `λ_1 ≥ … ≥ λ_m ≥ 0` of a partition in a box of width `ℓ`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Partition {
    pub width: u64,
    pub parts: Vec<u64>,
}

impl Partition {
    /// Decodes gaps with `Σ x_j = ℓ`: `λ_i = ℓ − (x_0 + … + x_{i−1})`.
    pub fn from_gaps(gaps: &GapVector, width: u64) -> Result<Self> {
        let (s, _) = gaps.totals();
        if s != width {
            return Err(domain(
                "Partition::from_gaps",
                format!("gap sum {s} != width {width}"),
            ));
        }
        let m = gaps.x.len() - 1;
        let mut parts = Vec::with_capacity(m);
        let mut lambda = width;
        for &x in &gaps.x[..m] {
            lambda -= x;
            parts.push(lambda);
        }
        Ok(Self { width, parts })
    }

    pub fn to_gaps(&self) -> GapVector {
        let mut x = Vec::with_capacity(self.parts.len() + 1);
        let mut prev = self.width;
        for &p in &self.parts {
            x.push(prev - p);
            prev = p;
        }
        x.push(prev);
        GapVector { x }
    }

    pub fn size(&self) -> u64 {
        self.parts.iter().sum()
    }

    /// Weakly decreasing with `λ_1 ≤ ℓ`.
    pub fn is_valid(&self) -> bool {
        self.parts.first().is_none_or(|&p| p <= self.width)
            && self.parts.windows(2).all(|w| w[0] >= w[1])
    }

    /// Complement in the `m × ℓ` box: `λ_i ↦ ℓ − λ_{m+1−i}`.
    pub fn complement(&self) -> Self {
        Self {
            width: self.width,
            parts: self.parts.iter().rev().map(|&p| self.width - p).collect(),
        }
    }
}

const TABLE_LEN: usize = 24;

/// Reduced geometric `P(X = k) = p q^k` by table lookup on a uniform `u64`;
/// past the table, memorylessness restarts the draw from `k = TABLE_LEN`.
#[derive(Debug, Clone)]
struct GeometricDraw {
    thresholds: [u64; TABLE_LEN],
    inv_log_q: f64,
}

impl GeometricDraw {
    fn new(s: f64) -> Self {
        // P(X ≤ k) = 1 − q^{k+1}, q = e^{−s}
        let mut thresholds = [u64::MAX; TABLE_LEN];
        for (k, t) in thresholds.iter_mut().enumerate() {
            let cdf = -(-(k as f64 + 1.0) * s).exp_m1();
            *t = if cdf >= 1.0 {
                u64::MAX
            } else {
                (cdf * 2f64.powi(64)) as u64
            };
        }
        Self {
            thresholds,
            inv_log_q: -1.0 / s,
        }
    }

    #[inline]
    fn draw<R: RngCore>(&self, rng: &mut R) -> u64 {
        let u = rng.next_u64();
        if let Some(k) = self.thresholds.iter().position(|&t| u < t) {
            return k as u64;
        }
        let mut base = TABLE_LEN as u64;
        loop {
            let u = rng.next_u64();
            if let Some(k) = self.thresholds.iter().position(|&t| u < t) {
                return base + k as u64;
            }
            base += TABLE_LEN as u64;
            if base > 1 << 40 {
                // unreachable in practice; fall back to the closed-form inverse CDF
                let v = (rng.next_u64() >> 11) as f64 * 2f64.powi(-53);
                return base + ((1.0 - v).ln() * self.inv_log_q) as u64;
            }
        }
    }
}

fn draws_for(tilt: &DiscreteTilt) -> Vec<GeometricDraw> {
    (0..=tilt.m)
        .map(|j| GeometricDraw::new(tilt.exponent(j)))
        .collect()
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One draw from the unconditioned product measure with `q_j = e^{−c − d j/m}`.
pub fn sample_ensemble(tilt: &DiscreteTilt, seed: u64) -> GapVector {
    let mut rng = rng_for(seed, 0);
    let draws = draws_for(tilt);
    GapVector {
        x: draws.iter().map(|g| g.draw(&mut rng)).collect(),
    }
}

/// A conditioned sample and the number of ensemble draws it took.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoxedSample {
    pub partition: Partition,
    pub tries: u64,
}

/// `100·⌈2πm²√Δ_m⌉`, a hundred times the expected number of [`Proposal::AllGaps`] tries.
pub fn default_max_tries(m: u64, l: u64, n: u64) -> Result<u64> {
    let spec = BoxSpec::new(m, l, n)?;
    let n_eff = n.min(spec.area() - n);
    if n_eff == 0 {
        return Ok(1);
    }
    let mo = moments(&solve_discrete_tilt(m, l, n_eff)?)?;
    let mf = m as f64;
    Ok(100 * (2.0 * PI * mf * mf * mo.delta_m.sqrt()).ceil() as u64)
}

/// How a rejection proposal is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum Proposal {
    /// Draw every gap; accept on `(S_m, T_m) = (ℓ, n)`.
    AllGaps,
    /// Draw `x_2, …, x_m`, solve `x_1 = n − Σ_{j≥2} j x_j` and
    /// `x_0 = ℓ − x_1 − Σ_{j≥2} x_j`, and accept with probability
    /// `q_0^{x_0} q_1^{x_1}`. Same conditioned law, `1/(p_0 p_1)` times fewer tries.
    #[default]
    SolveLowGaps,
}

/// Prepared rejection sampler for one box.
#[derive(Debug, Clone)]
pub struct BoxedSampler {
    m: u64,
    l: u64,
    n_eff: u64,
    reflected: bool,
    proposal: Proposal,
    exponents: [f64; 2],
    draws: Vec<GeometricDraw>,
}

impl BoxedSampler {
    pub fn new(m: u64, l: u64, n: u64) -> Result<Self> {
        Self::with_proposal(m, l, n, Proposal::default())
    }

    pub fn with_proposal(m: u64, l: u64, n: u64, proposal: Proposal) -> Result<Self> {
        let spec = BoxSpec::new(m, l, n)?;
        let reflected = 2 * n > spec.area();
        let n_eff = if reflected { spec.area() - n } else { n };
        let (draws, exponents) = if n_eff == 0 {
            (Vec::new(), [0.0; 2])
        } else {
            let tilt = solve_discrete_tilt(m, l, n_eff)?;
            (draws_for(&tilt), [tilt.exponent(0), tilt.exponent(1)])
        };
        Ok(Self {
            m,
            l,
            n_eff,
            reflected,
            proposal,
            exponents,
            draws,
        })
    }

    fn finish(&self, parts: Partition) -> Partition {
        if self.reflected {
            parts.complement()
        } else {
            parts
        }
    }

    /// Rejection sampling; gaps are drawn from `x_m` down and a proposal is
    /// abandoned as soon as the running sums overshoot `(ℓ, n)`.
    pub fn sample<R: RngCore>(&self, rng: &mut R, max_tries: u64) -> Result<BoxedSample> {
        if self.n_eff == 0 {
            let parts = Partition {
                width: self.l,
                parts: vec![0; self.m as usize],
            };
            return Ok(BoxedSample {
                partition: self.finish(parts),
                tries: 0,
            });
        }
        let m = self.m as usize;
        let lowest = match self.proposal {
            Proposal::AllGaps => 0,
            Proposal::SolveLowGaps => 2,
        };
        let mut x = vec![0u64; m + 1];
        for tries in 1..=max_tries {
            let (mut s, mut t) = (0u64, 0u64);
            let mut ok = true;
            for j in (lowest..=m).rev() {
                let v = self.draws[j].draw(rng);
                s += v;
                t += j as u64 * v;
                if s > self.l || t > self.n_eff {
                    ok = false;
                    break;
                }
                x[j] = v;
            }
            if !ok {
                continue;
            }
            let hit = match self.proposal {
                Proposal::AllGaps => s == self.l && t == self.n_eff,
                Proposal::SolveLowGaps => {
                    let x1 = self.n_eff - t;
                    if s + x1 > self.l {
                        false
                    } else {
                        let x0 = self.l - s - x1;
                        x[0] = x0;
                        x[1] = x1;
                        let log_accept =
                            -(self.exponents[0] * x0 as f64 + self.exponents[1] * x1 as f64);
                        let u = (rng.next_u64() >> 11) as f64 * 2f64.powi(-53);
                        u < log_accept.exp()
                    }
                }
            };
            if hit {
                let parts = Partition::from_gaps(&GapVector { x: x.clone() }, self.l)?;
                return Ok(BoxedSample {
                    partition: self.finish(parts),
                    tries,
                });
            }
        }
        Err(Error::TriesExhausted {
            tries: max_tries,
            hits: 0,
        })
    }
}

/// A uniformly random partition of `n` in the `m × ℓ` box.
pub fn sample_boxed(m: u64, l: u64, n: u64, seed: u64, max_tries: u64) -> Result<BoxedSample> {
    if max_tries == 0 {
        return Err(domain("sample_boxed", "max_tries must be at least 1"));
    }
    BoxedSampler::new(m, l, n)?.sample(&mut rng_for(seed, 0), max_tries)
}

/// `count` independent conditioned samples; sample `i` uses stream `i` of `seed`,
/// so the output does not depend on the thread count.
pub fn sample_boxed_batch(
    m: u64,
    l: u64,
    n: u64,
    count: usize,
    seed: u64,
    max_tries: u64,
) -> Result<Vec<BoxedSample>> {
    if max_tries == 0 {
        return Err(domain("sample_boxed_batch", "max_tries must be at least 1"));
    }
    let sampler = BoxedSampler::new(m, l, n)?;
    (0..count as u64)
        .into_par_iter()
        .map(|i| sampler.sample(&mut rng_for(seed, i), max_tries))
        .collect()
}

/// `max_j |Σ_{i ≤ j} (x_i − q_i/p_i)|`.
pub fn max_discrepancy(gaps: &GapVector, tilt: &DiscreteTilt) -> f64 {
    let mut running = 0.0_f64;
    let mut worst = 0.0_f64;
    for (j, &x) in gaps.x.iter().enumerate() {
        running += x as f64 - geom_mean(tilt.exponent(j as u64));
        worst = worst.max(running.abs());
    }
    worst
}
