//! Limit shape of a uniformly random partition in an `m × ℓ` box.
//!
//! After rescaling by `1/m`, the boundary `x ↦ λ_{⌊mx⌋}/m` concentrates on
//!
//! ```text
//! y(x) = A − ∫₀ˣ f(c + d u) du = A − (log(1 − e^{−c−dx}) − log(1 − e^{−c}))/d
//! ```
//!
//! equivalently `(1 − e^{−c}) e^{d(A−y)} + e^{−c} e^{−dx} = 1`. This is the
//! arc `e^{−X} + e^{−Y} = 1`, `X ∈ [c, c + d]`, under an affine change of
//! coordinates.

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::params::{solve_tilt, AspectFill, Tilt, TiltIntegrals};
use crate::sampler::Partition;
use crate::special::{geom_mean, li2_unchecked, log1mexp_unchecked};

/// Default number of grid points on `[0, 1]`.
pub const DEFAULT_GRID: usize = 1024;
const PETROV_NEWTON_CAP: usize = 50;

/// The limit curve sampled on a uniform grid of `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitCurve {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl LimitCurve {
    /// `y(x)` for any `x ∈ [0, 1]`.
    pub fn value_at(&self, x: f64) -> f64 {
        curve_value(
            self.a,
            Tilt {
                c: self.c,
                d: self.d,
            },
            x,
        )
    }

    /// Residual of `(1 − e^{−c}) e^{d(A−y)} + e^{−c} e^{−dx} = 1`.
    pub fn implicit_residual(&self, x: f64, y: f64) -> f64 {
        let em = (-self.c).exp();
        (1.0 - em) * (self.d * (self.a - y)).exp() + em * (-self.d * x).exp() - 1.0
    }
}

fn curve_value(a: f64, t: Tilt, x: f64) -> f64 {
    if x <= 0.0 {
        a
    } else if x >= 1.0 {
        0.0
    } else {
        a - x * TiltIntegrals::new(t.c, t.d * x).f0
    }
}

/// The limit curve for `regime`, on `grid_size ≥ 2` equally spaced points.
pub fn limit_curve(regime: &AspectFill, grid_size: usize) -> Result<LimitCurve> {
    if grid_size < 2 {
        return Err(domain("limit_curve", "grid_size must be at least 2"));
    }
    let t = solve_tilt(regime)?;
    let last = (grid_size - 1) as f64;
    let x: Vec<f64> = (0..grid_size).map(|i| i as f64 / last).collect();
    let y = x.iter().map(|&xi| curve_value(regime.a, t, xi)).collect();
    Ok(LimitCurve {
        a: regime.a,
        b: regime.b,
        c: t.c,
        d: t.d,
        x,
        y,
    })
}

/// Maps a point `X ∈ [c, c + d]` of `e^{−X} + e^{−Y} = 1` to curve coordinates.
pub fn petrov_map(a: f64, tilt: Tilt, big_x: f64) -> (f64, f64) {
    let big_y = -log1mexp_unchecked(big_x);
    let x1 = (big_x - tilt.c) / tilt.d;
    let y1 = a + (big_y + log1mexp_unchecked(tilt.c)) / tilt.d;
    (x1, y1)
}

/// Endpoints `s₁ < s₂` of the arc and the solver's diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PetrovEndpoints {
    pub s1: f64,
    pub s2: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// `(A, B)` as functions of the arc endpoints, and their Jacobian
/// `[[∂A/∂s₁, ∂A/∂s₂], [∂B/∂s₁, ∂B/∂s₂]]`.
fn arc_moments(s1: f64, s2: f64) -> ((f64, f64), [[f64; 2]; 2]) {
    let w = s2 - s1;
    let (h1, h2) = (log1mexp_unchecked(s1), log1mexp_unchecked(s2));
    let (f1, f2) = (geom_mean(s1), geom_mean(s2));
    // d/ds Li₂(e^{−s}) = log(1 − e^{−s})
    let a = (h2 - h1) / w;
    let b = (li2_unchecked((-s1).exp()) - li2_unchecked((-s2).exp()) + w * h2) / (w * w);
    let jac = [
        [(a - f1) / w, (f2 - a) / w],
        [(h1 - h2) / (w * w) + 2.0 * b / w, (f2 - 2.0 * b) / w],
    ];
    ((a, b), jac)
}

/// Solves for the arc endpoints by Newton's method from the seed `(c, c + d)`.
pub fn petrov_endpoints(regime: &AspectFill) -> Result<PetrovEndpoints> {
    let t = solve_tilt(regime)?;
    petrov_endpoints_from(regime, (t.c, t.c + t.d))
}

/// As [`petrov_endpoints`] from an arbitrary seed with `0 < s₁ < s₂`.
pub fn petrov_endpoints_from(regime: &AspectFill, seed: (f64, f64)) -> Result<PetrovEndpoints> {
    if regime.is_central() {
        return Err(domain(
            "petrov_endpoints",
            "the arc degenerates to a point when d = 0",
        ));
    }
    let (mut s1, mut s2) = seed;
    if !(s1 > 0.0 && s2 > s1) {
        return Err(domain(
            "petrov_endpoints",
            format!("seed ({s1}, {s2}) needs 0 < s1 < s2"),
        ));
    }
    let resid = |s1: f64, s2: f64| {
        let ((a, b), jac) = arc_moments(s1, s2);
        ((regime.a - a, regime.b - b), jac)
    };
    let norm = |r: (f64, f64)| r.0.abs().max(r.1.abs());
    let floor = 4.0 * f64::EPSILON * regime.a.max(1.0);
    let (mut r, mut jac) = resid(s1, s2);
    let mut iterations = 0;
    while norm(r) > floor && iterations < PETROV_NEWTON_CAP {
        iterations += 1;
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let d1 = (jac[1][1] * r.0 - jac[0][1] * r.1) / det;
        let d2 = (jac[0][0] * r.1 - jac[1][0] * r.0) / det;
        let mut lambda = 1.0;
        let mut moved = false;
        for _ in 0..40 {
            let (c1, c2) = (s1 + lambda * d1, s2 + lambda * d2);
            if c1 > 0.0 && c2 > c1 {
                let (rc, jc) = resid(c1, c2);
                if norm(rc) < norm(r) {
                    s1 = c1;
                    s2 = c2;
                    r = rc;
                    jac = jc;
                    moved = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !moved {
            break;
        }
    }
    let residual = norm(r);
    if residual < 1e-10 * regime.a.max(1.0) {
        Ok(PetrovEndpoints {
            s1,
            s2,
            iterations,
            residual,
        })
    } else {
        Err(Error::NonConvergence {
            op: "petrov_endpoints",
            iterations,
            residual,
        })
    }
}

/// `max_i |λ_{⌊m x_i⌋}/m − y(x_i)|` over the curve grid, with `λ_0 = ℓ`.
pub fn boundary_distance(partition: &Partition, curve: &LimitCurve) -> f64 {
    let m = partition.parts.len();
    let mf = m as f64;
    let lambda = |i: usize| {
        if i == 0 {
            partition.width
        } else {
            partition.parts[i - 1]
        }
    };
    curve
        .x
        .iter()
        .zip(&curve.y)
        .map(|(&x, &y)| {
            let i = ((mf * x).floor() as usize).min(m);
            (lambda(i) as f64 / mf - y).abs()
        })
        .fold(0.0, f64::max)
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (vx, vy) = (b.0 - a.0, b.1 - a.1);
    let len2 = vx * vx + vy * vy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * vx + (p.1 - a.1) * vy) / len2).clamp(0.0, 1.0)
    };
    (p.0 - a.0 - t * vx).hypot(p.1 - a.1 - t * vy)
}

fn polyline_distance(p: (f64, f64), line: &[(f64, f64)]) -> f64 {
    line.windows(2)
        .map(|w| segment_distance(p, w[0], w[1]))
        .fold(f64::INFINITY, f64::min)
}

/// Staircase boundary of the rescaled diagram: horizontal runs at height
/// `λ_i/m` over `[i/m, (i+1)/m]` joined by vertical drops, ending at `(1, 0)`.
pub fn staircase(partition: &Partition) -> Vec<(f64, f64)> {
    let m = partition.parts.len();
    let mf = m as f64;
    let mut pts = vec![(0.0, partition.width as f64 / mf)];
    let mut height = partition.width;
    for (i, &p) in partition.parts.iter().enumerate() {
        let x = i as f64 / mf;
        if i > 0 {
            pts.push((x, height as f64 / mf));
        }
        pts.push((x, p as f64 / mf));
        height = p;
    }
    pts.push((1.0, height as f64 / mf));
    pts.push((1.0, 0.0));
    pts
}

/// Hausdorff distance between the staircase and the curve, both as polylines,
/// measured from the vertices and segment midpoints of each.
pub fn hausdorff_distance(partition: &Partition, curve: &LimitCurve) -> f64 {
    let stairs = staircase(partition);
    let graph: Vec<(f64, f64)> = curve
        .x
        .iter()
        .copied()
        .zip(curve.y.iter().copied())
        .collect();
    let probes = |line: &[(f64, f64)]| -> Vec<(f64, f64)> {
        let mut out = line.to_vec();
        out.extend(
            line.windows(2)
                .map(|w| (0.5 * (w[0].0 + w[1].0), 0.5 * (w[0].1 + w[1].1))),
        );
        out
    };
    let one_way = |from: &[(f64, f64)], to: &[(f64, f64)]| {
        probes(from)
            .iter()
            .map(|&p| polyline_distance(p, to))
            .fold(0.0, f64::max)
    };
    one_way(&stairs, &graph).max(one_way(&graph, &stairs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::oracle::adaptive_simpson;

    fn third() -> AspectFill {
        AspectFill::new(1.0, 1.0 / 3.0).unwrap()
    }

    #[test]
    fn central_is_straight() {
        let curve = limit_curve(&AspectFill::new(2.0, 1.0).unwrap(), 101).unwrap();
        for (&x, &y) in curve.x.iter().zip(&curve.y) {
            assert!((y - 2.0 * (1.0 - x)).abs() < 1e-14);
        }
    }

    #[test]
    fn endpoints_and_implicit_form() {
        let curve = limit_curve(&third(), DEFAULT_GRID).unwrap();
        assert_eq!(curve.y[0], 1.0);
        assert_eq!(*curve.y.last().unwrap(), 0.0);
        // the formula itself reaches 0 at x = 1 through the A equation
        let t = Tilt {
            c: curve.c,
            d: curve.d,
        };
        assert!((1.0 - TiltIntegrals::new(t.c, t.d).f0).abs() < 1e-12);
        for (&x, &y) in curve.x.iter().zip(&curve.y) {
            assert!(curve.implicit_residual(x, y).abs() < 1e-10);
        }
        assert!(curve.y.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn area_equals_fill() {
        let curve = limit_curve(&third(), 16).unwrap();
        let area = adaptive_simpson(&|x: f64| curve.value_at(x), 0.0, 1.0, 1e-13);
        assert!((area - 1.0 / 3.0).abs() < 1e-10, "{area}");
    }

    #[test]
    fn convex() {
        let curve = limit_curve(&AspectFill::new(1.5, 0.3).unwrap(), 200).unwrap();
        assert!(curve
            .y
            .windows(3)
            .all(|w| w[0] - 2.0 * w[1] + w[2] > -1e-14));
    }

    #[test]
    fn petrov_recovers_tilt() {
        let regime = third();
        let t = solve_tilt(&regime).unwrap();
        let e = petrov_endpoints(&regime).unwrap();
        assert!((e.s1 - t.c).abs() < 1e-10 && (e.s2 - t.c - t.d).abs() < 1e-10);
        assert!(e.residual < 1e-10 && e.iterations <= 3);
        let far = petrov_endpoints_from(&regime, (0.5 * t.c, 1.3 * (t.c + t.d))).unwrap();
        assert!((far.s1 - t.c).abs() < 1e-8 && (far.s2 - t.c - t.d).abs() < 1e-8);
        assert!(petrov_endpoints(&AspectFill::new(1.0, 0.5).unwrap()).is_err());
    }

    #[test]
    fn petrov_arc_maps_onto_curve() {
        let regime = AspectFill::new(2.0, 0.6).unwrap();
        let curve = limit_curve(&regime, 64).unwrap();
        let t = Tilt {
            c: curve.c,
            d: curve.d,
        };
        for i in 0..=50 {
            let big_x = t.c + t.d * i as f64 / 50.0;
            let (x1, y1) = petrov_map(regime.a, t, big_x);
            assert!((y1 - curve.value_at(x1)).abs() < 1e-8 || x1 >= 1.0);
        }
    }

    #[test]
    fn distances_of_exact_staircase() {
        let m = 200usize;
        let curve = limit_curve(&third(), DEFAULT_GRID).unwrap();
        let parts: Vec<u64> = (1..=m)
            .map(|i| (m as f64 * curve.value_at(i as f64 / m as f64)).round() as u64)
            .collect();
        let p = Partition {
            width: m as u64,
            parts,
        };
        assert!(boundary_distance(&p, &curve) < 3.0 / m as f64 + 1.0 / m as f64);
        assert!(hausdorff_distance(&p, &curve) < 2.0 / m as f64);
    }
}
