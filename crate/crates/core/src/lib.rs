//! Partitions of `n` whose Young diagram fits in an `m × ℓ` box, i.e. the
//! coefficients `N_n(ℓ, m)` of the Gaussian binomial `[m+ℓ choose m]_q`.
//!
//! The crate is organised around the tilted-geometric picture of a boxed
//! partition: the gaps `x_j = λ_j − λ_{j+1}` (with `λ_0 = ℓ`) are modelled as
//! independent reduced geometrics with log-linear parameters
//! `q_j = exp(−c − d·j/m)`, and `(c, d)` are tuned so that the expected width
//! and area hit `(ℓ, n)`.
//!
//! - [`special`]: dilogarithm and numerically safe primitives.
//! - [`params`]: continuum and discrete tilt solvers, Jacobian, `Δ`.
//! - [`exact`]: big-integer coefficient vectors and consecutive differences.
//! - [`asym`]: asymptotic estimates for `N_n(ℓ, m)` and its differences.
//! - [`lclt`]: Gaussian approximation and an exact joint-PMF oracle.
//! - [`sampler`]: grand-ensemble and conditioned (uniform) sampling.
//! - [`shape`]: the limit curve, its Petrov parametrisation and distances.

pub mod asym;
pub mod error;
pub mod exact;
pub mod lclt;
pub mod params;
pub mod sampler;
pub mod shape;
pub mod special;

pub use error::{Error, Result};
