//! Explicit stabilized Runge-Kutta-Chebyshev integrators for
//! advection-diffusion-reaction systems `y' = F_D(y) + F_A(y)`.
//!
//! The centrepiece is a second-order scheme that treats the stiff
//! diffusion `F_D` with a damped Chebyshev recurrence and the advection /
//! reaction part `F_A` with three evaluations per step, together with an
//! adaptive driver that picks stage count and damping from the ratio of
//! spectral radii. Also included: first-order variants, stability-region
//! tooling, two method-of-lines benchmarks and a CLI (`arkc`).

// NaN-rejecting guards are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adaptive;
pub mod chebpoly;
pub mod cli;
pub mod coeffs;
pub mod error;
pub mod integrators;
pub mod problems;
pub mod stability;

pub use adaptive::{integrate_adaptive, AdaptiveConfig, DampingPolicy, IntegrationReport};
pub use error::{Error, Result};
pub use integrators::{integrate_fixed, Scheme, SplitOdeProblem};
