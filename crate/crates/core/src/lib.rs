//! Heat kernel measures on model geometries and numerical checks of
//! dimension-independent heat semigroup estimates.
//!
//! The crate is organised bottom-up:
//!
//! - [`measure`]: exact Markov kernels on finite spaces and the `Lᵖ`
//!   contraction of their averaging operators.
//! - [`geometry`]: Euclidean space, hyperbolic 3-space and the Heisenberg
//!   group, with distances, exact heat kernels, radial quadrature and a
//!   catalog of harmonic and subharmonic test functions.
//! - [`diffusion`]: seeded samplers for the diffusion generated by `½Δ`
//!   (or `½ΣY²`), producing endpoint batches and probability probes.
//! - [`gamma`]: exact polynomial Γ-calculus on the Heisenberg group and the
//!   generalized curvature-dimension check.
//! - [`estimators`]: `Lᵖ` norms and heat operators by Monte Carlo and by
//!   quadrature.
//! - [`verifier`]: the inequality suites, reports and the CLI driver.

// `!(x > 0.0)` is used on purpose so that NaN is rejected alongside out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diffusion;
pub mod error;
pub mod estimators;
pub mod gamma;
pub mod geometry;
pub mod measure;
pub mod quadrature;
pub mod verifier;

pub use error::{Error, Result};
pub use geometry::{Geometry, Point};
