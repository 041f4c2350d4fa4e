//! Exact and Stirling-approximated weights of exchangeable Gibbs partition
//! models, the generalized Stirling numbers they require, and the Bayesian
//! species-discovery estimators built from them.
//!
//! The crate is organized around the exchangeable partition probability
//! function (EPPF) of a Gibbs partition of parameter `α ∈ (0, 1)`,
//!
//! ```text
//! p(n₁, …, n_k) = V_{n,k} · Π_j (1−α)_{n_j − 1},
//! ```
//!
//! with model-identifying weights `V_{n,k}` satisfying the backward
//! recursion `V_{n,k} = (n − kα)·V_{n+1,k} + V_{n+1,k+1}`. Two families are
//! supported exactly: the two-parameter Poisson-Dirichlet model `PD(α, θ)`
//! and the normalized generalized Gamma model `NGG(α, β)` (the normalized
//! inverse Gaussian model is `NGG(1/2, β)`).
//!
//! Modules:
//! - [`xreal`]: the extended-precision scalar all kernels work in.
//! - [`special`]: factorial products, log-Gamma, upper incomplete Gamma on
//!   the full real parameter line, Mittag-Leffler density, tilting functions.
//! - [`stirling`]: central and non-central generalized Stirling numbers by
//!   three independent routes.
//! - [`models`]: exact weights, EPPF, and the one-step prediction rule.
//! - [`approx`]: all first-order Stirling approximations, cross-validated
//!   against the exact routes.
//! - [`posterior`]: exact posterior quantities for species sampling.
//! - [`sampler`]: sequential prediction-rule simulation and Monte Carlo
//!   oracles.

pub mod approx;
pub mod error;
pub mod models;
pub mod posterior;
pub mod quad;
pub mod sampler;
pub mod special;
pub mod stirling;
pub mod xreal;

pub use error::{Error, Result};
pub use xreal::XReal;
