//! Numerical laboratory for the stochastic Cahn–Hilliard equation
//!
//! ```text
//! ∂ₜu + Δ²u = Δf(u) + σ(u)Ẇ   on (0, π),   u = Δu = 0 at x ∈ {0, π}
//! ```
//!
//! driven by space-time white noise. The spatial operator is the standard
//! second-difference Laplacian on `n` cells, diagonalized by the orthonormal
//! discrete sine transform; time stepping is the exponential Euler scheme,
//! which applies the exact semigroup `exp(-A_n² τ)` and freezes the drift and
//! noise coefficients at the left endpoint of each step.
//!
//! Module map:
//!
//! - [`grid`]: mesh, fields, difference stencils and the fast DST-I.
//! - [`noise`]: counter-based Brownian sheet increments with exact coarsening.
//! - [`models`]: drift, diffusion, the smooth cutoff `K_R`, initial data.
//! - [`greens`]: exact and discrete Green kernels, kernel-error quadrature.
//! - [`solver`]: the exponential Euler full discretization.
//! - [`malliavin`]: forward tangent propagation and the discrete H-norm.
//! - [`experiments`]: Monte Carlo rate, Hölder, density and Malliavin studies.
//! - [`config`] / [`cli`]: the `chlab` command line front end.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod greens;
pub mod grid;
pub mod malliavin;
pub mod models;
pub mod noise;
pub mod solver;

pub use error::{Error, Result};

/// Crate version embedded in every output manifest.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
