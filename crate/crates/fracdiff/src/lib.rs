//! Solvers and verification oracles for time-fractional diffusion problems
//! with nonlocal time kernels of variable-order, distributed-order and
//! multiterm type.
//!
//! The solution operators are realized as inverse-Laplace quadratures over a
//! keyhole contour applied to complex-shifted elliptic resolvents. Alongside
//! the solvers, the [`verify`] module provides independent residual checks:
//! Mittag-Leffler eigenmode references, Laplace-domain residuals,
//! distributional (weak-form) residuals, operator-norm exponent probes and
//! contour self-tests.

use num_complex::Complex64;

pub mod config;
pub mod contour;
pub mod elliptic;
pub mod kernels;
pub mod run;
pub mod solvers;
pub mod special;
pub mod verify;

/// Errors shared by all modules.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("index error: {0}")]
    Index(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("linear solve failed: {0}")]
    LinearSolve(String),
    #[error("solver failure at p = {p}: {msg}")]
    Solver { p: Complex64, msg: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
