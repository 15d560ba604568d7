//! Localized linear-Gaussian and nonlinear inverse problems, blocked Gibbs
//! and localized Metropolis-within-Gibbs samplers, and their diagnostics.

pub mod band_linalg;
pub mod diagnostics;
pub mod error;
pub mod linear_gaussian;
pub mod localization;
pub mod problems;
pub mod samplers;

pub use error::{Error, Result};
