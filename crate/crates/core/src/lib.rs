//! Adaptive function-space MCMC for latent Gaussian models.
//!
//! Fields are represented by whitened Karhunen–Loève coefficients
//! (`gaussian`), targets supply a potential and its derivatives
//! (`models`), and the kernels in `samplers` are Metropolis–Hastings moves
//! that stay well defined as the truncation dimension grows. `adaptation`
//! learns a diagonal Gaussian reference measure and the step size online,
//! `chain` ties one kernel to one adaptation state, and `diagnostics`
//! provides ACF and ESS estimates.

pub mod adaptation;
pub mod chain;
pub mod dct;
pub mod diagnostics;
pub mod error;
pub mod gaussian;
pub mod models;
pub mod rng;
pub mod samplers;

pub use error::{Error, Result};
