//! Gaussian elimination without pivoting under random perturbation:
//! growth factors, condition numbers, closed-form tail bounds, and the Monte
//! Carlo machinery that checks the bounds empirically.

pub mod bounds;
pub mod cli;
pub mod error;
pub mod gallery;
pub mod lemmalab;
pub mod matlin;
pub mod mc;
pub mod perturb;
pub mod suite;

#[cfg(test)]
mod oracle;

pub use error::{Error, Result};
pub use matlin::Matrix;
