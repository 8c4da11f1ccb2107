//! Matrix-free trace ratio optimization and Fisher discriminant analysis.

pub mod classify;
pub mod cli;
pub mod dense;
pub mod diagnostics;
pub mod error;
pub mod fda_subspace;
pub mod krylov;
pub mod operators;
pub mod random;
pub mod subspace;
pub mod tr_kschur;
pub mod tr_newton;
pub mod tr_subspace;

#[cfg(test)]
mod test_util;

pub use error::{Error, Result};
