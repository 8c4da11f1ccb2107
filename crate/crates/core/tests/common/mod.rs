#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;
use traceratio::random::{self, SolverRng};

pub fn rng(seed: u64) -> SolverRng {
    random::rng(seed)
}

pub fn symmetric(n: usize, rng: &mut SolverRng) -> DMatrix<f64> {
    let m = random::gaussian_matrix(n, n, rng);
    (&m + m.transpose()) * 0.5
}

/// SPD with eigenvalues in roughly `[0.5, 1.5 + ...]`.
pub fn spd(n: usize, rng: &mut SolverRng) -> DMatrix<f64> {
    let m = random::gaussian_matrix(n, n, rng);
    &m * m.transpose() / n as f64 + DMatrix::identity(n, n) * 0.5
}

pub fn uniform(rng: &mut SolverRng, lo: usize, hi_inclusive: usize) -> usize {
    rng.random_range(lo..=hi_inclusive)
}

pub fn diag(v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(v))
}

/// Orthonormal basis of the column span.
pub fn orth(m: &DMatrix<f64>) -> DMatrix<f64> {
    traceratio::dense::orthonormalize(m)
}
