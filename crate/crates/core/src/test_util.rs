//! Seeded random matrices for unit tests.

use nalgebra::DMatrix;

use crate::random;

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    random::gaussian_matrix(rows, cols, &mut random::rng(seed))
}

pub fn random_symmetric(n: usize, seed: u64) -> DMatrix<f64> {
    let m = random_matrix(n, n, seed);
    (&m + m.transpose()) * 0.5
}

/// SPD with eigenvalues bounded away from zero.
pub fn random_spd(n: usize, seed: u64) -> DMatrix<f64> {
    let m = random_matrix(n, n, seed);
    &m * m.transpose() / n as f64 + DMatrix::identity(n, n) * 0.5
}

pub fn random_orthonormal(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    random::orthonormal_matrix(rows, cols, &mut random::rng(seed))
}
