//! Seeded random blocks used for solver initialization and by tests.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dense;

pub type SolverRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SolverRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent stream seed from a root seed and an index
/// (fold, repetition, ...).
pub fn derive_seed(root: u64, index: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = root ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x6A09_E667_F3BC_C909);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut SolverRng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// QR of a Gaussian block: a `rows x cols` matrix with orthonormal columns.
pub fn orthonormal_matrix(rows: usize, cols: usize, rng: &mut SolverRng) -> DMatrix<f64> {
    assert!(cols <= rows, "cannot draw {cols} orthonormal columns in dimension {rows}");
    loop {
        let g = gaussian_matrix(rows, cols, rng);
        let q = dense::orthonormalize(&g);
        if q.ncols() == cols {
            return q;
        }
    }
}
