//! Search-subspace state shared by the Davidson-type solvers: an
//! orthonormal basis with cached operator images and projected pencil,
//! solver configuration, per-iteration records and block expansion.

use nalgebra::{DMatrix, DMatrixView};
use serde::{Deserialize, Serialize};

use crate::dense::{self, ThinSvd};
use crate::error::{Error, Result};
use crate::operators::OperatorPencil;
use crate::random;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Reduced dimension.
    pub k: usize,
    /// Basis size after restart.
    pub m1: usize,
    /// Maximum basis size.
    pub m2: usize,
    /// Expansion block size, `1 <= block <= k`.
    pub block: usize,
    /// Threshold on the spectral norm of the residual matrix.
    pub tol: f64,
    pub max_outer: usize,
    /// Residual threshold of the inner Newton-type solver.
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    /// Singular vectors of the residual with `sigma_i < ratio * sigma_1`
    /// are not used for expansion.
    pub sv_drop_ratio: f64,
    pub seed: u64,
}

impl SolverConfig {
    /// Defaults: `m1 = 2k`, `m2 = 4k`, block 1, `tol = 1e-6`.
    pub fn new(k: usize) -> Self {
        Self {
            k,
            m1: 2 * k,
            m2: 4 * k,
            block: 1,
            tol: 1e-6,
            max_outer: 100_000,
            inner_tol: 1e-8,
            inner_max_iter: 100,
            sv_drop_ratio: 1e-4,
            seed: 0,
        }
    }

    pub fn with_sizes(mut self, m1: usize, m2: usize) -> Self {
        self.m1 = m1;
        self.m2 = m2;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_block(mut self, block: usize) -> Self {
        self.block = block;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Checks `k <= m1 < m2 <= p` and `1 <= block <= k`.
    pub fn validate(&self, p: usize) -> Result<()> {
        let Self { k, m1, m2, block, .. } = *self;
        if k == 0 || k > m1 || m1 >= m2 || m2 > p {
            return Err(Error::InvalidConfig(format!(
                "need 1 <= k <= m1 < m2 <= p, got k={k} m1={m1} m2={m2} p={p}"
            )));
        }
        if block == 0 || block > k {
            return Err(Error::InvalidConfig(format!("block size {block} must lie in [1, {k}]")));
        }
        if !(self.tol > 0.0) || !(self.inner_tol > 0.0) {
            return Err(Error::InvalidConfig("tolerances must be positive".into()));
        }
        if !(self.sv_drop_ratio >= 0.0 && self.sv_drop_ratio < 1.0) {
            return Err(Error::InvalidConfig("sv_drop_ratio must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// One outer iteration of a subspace solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub outer_index: usize,
    /// Cumulative number of pencil column applications (each applies both
    /// A and B to one vector).
    pub mv_total: usize,
    /// Trace ratio (TR) or sum of the k leading Ritz values (FDA).
    pub rho: f64,
    pub residual_norm: f64,
    pub subspace_dim: usize,
    pub restarted: bool,
    pub inner_iterations: usize,
    /// False when the inner solver hit its iteration cap.
    pub inner_converged: bool,
}

/// Orthonormal basis `U` (`p x j`) with cached `AU`, `BU` and the projected
/// pencil `H = U^T A U`, `K = U^T B U`. Storage is preallocated for `m2`
/// columns.
#[derive(Debug, Clone)]
pub struct SubspaceState {
    u: DMatrix<f64>,
    au: DMatrix<f64>,
    bu: DMatrix<f64>,
    h: DMatrix<f64>,
    k: DMatrix<f64>,
    j: usize,
}

impl SubspaceState {
    /// Builds the state from an orthonormal basis, applying both operators
    /// to every column. Returns the state and the number of MV products.
    pub fn from_basis(pencil: &OperatorPencil, basis: &DMatrix<f64>, capacity: usize) -> Result<(Self, usize)> {
        let p = pencil.dim();
        if basis.nrows() != p {
            return Err(Error::DimensionMismatch {
                context: "initial basis",
                expected: p,
                found: basis.nrows(),
            });
        }
        let err = dense::orthonormality_error(basis);
        if err > 1e-8 {
            return Err(Error::NotOrthonormal(format!("initial basis deviates by {err:e}")));
        }
        let j = basis.ncols();
        let cap = capacity.max(j);
        let mut state = Self {
            u: DMatrix::zeros(p, cap),
            au: DMatrix::zeros(p, cap),
            bu: DMatrix::zeros(p, cap),
            h: DMatrix::zeros(cap, cap),
            k: DMatrix::zeros(cap, cap),
            j: 0,
        };
        state.append(pencil, basis)?;
        Ok((state, j))
    }

    pub fn dim(&self) -> usize {
        self.j
    }

    pub fn capacity(&self) -> usize {
        self.u.ncols()
    }

    pub fn u(&self) -> DMatrixView<'_, f64> {
        self.u.columns(0, self.j)
    }

    pub fn au(&self) -> DMatrixView<'_, f64> {
        self.au.columns(0, self.j)
    }

    pub fn bu(&self) -> DMatrixView<'_, f64> {
        self.bu.columns(0, self.j)
    }

    pub fn h(&self) -> DMatrixView<'_, f64> {
        self.h.view((0, 0), (self.j, self.j))
    }

    pub fn k(&self) -> DMatrixView<'_, f64> {
        self.k.view((0, 0), (self.j, self.j))
    }

    /// `H - rho K`.
    pub fn shifted(&self, rho: f64) -> DMatrix<f64> {
        self.h() - self.k() * rho
    }

    /// Appends orthonormal columns `w` (orthogonal to `U`) and updates the
    /// caches with exactly `w.ncols()` pencil applications.
    pub fn append(&mut self, pencil: &OperatorPencil, w: &DMatrix<f64>) -> Result<()> {
        let m = w.ncols();
        let j = self.j;
        if j + m > self.capacity() {
            return Err(Error::InvalidConfig(format!(
                "subspace capacity {} exceeded by expansion to {}",
                self.capacity(),
                j + m
            )));
        }
        if m == 0 {
            return Ok(());
        }
        let (aw, bw) = pencil.apply_both(w)?;
        let u_old = self.u.columns(0, j);
        let h12 = u_old.tr_mul(&aw);
        let k12 = u_old.tr_mul(&bw);
        let h22 = dense::symmetrize(&w.tr_mul(&aw));
        let k22 = dense::symmetrize(&w.tr_mul(&bw));

        self.h.view_mut((0, j), (j, m)).copy_from(&h12);
        self.h.view_mut((j, 0), (m, j)).copy_from(&h12.transpose());
        self.h.view_mut((j, j), (m, m)).copy_from(&h22);
        self.k.view_mut((0, j), (j, m)).copy_from(&k12);
        self.k.view_mut((j, 0), (m, j)).copy_from(&k12.transpose());
        self.k.view_mut((j, j), (m, m)).copy_from(&k22);
        self.u.columns_mut(j, m).copy_from(w);
        self.au.columns_mut(j, m).copy_from(&aw);
        self.bu.columns_mut(j, m).copy_from(&bw);
        self.j = j + m;
        Ok(())
    }

    /// Replaces the basis by `U Q` (`Q` is `j x r` with orthonormal
    /// columns), rotating all caches without operator applications.
    pub fn rotate(&mut self, q: &DMatrix<f64>) -> Result<()> {
        if q.nrows() != self.j || q.ncols() > self.j {
            return Err(Error::DimensionMismatch {
                context: "subspace rotation",
                expected: self.j,
                found: q.nrows(),
            });
        }
        let r = q.ncols();
        let u = self.u() * q;
        let au = self.au() * q;
        let bu = self.bu() * q;
        let h = dense::symmetrize(&(q.transpose() * self.h() * q));
        let k = dense::symmetrize(&(q.transpose() * self.k() * q));
        self.u.columns_mut(0, r).copy_from(&u);
        self.au.columns_mut(0, r).copy_from(&au);
        self.bu.columns_mut(0, r).copy_from(&bu);
        self.h.view_mut((0, 0), (r, r)).copy_from(&h);
        self.k.view_mut((0, 0), (r, r)).copy_from(&k);
        self.j = r;
        Ok(())
    }

    /// Selects expansion vectors from the thin SVD of the residual: the
    /// leading `min(m, capacity - j)` left singular vectors with
    /// `sigma_i >= drop_ratio * sigma_1`, orthonormalized against `U`.
    /// Returns the number of columns added (also the MV cost).
    pub fn expand_from_svd(
        &mut self,
        pencil: &OperatorPencil,
        svd: &ThinSvd,
        m: usize,
        drop_ratio: f64,
    ) -> Result<usize> {
        let room = self.capacity() - self.j;
        let take = m.min(room);
        if take == 0 || svd.values.is_empty() || svd.values[0] == 0.0 {
            return Err(Error::EmptyExpansion);
        }
        let sigma1 = svd.values[0];
        let count = svd
            .values
            .iter()
            .take(take)
            .take_while(|&&s| s >= drop_ratio * sigma1)
            .count();
        let candidates = svd.u.columns(0, count).into_owned();
        let w = dense::project_and_normalize(&candidates, &self.u().into_owned());
        if w.ncols() == 0 {
            return Err(Error::EmptyExpansion);
        }
        self.append(pencil, &w)?;
        Ok(w.ncols())
    }

    /// Block expansion with the residual matrix `R` (`p x k`).
    pub fn expand(&mut self, pencil: &OperatorPencil, r: &DMatrix<f64>, m: usize, drop_ratio: f64) -> Result<usize> {
        let svd = dense::thin_svd(r)?;
        self.expand_from_svd(pencil, &svd, m, drop_ratio)
    }

    /// Adds one random direction orthogonal to `U`; used when the residual
    /// offers nothing new.
    pub fn expand_random(&mut self, pencil: &OperatorPencil, rng: &mut random::SolverRng) -> Result<usize> {
        if self.j >= self.capacity() || self.j >= self.u.nrows() {
            return Err(Error::EmptyExpansion);
        }
        let g = random::gaussian_matrix(self.u.nrows(), 1, rng);
        let w = dense::project_and_normalize(&g, &self.u().into_owned());
        if w.ncols() == 0 {
            return Err(Error::EmptyExpansion);
        }
        self.append(pencil, &w)?;
        Ok(1)
    }
}

/// Seeded random `p x m1` starting basis, or the caller's basis after
/// validation.
pub(crate) fn initial_basis(p: usize, config: &SolverConfig, init: Option<&DMatrix<f64>>) -> Result<DMatrix<f64>> {
    match init {
        Some(u) => {
            if u.nrows() != p {
                return Err(Error::DimensionMismatch {
                    context: "initial basis rows",
                    expected: p,
                    found: u.nrows(),
                });
            }
            if u.ncols() < config.k || u.ncols() >= config.m2 {
                return Err(Error::InvalidConfig(format!(
                    "initial basis has {} columns; need k <= columns < m2",
                    u.ncols()
                )));
            }
            Ok(u.clone())
        }
        None => Ok(random::orthonormal_matrix(p, config.m1, &mut random::rng(config.seed))),
    }
}
