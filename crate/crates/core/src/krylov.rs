//! Thick-restart Lanczos (the symmetric Krylov-Schur method) for the
//! leading eigenpairs of a [`SymmetricOperator`].
//!
//! The method maintains the relation `Op U_j = U_j T_j + u b^T` with an
//! orthonormal basis `U_j`, a symmetric projected matrix `T_j` and a spike
//! vector `b`. When `j` reaches `m2`, the basis is compressed onto the
//! `m1` leading Ritz vectors, which keeps the relation intact with a
//! diagonal `T` and a rotated spike.

use nalgebra::{DMatrix, DVector};

use crate::dense;
use crate::error::{Error, Result};
use crate::operators::SymmetricOperator;
use crate::random;

#[derive(Debug, Clone)]
pub struct LanczosOptions {
    /// Number of wanted (largest) eigenpairs.
    pub k: usize,
    /// Basis size kept at restart.
    pub m1: usize,
    /// Maximum basis size.
    pub m2: usize,
    /// A pair is accepted when `||Op v - theta v|| <= tol * max(1, |theta|)`.
    pub tol: f64,
    pub max_restarts: usize,
    pub seed: u64,
}

impl LanczosOptions {
    pub fn new(k: usize, m1: usize, m2: usize, tol: f64) -> Self {
        Self {
            k,
            m1,
            m2,
            tol,
            max_restarts: 500,
            seed: 0,
        }
    }
}

/// Leading eigenpairs returned by [`lanczos_topk`].
#[derive(Debug, Clone)]
pub struct EigenPairs {
    /// `k` values, descending.
    pub values: DVector<f64>,
    /// `p x k`, orthonormal.
    pub vectors: DMatrix<f64>,
    /// Residual norm of each returned pair from the Krylov relation.
    pub residual_norms: Vec<f64>,
    /// All Ritz values of the final projected matrix, descending.
    pub ritz_values: DVector<f64>,
    pub mv_count: usize,
    pub restarts: usize,
}

/// Error payload when the restart budget runs out.
#[derive(Debug, Clone)]
pub struct LanczosFailure {
    pub restarts: usize,
    pub best: EigenPairs,
}

#[derive(Debug)]
pub enum LanczosError {
    NotConverged(Box<LanczosFailure>),
    Other(Error),
}

impl From<Error> for LanczosError {
    fn from(e: Error) -> Self {
        LanczosError::Other(e)
    }
}

impl From<LanczosError> for Error {
    fn from(e: LanczosError) -> Self {
        match e {
            LanczosError::Other(e) => e,
            LanczosError::NotConverged(f) => Error::InvalidConfig(format!(
                "Lanczos did not converge after {} restarts ({} MV products)",
                f.restarts, f.best.mv_count
            )),
        }
    }
}

impl std::fmt::Display for LanczosError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LanczosError::NotConverged(fail) => write!(
                f,
                "Lanczos did not converge after {} restarts ({} MV products)",
                fail.restarts, fail.best.mv_count
            ),
            LanczosError::Other(e) => e.fmt(f),
        }
    }
}

impl std::error::Error for LanczosError {}

/// Below this relative norm a new Krylov direction counts as breakdown.
const BREAKDOWN: f64 = 1e-14;

struct Relation {
    /// Columns `0..j` hold `U_j`, column `j` holds the continuation vector.
    basis: DMatrix<f64>,
    t: DMatrix<f64>,
    spike: DVector<f64>,
    j: usize,
    /// `U_j` spans the whole space; no continuation vector exists.
    exhausted: bool,
    mv: usize,
}

impl Relation {
    fn ritz(&self) -> Result<dense::EigenDecomposition> {
        let t = self.t.view((0, 0), (self.j, self.j)).into_owned();
        dense::sym_eig(&t)
    }

    fn residuals(&self, eig: &dense::EigenDecomposition, count: usize) -> Vec<f64> {
        let b = self.spike.rows(0, self.j);
        (0..count).map(|i| b.dot(&eig.vectors.column(i)).abs()).collect()
    }

    fn pairs(&self, eig: &dense::EigenDecomposition, k: usize, restarts: usize) -> EigenPairs {
        let u = self.basis.columns(0, self.j);
        let y = eig.vectors.columns(0, k);
        EigenPairs {
            values: eig.values.rows(0, k).into_owned(),
            vectors: u * y,
            residual_norms: self.residuals(eig, k),
            ritz_values: eig.values.clone(),
            mv_count: self.mv,
            restarts,
        }
    }

    /// Fresh unit vector orthogonal to the current basis (columns `0..=upto`).
    fn random_direction(&self, upto: usize, rng: &mut random::SolverRng) -> Option<DVector<f64>> {
        let p = self.basis.nrows();
        if upto >= p {
            return None;
        }
        let u = self.basis.columns(0, upto).into_owned();
        for _ in 0..8 {
            let g = random::gaussian_matrix(p, 1, rng);
            let q = dense::project_and_normalize(&g, &u);
            if q.ncols() == 1 {
                return Some(q.column(0).into_owned());
            }
        }
        None
    }

    /// Applies the operator to the continuation vector and extends the
    /// relation by one column.
    fn expand(&mut self, op: &SymmetricOperator, rng: &mut random::SolverRng) -> Result<()> {
        let j = self.j;
        let next = self.basis.columns(j, 1).into_owned();
        let mut w = op.apply(&next)?.column(0).into_owned();
        self.mv += 1;
        let raw = w.norm();

        let u = self.basis.columns(0, j + 1);
        let mut h = u.tr_mul(&w);
        w.gemv(-1.0, &u, &h, 1.0);
        let h2 = u.tr_mul(&w);
        w.gemv(-1.0, &u, &h2, 1.0);
        h += h2;

        for i in 0..j {
            self.t[(j, i)] = self.spike[i];
            self.t[(i, j)] = h[i];
        }
        self.t[(j, j)] = h[j];
        self.spike.fill(0.0);

        let beta = w.norm();
        self.j = j + 1;
        if beta > BREAKDOWN * raw.max(h.norm()) && beta > 0.0 {
            self.spike[j] = beta;
            self.basis.set_column(j + 1, &(w / beta));
        } else {
            // invariant subspace found: continue with a fresh direction and
            // no coupling
            match self.random_direction(j + 1, rng) {
                Some(v) => self.basis.set_column(j + 1, &v),
                None => self.exhausted = true,
            }
        }
        Ok(())
    }

    /// Compresses onto the `m1` leading Ritz vectors.
    fn restart(&mut self, eig: &dense::EigenDecomposition, m1: usize) {
        let j = self.j;
        let y = eig.vectors.columns(0, m1);
        let kept = self.basis.columns(0, j) * y;
        let next = self.basis.column(j).into_owned();
        let spike = y.tr_mul(&self.spike.rows(0, j));
        self.basis.columns_mut(0, m1).copy_from(&kept);
        self.basis.set_column(m1, &next);
        self.t.fill(0.0);
        for i in 0..m1 {
            self.t[(i, i)] = eig.values[i];
        }
        self.spike.fill(0.0);
        self.spike.rows_mut(0, m1).copy_from(&spike);
        self.j = m1;
    }
}

/// Computes the `k` largest eigenpairs of `op` by thick-restart Lanczos
/// with full re-orthogonalization.
///
/// `v0` seeds the Krylov space (a random vector is used otherwise).
pub fn lanczos_topk(
    op: &SymmetricOperator,
    opts: &LanczosOptions,
    v0: Option<&DVector<f64>>,
) -> std::result::Result<EigenPairs, LanczosError> {
    let p = op.dim();
    let LanczosOptions { k, m1, m2, tol, .. } = *opts;
    if !(k >= 1 && k <= m1 && m1 < m2 && m2 <= p) {
        return Err(Error::InvalidConfig(format!(
            "Lanczos needs 1 <= k <= m1 < m2 <= p, got k={k} m1={m1} m2={m2} p={p}"
        ))
        .into());
    }
    let mut rng = random::rng(opts.seed);

    let mut basis = DMatrix::zeros(p, m2 + 1);
    let start = match v0 {
        Some(v) if v.len() == p && v.norm() > 0.0 && v.iter().all(|x| x.is_finite()) => v / v.norm(),
        Some(v) if v.len() != p => {
            return Err(Error::DimensionMismatch {
                context: "Lanczos start vector",
                expected: p,
                found: v.len(),
            }
            .into())
        }
        _ => {
            let g = random::gaussian_matrix(p, 1, &mut rng).column(0).into_owned();
            &g / g.norm()
        }
    };
    basis.set_column(0, &start);

    let mut rel = Relation {
        basis,
        t: DMatrix::zeros(m2, m2),
        spike: DVector::zeros(m2),
        j: 0,
        exhausted: false,
        mv: 0,
    };
    let mut restarts = 0;

    loop {
        rel.expand(op, &mut rng)?;
        if rel.j < k && !rel.exhausted {
            continue;
        }
        let eig = rel.ritz()?;
        let res = rel.residuals(&eig, k.min(rel.j));
        let done = rel.j >= k
            && res
                .iter()
                .zip(eig.values.iter())
                .all(|(r, theta)| *r <= tol * theta.abs().max(1.0));
        if done || rel.exhausted {
            if rel.j < k {
                return Err(Error::InvalidConfig(format!(
                    "operator of dimension {p} cannot supply {k} eigenpairs"
                ))
                .into());
            }
            return Ok(rel.pairs(&eig, k, restarts));
        }
        if rel.j == m2 {
            if restarts >= opts.max_restarts {
                return Err(LanczosError::NotConverged(Box::new(LanczosFailure {
                    restarts,
                    best: rel.pairs(&eig, k, restarts),
                })));
            }
            rel.restart(&eig, m1);
            restarts += 1;
        }
    }
}
