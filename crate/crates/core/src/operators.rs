//! Matrix-free symmetric operators.
//!
//! Every operator acts on blocks of column vectors. Each operator keeps a
//! counter of the number of columns it has been applied to, which is the
//! cost currency (MV products) reported by the solvers.

use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// A user-supplied symmetric block action, e.g. a scatter matrix applied
/// through the data matrix without ever forming it.
pub trait BlockAction: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    /// Applies the operator to every column of `x` (`dim() x b`).
    fn apply_block(&self, x: &DMatrix<f64>) -> DMatrix<f64>;
}

#[derive(Debug)]
pub enum OperatorKind {
    Dense(DMatrix<f64>),
    /// `S = G * G^T`, stored through its factor `G` (p x r).
    Gram(DMatrix<f64>),
    ScaledIdentity(f64),
    Combination {
        c1: f64,
        op1: Arc<SymmetricOperator>,
        c2: f64,
        op2: Arc<SymmetricOperator>,
    },
    Action(Arc<dyn BlockAction>),
}

/// A p x p symmetric operator.
#[derive(Debug)]
pub struct SymmetricOperator {
    dim: usize,
    kind: OperatorKind,
    mv: AtomicUsize,
}

impl SymmetricOperator {
    fn with_kind(dim: usize, kind: OperatorKind) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidConfig("operator dimension must be positive".into()));
        }
        Ok(Self {
            dim,
            kind,
            mv: AtomicUsize::new(0),
        })
    }

    /// Explicit symmetric matrix. Asymmetry above `1e-10 * max|m_ij|` is
    /// rejected; smaller asymmetry is removed by symmetrizing.
    pub fn dense(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                context: "dense operator (square)",
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dense operator"));
        }
        let scale = m.amax().max(f64::MIN_POSITIVE);
        let asym = (&m - m.transpose()).amax();
        if asym > 1e-10 * scale {
            return Err(Error::InvalidConfig(format!(
                "dense operator is not symmetric (max asymmetry {asym:e})"
            )));
        }
        let sym = (&m + m.transpose()) * 0.5;
        Self::with_kind(sym.nrows(), OperatorKind::Dense(sym))
    }

    /// Diagonal operator.
    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        Self::dense(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(diag)))
    }

    /// `G * G^T` without forming the product.
    pub fn gram(factor: DMatrix<f64>) -> Result<Self> {
        if factor.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("gram factor"));
        }
        Self::with_kind(factor.nrows(), OperatorKind::Gram(factor))
    }

    /// `alpha * I_p`.
    pub fn scaled_identity(dim: usize, alpha: f64) -> Result<Self> {
        Self::with_kind(dim, OperatorKind::ScaledIdentity(alpha))
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::scaled_identity(dim, 1.0)
    }

    /// Lazy linear combination `c1 * op1 + c2 * op2`.
    pub fn combine(
        c1: f64,
        op1: Arc<SymmetricOperator>,
        c2: f64,
        op2: Arc<SymmetricOperator>,
    ) -> Result<Self> {
        if op1.dim != op2.dim {
            return Err(Error::DimensionMismatch {
                context: "combine",
                expected: op1.dim,
                found: op2.dim,
            });
        }
        let dim = op1.dim;
        Self::with_kind(dim, OperatorKind::Combination { c1, op1, c2, op2 })
    }

    pub fn from_action(action: Arc<dyn BlockAction>) -> Result<Self> {
        let dim = action.dim();
        Self::with_kind(dim, OperatorKind::Action(action))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &OperatorKind {
        &self.kind
    }

    /// Number of column applications performed so far.
    pub fn mv_count(&self) -> usize {
        self.mv.load(Ordering::Relaxed)
    }

    pub fn reset_mv_count(&self) {
        self.mv.store(0, Ordering::Relaxed);
    }

    /// Returns `op * x` for a `p x b` block and adds `b` to the MV counter.
    pub fn apply(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.nrows() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "operator apply",
                expected: self.dim,
                found: x.nrows(),
            });
        }
        self.mv.fetch_add(x.ncols(), Ordering::Relaxed);
        if x.ncols() == 0 {
            return Ok(DMatrix::zeros(self.dim, 0));
        }
        let out = match &self.kind {
            OperatorKind::Dense(m) => m * x,
            OperatorKind::Gram(g) => g * (g.transpose() * x),
            OperatorKind::ScaledIdentity(alpha) => x * *alpha,
            OperatorKind::Combination { c1, op1, c2, op2 } => {
                let y1 = op1.apply(x)?;
                let y2 = op2.apply(x)?;
                y1 * *c1 + y2 * *c2
            }
            OperatorKind::Action(a) => {
                let y = a.apply_block(x);
                if y.nrows() != self.dim || y.ncols() != x.ncols() {
                    return Err(Error::DimensionMismatch {
                        context: "block action output",
                        expected: self.dim,
                        found: y.nrows(),
                    });
                }
                y
            }
        };
        Ok(out)
    }

    /// Applies the operator to the identity, yielding the explicit matrix.
    /// Costs `p` MV products; meant for small instances and tests.
    pub fn densify(&self) -> Result<DMatrix<f64>> {
        let m = self.apply(&DMatrix::identity(self.dim, self.dim))?;
        Ok((&m + m.transpose()) * 0.5)
    }
}

/// The pair (A, B) of a trace ratio or generalized eigenvalue problem.
#[derive(Debug, Clone)]
pub struct OperatorPencil {
    pub a: Arc<SymmetricOperator>,
    pub b: Arc<SymmetricOperator>,
    /// The caller vouches that `b` is SPD (possibly after regularization).
    pub spd_asserted: bool,
}

impl OperatorPencil {
    pub fn new(a: Arc<SymmetricOperator>, b: Arc<SymmetricOperator>, spd_asserted: bool) -> Result<Self> {
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch {
                context: "pencil",
                expected: a.dim(),
                found: b.dim(),
            });
        }
        Ok(Self { a, b, spd_asserted })
    }

    /// Pencil of two explicit matrices.
    pub fn from_dense(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        Self::new(
            Arc::new(SymmetricOperator::dense(a)?),
            Arc::new(SymmetricOperator::dense(b)?),
            true,
        )
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    /// Computes `(A X, B X)`; the two applications run concurrently.
    pub fn apply_both(&self, x: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let (ax, bx) = rayon::join(|| self.a.apply(x), || self.b.apply(x));
        Ok((ax?, bx?))
    }

    /// Lazy `A - rho * B`.
    pub fn shifted(&self, rho: f64) -> Result<SymmetricOperator> {
        SymmetricOperator::combine(1.0, Arc::clone(&self.a), -rho, Arc::clone(&self.b))
    }
}
