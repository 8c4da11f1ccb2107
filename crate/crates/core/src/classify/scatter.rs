use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::operators::{BlockAction, OperatorPencil, SymmetricOperator};

use super::LabeledDataset;

/// Scatter statistics of a labeled dataset (population normalization).
///
/// `S_B = H_B H_B^T` with columns `sqrt(n_i / n) (mean_i - mean)`,
/// `S_T = X_c^T X_c / n` with `X_c` the centered data, and
/// `S_W = S_T - S_B` applied without forming any `p x p` matrix unless the
/// model was built in precompute mode.
#[derive(Debug, Clone)]
pub struct ScatterModel {
    p: usize,
    n: usize,
    counts: Vec<usize>,
    /// `p x g`.
    means: DMatrix<f64>,
    mean: DVector<f64>,
    h_b: DMatrix<f64>,
    centered: Arc<DMatrix<f64>>,
    within_dense: Option<Arc<DMatrix<f64>>>,
}

/// `v -> X_c^T (X_c v) / n - H_B (H_B^T v)`.
#[derive(Debug)]
struct WithinAction {
    centered: Arc<DMatrix<f64>>,
    h_b: DMatrix<f64>,
    inv_n: f64,
}

impl BlockAction for WithinAction {
    fn dim(&self) -> usize {
        self.centered.ncols()
    }

    fn apply_block(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let xc = self.centered.as_ref();
        let t = xc * x;
        let mut out = xc.tr_mul(&t) * self.inv_n;
        let s = self.h_b.tr_mul(x);
        out.gemm(-1.0, &self.h_b, &s, 1.0);
        out
    }
}

impl ScatterModel {
    /// With `precompute`, `S_W` is formed densely from the group-centered
    /// data.
    pub fn from_data(data: &LabeledDataset, precompute: bool) -> Result<Self> {
        let (n, p, g) = (data.n(), data.p(), data.groups());
        let counts = data.counts();
        if let Some(i) = counts.iter().position(|&c| c == 0) {
            return Err(Error::Data(format!("group {} has no observations", data.label_names()[i])));
        }
        if n < g + 1 {
            return Err(Error::Data(format!("need more observations ({n}) than groups ({g})")));
        }
        let x = data.x();
        let mut sums = DMatrix::zeros(p, g);
        for (i, &label) in data.y().iter().enumerate() {
            let mut col = sums.column_mut(label);
            col += x.row(i).transpose();
        }
        let mut means = sums;
        for (mut col, &c) in means.column_iter_mut().zip(&counts) {
            col /= c as f64;
        }
        let mean: DVector<f64> = x.row_mean().transpose();

        let mut h_b = DMatrix::zeros(p, g);
        for i in 0..g {
            let w = (counts[i] as f64 / n as f64).sqrt();
            h_b.set_column(i, &((means.column(i) - &mean) * w));
        }

        let mut centered = x.clone();
        for mut r in centered.row_iter_mut() {
            r -= mean.transpose();
        }

        let within_dense = if precompute {
            let mut group_centered = x.clone();
            for (i, mut r) in group_centered.row_iter_mut().enumerate() {
                r -= means.column(data.y()[i]).transpose();
            }
            let sw = group_centered.tr_mul(&group_centered) / n as f64;
            Some(Arc::new((&sw + sw.transpose()) * 0.5))
        } else {
            None
        };

        Ok(Self {
            p,
            n,
            counts,
            means,
            mean,
            h_b,
            centered: Arc::new(centered),
            within_dense,
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn groups(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Group means as columns (`p x g`).
    pub fn means(&self) -> &DMatrix<f64> {
        &self.means
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    /// Between-scatter factor `H_B` (`p x g`).
    pub fn h_b(&self) -> &DMatrix<f64> {
        &self.h_b
    }

    pub fn is_precomputed(&self) -> bool {
        self.within_dense.is_some()
    }

    pub fn between_operator(&self) -> Result<SymmetricOperator> {
        SymmetricOperator::gram(self.h_b.clone())
    }

    /// `S_T` through the centered data.
    pub fn total_operator(&self) -> Result<SymmetricOperator> {
        let scaled = self.centered.transpose() / (self.n as f64).sqrt();
        SymmetricOperator::gram(scaled)
    }

    /// `S_W`: the dense matrix in precompute mode, `S_T - S_B` otherwise.
    pub fn within_operator(&self) -> Result<SymmetricOperator> {
        match &self.within_dense {
            Some(sw) => SymmetricOperator::dense(sw.as_ref().clone()),
            None => self.factored_within_operator(),
        }
    }

    /// `S_W = S_T - S_B` regardless of the mode.
    pub fn factored_within_operator(&self) -> Result<SymmetricOperator> {
        SymmetricOperator::from_action(Arc::new(WithinAction {
            centered: Arc::clone(&self.centered),
            h_b: self.h_b.clone(),
            inv_n: 1.0 / self.n as f64,
        }))
    }

    /// Applies `S_W` without touching any MV counter.
    pub fn apply_within(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        match &self.within_dense {
            Some(sw) => sw.as_ref() * x,
            None => WithinAction {
                centered: Arc::clone(&self.centered),
                h_b: self.h_b.clone(),
                inv_n: 1.0 / self.n as f64,
            }
            .apply_block(x),
        }
    }
}

/// The pencil `(S_B, (1 - alpha) S_W + alpha I)`.
///
/// `alpha` must lie in `(0, 1]`; `alpha = 0` is accepted only with
/// `allow_unregularized`, in which case `S_W` may be singular.
pub fn regularized_pencil(model: &ScatterModel, alpha: f64, allow_unregularized: bool) -> Result<OperatorPencil> {
    if !(0.0..=1.0).contains(&alpha) || (alpha == 0.0 && !allow_unregularized) {
        return Err(Error::InvalidConfig(format!(
            "regularization alpha = {alpha} must lie in (0, 1] (0 needs an explicit override)"
        )));
    }
    let a = Arc::new(model.between_operator()?);
    let p = model.p();
    let b = if alpha == 0.0 {
        model.within_operator()?
    } else if alpha == 1.0 {
        SymmetricOperator::identity(p)?
    } else {
        SymmetricOperator::combine(
            1.0 - alpha,
            Arc::new(model.within_operator()?),
            alpha,
            Arc::new(SymmetricOperator::identity(p)?),
        )?
    };
    OperatorPencil::new(a, Arc::new(b), alpha > 0.0)
}
