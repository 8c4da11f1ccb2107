use nalgebra::{DMatrix, DVector};

use crate::dense;
use crate::error::{Error, Result};

use super::{LabeledDataset, ScatterModel};

/// Closest projected centroid in the Mahalanobis metric of the pooled
/// within-group covariance, corrected by log-priors.
#[derive(Debug, Clone)]
pub struct LdaModel {
    /// `p x k`.
    v: DMatrix<f64>,
    /// `k x g`.
    projected_means: DMatrix<f64>,
    /// Lower Cholesky factor of `n / (n - g) V^T S_W V`.
    pooled_factor: DMatrix<f64>,
    log_priors: Vec<f64>,
}

impl LdaModel {
    pub fn fit(v: &DMatrix<f64>, model: &ScatterModel) -> Result<Self> {
        if v.nrows() != model.p() {
            return Err(Error::DimensionMismatch {
                context: "projection rows",
                expected: model.p(),
                found: v.nrows(),
            });
        }
        let (n, g) = (model.n() as f64, model.groups() as f64);
        let projected_within = v.tr_mul(&model.apply_within(v));
        let pooled = dense::symmetrize(&projected_within) * (n / (n - g));
        let pooled_factor = dense::cholesky(&pooled).map_err(|e| match e {
            Error::NotSpd { index, pivot } => Error::Data(format!(
                "projected pooled covariance is singular (pivot {index} = {pivot:e}); increase the regularization alpha"
            )),
            other => other,
        })?;
        Ok(Self {
            projected_means: v.tr_mul(model.means()),
            v: v.clone(),
            pooled_factor,
            log_priors: model.counts().iter().map(|&c| (c as f64 / n).ln()).collect(),
        })
    }

    pub fn k(&self) -> usize {
        self.v.ncols()
    }

    /// Discriminant scores `||V^T (x - mean_i)||^2_{pooled^-1} - 2 log(n_i / n)`.
    pub fn scores(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.v.nrows() {
            return Err(Error::DimensionMismatch {
                context: "observation length",
                expected: self.v.nrows(),
                found: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("observation"));
        }
        let z = self.v.tr_mul(x);
        Ok(self.scores_projected(&z))
    }

    fn scores_projected(&self, z: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.log_priors.len(), |i, _| {
            let diff = z - self.projected_means.column(i);
            let y = self
                .pooled_factor
                .solve_lower_triangular(&diff)
                .expect("Cholesky factor has a positive diagonal");
            y.norm_squared() - 2.0 * self.log_priors[i]
        })
    }

    /// Group index with the smallest score; ties go to the smaller index.
    pub fn predict(&self, x: &DVector<f64>) -> Result<usize> {
        Ok(argmin(&self.scores(x)?))
    }

    /// Predictions for every row of `x` (`n x p`).
    pub fn predict_rows(&self, x: &DMatrix<f64>) -> Result<Vec<usize>> {
        if x.ncols() != self.v.nrows() {
            return Err(Error::DimensionMismatch {
                context: "observation length",
                expected: self.v.nrows(),
                found: x.ncols(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("observations"));
        }
        let projected = x * &self.v;
        Ok(projected
            .row_iter()
            .map(|r| argmin(&self.scores_projected(&r.transpose())))
            .collect())
    }

    /// Fraction of correctly classified rows.
    pub fn accuracy(&self, data: &LabeledDataset) -> Result<f64> {
        let predicted = self.predict_rows(data.x())?;
        let hits = predicted.iter().zip(data.y()).filter(|(a, b)| a == b).count();
        Ok(hits as f64 / data.n() as f64)
    }
}

fn argmin(scores: &DVector<f64>) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s < scores[best] {
            best = i;
        }
    }
    best
}
