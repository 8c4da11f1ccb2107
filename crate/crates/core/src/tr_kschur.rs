//! Trace ratio baseline: the Newton-type iteration with the leading
//! eigenvectors of `A - rho B` computed by thick-restart Lanczos on the
//! lazy shifted operator.

use log::warn;
use nalgebra::{DMatrix, DVector};

use crate::dense;
use crate::error::{Error, Result};
use crate::krylov::{self, LanczosError, LanczosOptions};
use crate::operators::OperatorPencil;
use crate::random;
use crate::subspace::{IterationRecord, SolverConfig};
use crate::tr_subspace::TrSolution;

#[derive(Debug, Clone)]
pub struct KschurOptions {
    /// Seed each Lanczos run with the previous leading Ritz vector.
    pub warm_start: bool,
    /// Lanczos residual tolerance as a fraction of the outer tolerance.
    pub inner_tol_ratio: f64,
    pub max_restarts: usize,
}

impl Default for KschurOptions {
    fn default() -> Self {
        Self {
            warm_start: true,
            inner_tol_ratio: 0.1,
            max_restarts: 500,
        }
    }
}

struct Iterate {
    v: DMatrix<f64>,
    rho: f64,
    lambda: DMatrix<f64>,
    residual_norm: f64,
}

/// `rho`, `Lambda = V^T (A - rho B) V` and `||(I - V V^T)(A - rho B) V||`
/// from the images `AV`, `BV`.
fn evaluate(v: DMatrix<f64>, av: &DMatrix<f64>, bv: &DMatrix<f64>) -> Result<Iterate> {
    let den = v.dot(bv);
    if !(den > 0.0) {
        return Err(Error::Unbounded(format!("tr(V^T B V) = {den:e}")));
    }
    let rho = v.dot(av) / den;
    let m = av - bv * rho;
    let lambda = dense::symmetrize(&v.tr_mul(&m));
    let r = &m - &v * &lambda;
    Ok(Iterate {
        residual_norm: dense::spectral_norm(&r),
        v,
        rho,
        lambda,
    })
}

/// Runs the outer iteration with `config.m1`, `config.m2` as the Lanczos
/// restart and maximum basis sizes.
pub fn solve(pencil: &OperatorPencil, config: &SolverConfig, opts: &KschurOptions) -> Result<TrSolution> {
    let p = pencil.dim();
    config.validate(p)?;
    let k = config.k;
    let mut rng = random::rng(config.seed);
    let v = random::orthonormal_matrix(p, k, &mut rng);
    let (av, bv) = pencil.apply_both(&v)?;
    let mut mv_total = k;
    let mut it = evaluate(v, &av, &bv)?;

    let mut lanczos = LanczosOptions::new(k, config.m1, config.m2, opts.inner_tol_ratio * config.tol);
    lanczos.max_restarts = opts.max_restarts;

    let mut trace = Vec::new();
    let mut restarts = 0;
    let mut last_restarts = 0;
    let mut eigengap = None;
    let mut v0: Option<DVector<f64>> = None;

    for outer in 0..config.max_outer {
        trace.push(IterationRecord {
            outer_index: outer,
            mv_total,
            rho: it.rho,
            residual_norm: it.residual_norm,
            subspace_dim: k,
            restarted: false,
            inner_iterations: last_restarts,
            inner_converged: true,
        });
        if it.residual_norm < config.tol {
            return Ok(solution(it, trace, true, mv_total, restarts, eigengap));
        }
        if outer + 1 == config.max_outer {
            break;
        }

        let shifted = pencil.shifted(it.rho)?;
        lanczos.seed = random::derive_seed(config.seed, outer as u64 + 1);
        let pairs = match krylov::lanczos_topk(&shifted, &lanczos, v0.as_ref()) {
            Ok(pairs) => pairs,
            Err(LanczosError::NotConverged(failure)) => {
                warn!(
                    "Lanczos stopped after {} restarts at outer iteration {outer}; using best pairs",
                    failure.restarts
                );
                if let Some(rec) = trace.last_mut() {
                    rec.inner_converged = false;
                }
                failure.best
            }
            Err(LanczosError::Other(e)) => return Err(e),
        };
        mv_total += pairs.mv_count;
        restarts += pairs.restarts;
        last_restarts = pairs.restarts;
        if pairs.ritz_values.len() > k {
            eigengap = Some(pairs.ritz_values[k - 1] - pairs.ritz_values[k]);
        }
        if opts.warm_start {
            v0 = Some(pairs.vectors.column(0).into_owned());
        }

        let (av, bv) = pencil.apply_both(&pairs.vectors)?;
        mv_total += k;
        it = evaluate(pairs.vectors, &av, &bv)?;
        if !it.rho.is_finite() || it.rho.abs() > 1.0 / f64::EPSILON {
            return Err(Error::Unbounded(format!("trace ratio reached {:e}", it.rho)));
        }
    }
    Ok(solution(it, trace, false, mv_total, restarts, eigengap))
}

fn solution(
    it: Iterate,
    trace: Vec<IterationRecord>,
    converged: bool,
    mv_total: usize,
    restarts: usize,
    eigengap: Option<f64>,
) -> TrSolution {
    TrSolution {
        v: it.v,
        rho: it.rho,
        residual_norm: it.residual_norm,
        lambda: it.lambda,
        iterations: trace.len(),
        trace,
        converged,
        stagnated: false,
        mv_total,
        restarts,
        eigengap,
    }
}
