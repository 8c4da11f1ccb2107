//! Davidson-type method for the `k` leading generalized eigenpairs of
//! `(A, B)` with `B` SPD, on an orthonormal search basis.
//!
//! Extraction solves the projected problem `H z = lambda K z`; expansion and
//! the residual-based stopping test are shared with the trace ratio solver.
//! Restart keeps the span of the `m1` leading projected eigenvectors, which
//! leaves the sum of the `k` leading Ritz values unchanged.

use log::warn;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::dense;
use crate::error::{Error, Result};
use crate::operators::OperatorPencil;
use crate::random;
use crate::subspace::{initial_basis, IterationRecord, SolverConfig, SubspaceState};
use crate::tr_subspace::{IterationView, NoObserver, Observer};

#[derive(Debug, Clone, Serialize)]
pub struct FdaSolution {
    /// `p x k` with unit-norm, `B`-orthogonal columns.
    #[serde(skip)]
    pub v: DMatrix<f64>,
    /// Leading generalized eigenvalue approximations, descending.
    #[serde(skip)]
    pub lambda: DVector<f64>,
    /// `v_i^T B v_i` for each column.
    pub b_norms: Vec<f64>,
    pub residual_norm: f64,
    #[serde(skip)]
    pub trace: Vec<IterationRecord>,
    pub converged: bool,
    pub stagnated: bool,
    pub iterations: usize,
    pub mv_total: usize,
    pub restarts: usize,
    /// `lambda_k - lambda_{k+1}` of the final projected pencil.
    pub eigengap: Option<f64>,
}

impl FdaSolution {
    /// Sum of the `k` leading eigenvalue approximations.
    pub fn objective(&self) -> f64 {
        self.lambda.sum()
    }
}

struct Ritz {
    /// `j x k` coefficients of unit-norm Ritz vectors.
    z: DMatrix<f64>,
    lambda: DVector<f64>,
    b_norms: Vec<f64>,
    /// All `j` projected eigenvalues, descending.
    all: DVector<f64>,
    /// `j x j` `K`-orthonormal eigenvectors.
    vectors: DMatrix<f64>,
}

fn extract(state: &SubspaceState, k: usize) -> Result<Ritz> {
    let h = state.h().into_owned();
    let kk = state.k().into_owned();
    let gen = dense::gen_sym_eig(&h, &kk)?;
    let mut z = gen.vectors.columns(0, k).into_owned();
    let mut b_norms = Vec::with_capacity(k);
    for mut col in z.column_iter_mut() {
        // U orthonormal, so ||U z|| = ||z|| and (Uz)^T B (Uz) = z^T K z
        let n = col.norm();
        col /= n;
        b_norms.push(1.0 / (n * n));
    }
    Ok(Ritz {
        lambda: gen.values.rows(0, k).into_owned(),
        z,
        b_norms,
        all: gen.values,
        vectors: gen.vectors,
    })
}

/// `R = AU Z - BU Z diag(lambda)` with the component in `span(U)` removed.
fn residual(state: &SubspaceState, z: &DMatrix<f64>, lambda: &DVector<f64>) -> DMatrix<f64> {
    let mut bz = state.bu() * z;
    for (mut col, l) in bz.column_iter_mut().zip(lambda.iter()) {
        col *= *l;
    }
    let mut r = state.au() * z - bz;
    let c = state.u().tr_mul(&r);
    r.gemm(-1.0, &state.u(), &c, 1.0);
    r
}

/// Rotates the basis onto the span of the `m1` leading projected
/// eigenvectors.
fn restart(state: &mut SubspaceState, ritz: &Ritz, m1: usize) -> Result<()> {
    let q = dense::orthonormalize(&ritz.vectors.columns(0, m1).into_owned());
    if q.ncols() < m1 {
        return Err(Error::NotOrthonormal(format!("restart basis has rank {} < {m1}", q.ncols())));
    }
    state.rotate(&q)
}

pub fn solve_gep(pencil: &OperatorPencil, config: &SolverConfig, init: Option<&DMatrix<f64>>) -> Result<FdaSolution> {
    solve_gep_observed(pencil, config, init, &mut NoObserver)
}

pub fn solve_gep_observed(
    pencil: &OperatorPencil,
    config: &SolverConfig,
    init: Option<&DMatrix<f64>>,
    observer: &mut dyn Observer,
) -> Result<FdaSolution> {
    let p = pencil.dim();
    config.validate(p)?;
    let k = config.k;
    let basis = initial_basis(p, config, init)?;
    let (mut state, mut mv_total) = SubspaceState::from_basis(pencil, &basis, config.m2)?;
    let mut expand_rng = random::rng(random::derive_seed(config.seed, 2));

    let mut trace = Vec::new();
    let mut restarts = 0;
    let mut retried = false;
    let mut outer = 0;
    loop {
        let j = state.dim();
        let mut ritz = extract(&state, k)?;
        let r = residual(&state, &ritz.z, &ritz.lambda);
        let svd = dense::thin_svd(&r)?;
        let residual_norm = svd.values.get(0).copied().unwrap_or(0.0);
        let converged = residual_norm < config.tol;
        let last = outer + 1 >= config.max_outer;
        let restart_now = !converged && !last && j >= config.m2;

        let record = IterationRecord {
            outer_index: outer,
            mv_total,
            rho: ritz.lambda.sum(),
            residual_norm,
            subspace_dim: j,
            restarted: restart_now,
            inner_iterations: 0,
            inner_converged: true,
        };
        let lambda_mat = DMatrix::from_diagonal(&ritz.lambda);
        observer.iteration(&IterationView {
            record: &record,
            state: &state,
            z: &ritz.z,
            lambda: &lambda_mat,
            residual: &r,
        });
        trace.push(record);
        outer += 1;

        if converged || last {
            return Ok(finish(&state, &ritz, k, residual_norm, trace, converged, false, mv_total, restarts));
        }

        if restart_now {
            restart(&mut state, &ritz, config.m1)?;
            restarts += 1;
            // same span, so re-extraction returns the current iterate in the
            // new coordinates
            ritz = extract(&state, k)?;
            observer.restarted(&state, &ritz.z, ritz.lambda.sum());
        }

        match state.expand_from_svd(pencil, &svd, config.block, config.sv_drop_ratio) {
            Ok(added) => {
                mv_total += added;
                retried = false;
            }
            Err(Error::EmptyExpansion) if !retried => match state.expand_random(pencil, &mut expand_rng) {
                Ok(added) => {
                    mv_total += added;
                    retried = true;
                }
                Err(Error::EmptyExpansion) => return Ok(finish(&state, &ritz, k, residual_norm, trace, false, true, mv_total, restarts)),
                Err(e) => return Err(e),
            },
            Err(Error::EmptyExpansion) => {
                warn!("subspace expansion stagnated at outer iteration {outer}");
                return Ok(finish(&state, &ritz, k, residual_norm, trace, false, true, mv_total, restarts));
            }
            Err(e) => return Err(e),
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    state: &SubspaceState,
    ritz: &Ritz,
    k: usize,
    residual_norm: f64,
    trace: Vec<IterationRecord>,
    converged: bool,
    stagnated: bool,
    mv_total: usize,
    restarts: usize,
) -> FdaSolution {
    let eigengap = (ritz.all.len() > k).then(|| ritz.all[k - 1] - ritz.all[k]);
    FdaSolution {
        v: state.u() * &ritz.z,
        lambda: ritz.lambda.clone(),
        b_norms: ritz.b_norms.clone(),
        residual_norm,
        iterations: trace.len(),
        trace,
        converged,
        stagnated,
        mv_total,
        restarts,
        eigengap,
    }
}

/// Rescales the columns of a solution to `v^T B v = 1`.
pub fn fda_projection(solution: &FdaSolution) -> Result<DMatrix<f64>> {
    let mut v = solution.v.clone();
    for (i, (mut col, &bn)) in v.column_iter_mut().zip(&solution.b_norms).enumerate() {
        if !(bn > 0.0) || !bn.is_finite() {
            return Err(Error::NotSpd { index: i, pivot: bn });
        }
        col /= bn.sqrt();
    }
    Ok(v)
}
