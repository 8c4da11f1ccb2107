//! Davidson-type subspace method for the trace ratio problem.
//!
//! Each outer iteration solves the projected problem on `(H, K)`, forms the
//! residual `R = A V - rho B V - V Lambda`, stops when `||R|| < tol`, and
//! otherwise expands the basis with leading left singular vectors of `R`.
//! When the basis reaches `m2` columns it is compressed to `m1` columns that
//! contain the current solution, so the trace ratio never decreases.

use log::{debug, warn};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::dense;
use crate::diagnostics;
use crate::error::{Error, Result};
use crate::operators::OperatorPencil;
use crate::random;
pub use crate::subspace::{IterationRecord, SolverConfig, SubspaceState};
use crate::subspace::initial_basis;
use crate::tr_newton::{self, NewtonOptions, StoppingRule};

#[derive(Debug, Clone, Serialize)]
pub struct TrSolution {
    /// `p x k`, orthonormal columns.
    #[serde(skip)]
    pub v: DMatrix<f64>,
    pub rho: f64,
    pub residual_norm: f64,
    /// `Z^T (H - rho K) Z`.
    #[serde(skip)]
    pub lambda: DMatrix<f64>,
    #[serde(skip)]
    pub trace: Vec<IterationRecord>,
    pub converged: bool,
    /// Stopped because the basis could not be expanded.
    pub stagnated: bool,
    pub iterations: usize,
    pub mv_total: usize,
    pub restarts: usize,
    /// `lambda_k - lambda_{k+1}` of the final projected `H - rho K`.
    pub eigengap: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Extraction {
    /// `j x k`, orthonormal columns.
    pub z: DMatrix<f64>,
    pub rho: f64,
    pub lambda: DMatrix<f64>,
    pub inner_iterations: usize,
    pub inner_converged: bool,
}

/// What an [`Observer`] sees after the residual of an outer iteration has
/// been formed, before any restart or expansion.
pub struct IterationView<'a> {
    pub record: &'a IterationRecord,
    pub state: &'a SubspaceState,
    pub z: &'a DMatrix<f64>,
    pub lambda: &'a DMatrix<f64>,
    pub residual: &'a DMatrix<f64>,
}

/// Receives the iteration stream of a subspace solve.
pub trait Observer {
    fn iteration(&mut self, _view: &IterationView<'_>) {}

    /// Called right after a restart with the compressed state and the
    /// current solution in the new coordinates.
    fn restarted(&mut self, _state: &SubspaceState, _z: &DMatrix<f64>, _rho: f64) {}
}

pub struct NoObserver;

impl Observer for NoObserver {}

impl<F: FnMut(&IterationRecord)> Observer for F {
    fn iteration(&mut self, view: &IterationView<'_>) {
        self(view.record)
    }
}

fn inner_options(config: &SolverConfig) -> NewtonOptions {
    NewtonOptions {
        tol: config.inner_tol,
        max_iter: config.inner_max_iter,
        stopping: StoppingRule::Residual,
        seed: random::derive_seed(config.seed, 1),
    }
}

/// `Z^T (H - rho K) Z`, symmetrized.
pub fn projected_lambda(state: &SubspaceState, z: &DMatrix<f64>, rho: f64) -> DMatrix<f64> {
    dense::symmetrize(&(z.transpose() * state.shifted(rho) * z))
}

/// Solves the projected trace ratio problem on `(H, K)`.
pub fn extract(state: &SubspaceState, k: usize, rho_warm: Option<f64>, opts: &NewtonOptions) -> Result<Extraction> {
    let h = state.h().into_owned();
    let kk = state.k().into_owned();
    let res = tr_newton::solve_dense_tr(&h, &kk, k, rho_warm, opts)?;
    if !res.converged {
        warn!(
            "inner solve stopped after {} iterations with residual {:e}",
            res.iterations, res.residual_norm
        );
    }
    let lambda = projected_lambda(state, &res.v, res.rho);
    Ok(Extraction {
        z: res.v,
        rho: res.rho,
        lambda,
        inner_iterations: res.iterations,
        inner_converged: res.converged,
    })
}

/// `R = AU Z - rho BU Z - U Z Lambda` from the cached images; no operator
/// applications. The component along `V = U Z`, zero in exact arithmetic,
/// is projected out.
pub fn residual(state: &SubspaceState, z: &DMatrix<f64>, rho: f64, lambda: &DMatrix<f64>) -> DMatrix<f64> {
    let v = state.u() * z;
    let mut r = state.au() * z - state.bu() * z * rho - &v * lambda;
    let c = v.tr_mul(&r);
    r.gemm(-1.0, &v, &c, 1.0);
    r
}

/// Compresses the basis to `m1` columns spanned by `Z` and the next
/// `m1 - k` eigenvectors of `H - rho K`. Returns `Z` in the new coordinates.
pub fn restart(state: &mut SubspaceState, z: &DMatrix<f64>, rho: f64, m1: usize) -> Result<DMatrix<f64>> {
    let j = state.dim();
    let k = z.ncols();
    if m1 < k || m1 > j {
        return Err(Error::InvalidConfig(format!("cannot restart {j} columns to {m1} with k = {k}")));
    }
    let eig = dense::sym_eig(&state.shifted(rho))?;
    let mut candidates = DMatrix::zeros(j, j);
    candidates.columns_mut(0, k).copy_from(z);
    candidates.columns_mut(k, j - k).copy_from(&eig.vectors.columns(k, j - k));
    // Z first so that its span is kept; spare eigenvectors stand in for any
    // padding column that turns out dependent on Z
    let q_full = dense::orthonormalize(&candidates);
    if q_full.ncols() < m1 {
        return Err(Error::NotOrthonormal(format!(
            "restart basis has rank {} < {m1}",
            q_full.ncols()
        )));
    }
    let q = q_full.columns(0, m1).into_owned();
    let z_new = q.tr_mul(z);
    state.rotate(&q)?;
    Ok(z_new)
}

pub fn solve(pencil: &OperatorPencil, config: &SolverConfig, init: Option<&DMatrix<f64>>) -> Result<TrSolution> {
    solve_observed(pencil, config, init, &mut NoObserver)
}

pub fn solve_observed(
    pencil: &OperatorPencil,
    config: &SolverConfig,
    init: Option<&DMatrix<f64>>,
    observer: &mut dyn Observer,
) -> Result<TrSolution> {
    let p = pencil.dim();
    config.validate(p)?;
    let k = config.k;
    let basis = initial_basis(p, config, init)?;
    let (mut state, mut mv_total) = SubspaceState::from_basis(pencil, &basis, config.m2)?;
    let inner = inner_options(config);
    let mut expand_rng = random::rng(random::derive_seed(config.seed, 2));

    let mut trace = Vec::new();
    let mut restarts = 0;
    let mut previous: Option<(DMatrix<f64>, f64)> = None;
    let mut retried = false;

    let mut outer = 0;
    loop {
        let j = state.dim();
        let ext = extract(&state, k, previous.as_ref().map(|(_, r)| *r), &inner)?;
        let (z, rho, lambda) = match previous.take() {
            Some((z_prev, rho_prev)) if ext.rho < rho_prev - 1e-12 * rho_prev.abs().max(1.0) => {
                debug!("extraction regressed from {rho_prev} to {}; keeping previous iterate", ext.rho);
                let lambda = projected_lambda(&state, &z_prev, rho_prev);
                (z_prev, rho_prev, lambda)
            }
            _ => (ext.z, ext.rho, ext.lambda),
        };

        let r = residual(&state, &z, rho, &lambda);
        let svd = dense::thin_svd(&r)?;
        let residual_norm = svd.values.get(0).copied().unwrap_or(0.0);
        let converged = residual_norm < config.tol;
        let last = outer + 1 >= config.max_outer;
        let restart_now = !converged && !last && j >= config.m2;

        let record = IterationRecord {
            outer_index: outer,
            mv_total,
            rho,
            residual_norm,
            subspace_dim: j,
            restarted: restart_now,
            inner_iterations: ext.inner_iterations,
            inner_converged: ext.inner_converged,
        };
        observer.iteration(&IterationView {
            record: &record,
            state: &state,
            z: &z,
            lambda: &lambda,
            residual: &r,
        });
        trace.push(record);
        outer += 1;

        let done = move |state: &SubspaceState, z: &DMatrix<f64>, trace: Vec<IterationRecord>, stagnated: bool| {
            finish(state, z, rho, lambda.clone(), residual_norm, trace, converged, stagnated, mv_total, restarts)
        };
        if converged || last {
            return done(&state, &z, trace, false);
        }

        let mut z = z;
        if restart_now {
            z = restart(&mut state, &z, rho, config.m1)?;
            restarts += 1;
            observer.restarted(&state, &z, rho);
        }

        match state.expand_from_svd(pencil, &svd, config.block, config.sv_drop_ratio) {
            Ok(added) => {
                mv_total += added;
                retried = false;
            }
            Err(Error::EmptyExpansion) if !retried => match state.expand_random(pencil, &mut expand_rng) {
                Ok(added) => {
                    debug!("residual gave no new direction; expanded randomly");
                    mv_total += added;
                    retried = true;
                }
                Err(Error::EmptyExpansion) => return done(&state, &z, trace, true),
                Err(e) => return Err(e),
            },
            Err(Error::EmptyExpansion) => {
                warn!("subspace expansion stagnated at outer iteration {outer}");
                return done(&state, &z, trace, true);
            }
            Err(e) => return Err(e),
        }

        let mut padded = DMatrix::zeros(state.dim(), k);
        padded.rows_mut(0, z.nrows()).copy_from(&z);
        previous = Some((padded, rho));
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    state: &SubspaceState,
    z: &DMatrix<f64>,
    rho: f64,
    lambda: DMatrix<f64>,
    residual_norm: f64,
    trace: Vec<IterationRecord>,
    converged: bool,
    stagnated: bool,
    mv_total: usize,
    restarts: usize,
) -> Result<TrSolution> {
    let eigengap = diagnostics::projected_eigengap(&state.h().into_owned(), &state.k().into_owned(), rho, z.ncols())?;
    Ok(TrSolution {
        v: state.u() * z,
        rho,
        residual_norm,
        lambda,
        iterations: trace.len(),
        trace,
        converged,
        stagnated,
        mv_total,
        restarts,
        eigengap,
    })
}
