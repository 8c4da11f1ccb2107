//! Newton-type (self-consistent field) iteration for the trace ratio problem
//! on explicit matrices.
//!
//! Each step takes `V` as the `k` leading eigenvectors of `A - rho B` and
//! updates `rho = tr(V^T A V) / tr(V^T B V)`. It serves as the dense
//! reference solver and as the inner solver on projected pencils. A
//! bisection on `f(rho) = sum of the k largest eigenvalues of A - rho B` is
//! provided as an independent oracle.

use nalgebra::DMatrix;

use crate::dense::{self, spectral_norm};
use crate::error::{Error, Result};
use crate::random;

/// Which convergence test ends the iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum StoppingRule {
    /// `||(I - V V^T)(A - rho B) V|| < tol`.
    Residual,
    /// `|rho_i - rho_{i-1}| < tol * |rho_i|`.
    RelativeRho,
}

#[derive(Debug, Clone)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub stopping: StoppingRule,
    /// Seed for the random starting block when no `rho0` is given.
    pub seed: u64,
}

impl NewtonOptions {
    /// Standalone dense solves.
    pub fn dense() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 500,
            stopping: StoppingRule::Residual,
            seed: 0,
        }
    }

    /// Inner solves on projected pencils.
    pub fn inner() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 100,
            stopping: StoppingRule::Residual,
            seed: 0,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone)]
pub struct TrNewtonResult {
    /// `j x k`, orthonormal columns.
    pub v: DMatrix<f64>,
    pub rho: f64,
    pub iterations: usize,
    /// Starting value followed by one entry per iteration.
    pub rho_history: Vec<f64>,
    pub converged: bool,
    /// `||(I - V V^T)(A - rho B) V||` at the returned iterate.
    pub residual_norm: f64,
    /// `lambda_k - lambda_{k+1}` of the last shifted matrix decomposed, if `k < j`.
    pub eigengap: Option<f64>,
}

fn trace_ratio(v: &DMatrix<f64>, a: &DMatrix<f64>, b: &DMatrix<f64>) -> (f64, f64) {
    let num = (v.transpose() * a * v).trace();
    let den = (v.transpose() * b * v).trace();
    (num, den)
}

/// `||(I - V V^T) M V||` for symmetric `M`.
pub(crate) fn projected_residual_norm(m: &DMatrix<f64>, v: &DMatrix<f64>) -> f64 {
    let mv = m * v;
    let r = &mv - v * (v.transpose() * &mv);
    spectral_norm(&r)
}

fn validate(a: &DMatrix<f64>, b: &DMatrix<f64>, k: usize) -> Result<()> {
    if a.nrows() != a.ncols() || a.shape() != b.shape() {
        return Err(Error::DimensionMismatch {
            context: "trace ratio pencil",
            expected: a.nrows(),
            found: b.nrows(),
        });
    }
    if k == 0 || k > a.nrows() {
        return Err(Error::InvalidConfig(format!(
            "k = {k} must satisfy 1 <= k <= {}",
            a.nrows()
        )));
    }
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("trace ratio pencil"));
    }
    Ok(())
}

/// Checks that `B` is PSD with `rank(B) >= j - k + 1`, the condition for a
/// finite maximum. Returns `||B||`.
fn check_denominator(b: &DMatrix<f64>, k: usize) -> Result<f64> {
    let j = b.nrows();
    let eig = dense::sym_eigenvalues(b)?;
    let top = eig[0].abs().max(eig[j - 1].abs());
    let floor = 1e-12 * top.max(f64::MIN_POSITIVE) * j as f64;
    let smallest = eig[j - 1];
    if smallest < -floor {
        return Err(Error::NotSpd {
            index: j - 1,
            pivot: smallest,
        });
    }
    let rank = eig.iter().filter(|&&v| v > floor).count();
    if rank + k < j + 1 {
        return Err(Error::Unbounded(format!(
            "denominator has numerical rank {rank} < {} required for k = {k}",
            j - k + 1
        )));
    }
    Ok(top)
}

/// Solves `max tr(V^T A V) / tr(V^T B V)` over orthonormal `j x k` `V`.
///
/// With `rho0` given, the first step decomposes `A - rho0 B` directly;
/// otherwise `rho0` is the ratio of a seeded random orthonormal block.
pub fn solve_dense_tr(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    k: usize,
    rho0: Option<f64>,
    opts: &NewtonOptions,
) -> Result<TrNewtonResult> {
    validate(a, b, k)?;
    let j = a.nrows();
    let b_norm = check_denominator(b, k)?;

    if k == j {
        // the whole space is the only feasible subspace
        let v = DMatrix::identity(j, j);
        let rho = a.trace() / b.trace();
        return Ok(TrNewtonResult {
            v,
            rho,
            iterations: 0,
            rho_history: vec![rho],
            converged: true,
            residual_norm: 0.0,
            eigengap: None,
        });
    }

    let mut rho = match rho0 {
        Some(r) => r,
        None => {
            let v = random::orthonormal_matrix(j, k, &mut random::rng(opts.seed));
            let (num, den) = trace_ratio(&v, a, b);
            num / den
        }
    };
    if !rho.is_finite() {
        return Err(Error::NonFinite("initial trace ratio"));
    }

    let a_norm = spectral_norm(a);
    let mut history = vec![rho];
    let mut v = DMatrix::zeros(j, k);
    let mut residual_norm = f64::INFINITY;
    let mut eigengap = None;

    for iter in 1..=opts.max_iter {
        let shifted = a - b * rho;
        let eig = dense::sym_eig(&shifted)?;
        v = eig.vectors.columns(0, k).into_owned();
        eigengap = Some(eig.values[k - 1] - eig.values[k]);

        let (num, den) = trace_ratio(&v, a, b);
        if den <= f64::EPSILON * b_norm * k as f64 {
            return Err(Error::Unbounded(format!(
                "tr(V^T B V) = {den:e} vanished at iteration {iter}"
            )));
        }
        let prev = rho;
        rho = num / den;
        if !rho.is_finite() || rho.abs() > 1.0 / f64::EPSILON {
            return Err(Error::Unbounded(format!("trace ratio reached {rho:e}")));
        }
        history.push(rho);

        let m = a - b * rho;
        residual_norm = projected_residual_norm(&m, &v);
        let converged = match opts.stopping {
            StoppingRule::Residual => {
                // below this floor the residual is pure rounding noise
                let floor = 64.0 * f64::EPSILON * (a_norm + rho.abs() * b_norm) * (k as f64).sqrt();
                residual_norm < opts.tol || residual_norm <= floor
            }
            StoppingRule::RelativeRho => (rho - prev).abs() < opts.tol * rho.abs(),
        };
        if converged {
            return Ok(TrNewtonResult {
                v,
                rho,
                iterations: iter,
                rho_history: history,
                converged: true,
                residual_norm,
                eigengap,
            });
        }
    }

    Ok(TrNewtonResult {
        v,
        rho,
        iterations: opts.max_iter,
        rho_history: history,
        converged: false,
        residual_norm,
        eigengap,
    })
}

/// Sum of the `k` largest eigenvalues of `A - rho B`.
pub fn trace_function(a: &DMatrix<f64>, b: &DMatrix<f64>, k: usize, rho: f64) -> Result<f64> {
    let vals = dense::sym_eigenvalues(&(a - b * rho))?;
    Ok(vals.iter().take(k).sum())
}

/// Root of `f(rho)` by bracketing and bisection. Test oracle only.
pub fn bisection_rho(a: &DMatrix<f64>, b: &DMatrix<f64>, k: usize, tol: f64) -> Result<f64> {
    validate(a, b, k)?;
    let f = |rho: f64| trace_function(a, b, k, rho);
    let tb = b.trace();
    let start = if tb > 0.0 { a.trace() / tb } else { 0.0 };
    let mut step = start.abs().max(1.0);

    let mut lo = start;
    let mut f_lo = f(lo)?;
    let mut expansions = 0;
    while f_lo < 0.0 {
        lo -= step;
        step *= 2.0;
        f_lo = f(lo)?;
        expansions += 1;
        if expansions > 200 {
            return Err(Error::Unbounded("no lower bracket after 200 doublings".into()));
        }
    }
    let mut step = start.abs().max(1.0);
    let mut hi = start;
    let mut f_hi = f(hi)?;
    expansions = 0;
    while f_hi > 0.0 {
        hi += step;
        step *= 2.0;
        f_hi = f(hi)?;
        expansions += 1;
        if expansions > 200 {
            return Err(Error::Unbounded("no upper bracket after 200 doublings".into()));
        }
    }
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }

    let mut mid = 0.5 * (lo + hi);
    for _ in 0..400 {
        mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        let width = hi - lo;
        if (fm.abs() <= tol && width <= tol * mid.abs().max(1.0))
            || width <= 4.0 * f64::EPSILON * mid.abs().max(f64::MIN_POSITIVE)
        {
            break;
        }
    }
    Ok(mid)
}

/// Contraction factor `1 - (sum of k smallest eigenvalues of B) / (sum of
/// k largest)` bounding the linear rate of the Newton-type iteration.
pub fn linear_rate_bound(b: &DMatrix<f64>, k: usize) -> Result<f64> {
    dense::cholesky(b)?;
    let vals = dense::sym_eigenvalues(b)?;
    let j = vals.len();
    if k == 0 || k > j {
        return Err(Error::InvalidConfig(format!("k = {k} out of range for dimension {j}")));
    }
    let largest: f64 = vals.iter().take(k).sum();
    let smallest: f64 = vals.iter().skip(j - k).sum();
    Ok(1.0 - smallest / largest)
}
