use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fda_subspace;
use crate::random;
use crate::subspace::{IterationRecord, SolverConfig};
use crate::tr_kschur::{self, KschurOptions};
use crate::tr_subspace;

use super::{regularized_pencil, LabeledDataset, LdaModel, ScatterModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    TrSubspace,
    TrKschur,
    FdaSubspace,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::TrSubspace, Method::TrKschur, Method::FdaSubspace];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::TrSubspace => "tr-subspace",
            Method::TrKschur => "tr-kschur",
            Method::FdaSubspace => "fda-subspace",
        }
    }

    pub fn is_trace_ratio(self) -> bool {
        !matches!(self, Method::FdaSubspace)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s || m.as_str().replace('-', "_") == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method '{s}'")))
    }
}

/// Everything needed to train a projection and classifier on one split.
#[derive(Debug, Clone)]
pub struct FitOptions {
    pub method: Method,
    pub config: SolverConfig,
    pub alpha: f64,
    /// Permit `alpha = 0` (unregularized `S_W`).
    pub allow_unregularized: bool,
    pub precompute: bool,
    pub kschur: KschurOptions,
}

impl FitOptions {
    pub fn new(method: Method, config: SolverConfig) -> Self {
        Self {
            method,
            config,
            alpha: 0.1,
            allow_unregularized: false,
            precompute: false,
            kschur: KschurOptions::default(),
        }
    }
}

/// Solver output reduced to what classification and reports need.
#[derive(Debug, Clone)]
pub struct Projection {
    /// `p x k`.
    pub v: nalgebra::DMatrix<f64>,
    /// Trace ratio (TR methods) or sum of leading eigenvalues (FDA).
    pub objective: f64,
    pub residual_norm: f64,
    pub converged: bool,
    pub mv_total: usize,
    pub eigengap: Option<f64>,
    pub trace: Vec<IterationRecord>,
    /// Leading eigenvalues for FDA, eigenvalues of `Lambda` for TR.
    pub lambda: Vec<f64>,
}

/// Runs the selected solver on a pencil.
pub fn run_method(
    pencil: &crate::operators::OperatorPencil,
    method: Method,
    config: &SolverConfig,
    kschur: &KschurOptions,
) -> Result<Projection> {
    Ok(match method {
        Method::TrSubspace | Method::TrKschur => {
            let sol = if method == Method::TrSubspace {
                tr_subspace::solve(pencil, config, None)?
            } else {
                tr_kschur::solve(pencil, config, kschur)?
            };
            let lambda = crate::dense::sym_eigenvalues(&sol.lambda)?.iter().copied().collect();
            Projection {
                v: sol.v,
                objective: sol.rho,
                residual_norm: sol.residual_norm,
                converged: sol.converged,
                mv_total: sol.mv_total,
                eigengap: sol.eigengap,
                trace: sol.trace,
                lambda,
            }
        }
        Method::FdaSubspace => {
            let sol = fda_subspace::solve_gep(pencil, config, None)?;
            let v = fda_subspace::fda_projection(&sol)?;
            Projection {
                v,
                objective: sol.objective(),
                residual_norm: sol.residual_norm,
                converged: sol.converged,
                mv_total: sol.mv_total,
                eigengap: sol.eigengap,
                trace: sol.trace,
                lambda: sol.lambda.iter().copied().collect(),
            }
        }
    })
}

/// Metrics of one train/test split.
#[derive(Debug, Clone, Serialize)]
pub struct FoldOutcome {
    pub fold: usize,
    pub accuracy: f64,
    pub mv: usize,
    /// Solve time, plus scatter precomputation in precompute mode.
    pub seconds: f64,
    /// Final trace ratio; absent for FDA.
    pub rho: Option<f64>,
    pub objective: f64,
    pub eigengap: Option<f64>,
    pub residual_norm: f64,
    pub converged: bool,
    pub iterations: usize,
    #[serde(skip)]
    pub trace: Vec<IterationRecord>,
}

/// Fits scatter statistics on `train`, solves, fits the LDA rule and scores
/// it on `test`.
pub fn evaluate_split(train: &LabeledDataset, test: &LabeledDataset, opts: &FitOptions, fold: usize) -> Result<FoldOutcome> {
    let start = Instant::now();
    let model = ScatterModel::from_data(train, opts.precompute)?;
    let precompute_seconds = start.elapsed().as_secs_f64();
    let pencil = regularized_pencil(&model, opts.alpha, opts.allow_unregularized)?;

    let start = Instant::now();
    let projection = run_method(&pencil, opts.method, &opts.config, &opts.kschur)?;
    let mut seconds = start.elapsed().as_secs_f64();
    if opts.precompute {
        seconds += precompute_seconds;
    }

    let lda = LdaModel::fit(&projection.v, &model)?;
    let accuracy = lda.accuracy(test)?;
    Ok(FoldOutcome {
        fold,
        accuracy,
        mv: projection.mv_total,
        seconds,
        rho: opts.method.is_trace_ratio().then_some(projection.objective),
        objective: projection.objective,
        eigengap: projection.eigengap,
        residual_norm: projection.residual_norm,
        converged: projection.converged,
        iterations: projection.trace.len(),
        trace: projection.trace,
    })
}

/// Test-set indices of each fold. Every group is shuffled with a seeded
/// generator and dealt round-robin over the folds, continuing where the
/// previous group stopped.
pub fn stratified_folds(data: &LabeledDataset, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 folds, got {folds}")));
    }
    if folds > data.n() {
        return Err(Error::Stratification(format!("{folds} folds for {} observations", data.n())));
    }
    let mut rng = random::rng(seed);
    let mut out = vec![Vec::new(); folds];
    let mut next = 0;
    for group in 0..data.groups() {
        let mut members: Vec<usize> = (0..data.n()).filter(|&i| data.y()[i] == group).collect();
        members.shuffle(&mut rng);
        for i in members {
            out[next].push(i);
            next = (next + 1) % folds;
        }
    }
    for fold in &mut out {
        fold.sort_unstable();
    }
    Ok(out)
}

/// Stratified k-fold cross-validation; folds run in parallel and results
/// come back in fold order.
pub fn cross_validate(data: &LabeledDataset, folds: usize, opts: &FitOptions, seed: u64) -> Result<Vec<FoldOutcome>> {
    let test_sets = stratified_folds(data, folds, seed)?;
    let counts = data.counts();
    let splits: Vec<(Vec<usize>, Vec<usize>)> = test_sets
        .iter()
        .enumerate()
        .map(|(f, test)| {
            let mut in_test = vec![false; data.n()];
            for &i in test {
                in_test[i] = true;
            }
            let train: Vec<usize> = (0..data.n()).filter(|&i| !in_test[i]).collect();
            let mut train_counts = vec![0; data.groups()];
            for &i in &train {
                train_counts[data.y()[i]] += 1;
            }
            if let Some(g) = train_counts.iter().position(|&c| c == 0) {
                return Err(Error::Stratification(format!(
                    "fold {f} leaves group {} ({} observations) out of training",
                    data.label_names()[g],
                    counts[g]
                )));
            }
            Ok((train, test.clone()))
        })
        .collect::<Result<_>>()?;

    splits
        .par_iter()
        .enumerate()
        .map(|(f, (train, test))| {
            let mut fold_opts = opts.clone();
            fold_opts.config.seed = random::derive_seed(seed, f as u64);
            evaluate_split(&data.select(train), &data.select(test), &fold_opts, f)
        })
        .collect()
}

/// Mean and sample standard deviation (0 for fewer than two values).
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}
