//! Command-line front end: `solve`, `synth-bench` and `cv`.
//!
//! Exit codes: 0 on success, 2 on usage, input or validation errors, 3 when
//! a solver stopped without converging (all artifacts are still written).
//! Reports, solutions and traces are deterministic for fixed flags and
//! seed; wall-clock times go to a separate `timing.json`.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::classify::{
    evaluate_split, mean_sd, regularized_pencil, run_method, stratified_folds, synth_ortner, FitOptions,
    FoldOutcome, LabelSource, LabeledDataset, Method, Projection, ScatterModel,
};
use crate::error::Error;
use crate::operators::OperatorPencil;
use crate::random;
use crate::subspace::{IterationRecord, SolverConfig};
use crate::tr_kschur::KschurOptions;

/// Environment variable selecting the worker thread count.
pub const THREADS_ENV: &str = "TRACERATIO_THREADS";

const EXIT_USAGE: i32 = 2;
const EXIT_NOT_CONVERGED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "traceratio", version, about = "Trace ratio and Fisher discriminant solvers")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one problem from a labeled dataset or an explicit pencil.
    Solve(SolveArgs),
    /// Repeated train/test runs on synthetic Gaussian groups.
    SynthBench(SynthArgs),
    /// Stratified cross-validation on a labeled dataset.
    Cv(CvArgs),
}

impl ValueEnum for Method {
    fn value_variants<'a>() -> &'a [Self] {
        &Method::ALL
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(self.as_str()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PrecomputeMode {
    On,
    Off,
    Both,
}

impl PrecomputeMode {
    fn flags(self) -> Vec<bool> {
        match self {
            PrecomputeMode::On => vec![true],
            PrecomputeMode::Off => vec![false],
            PrecomputeMode::Both => vec![false, true],
        }
    }
}

#[derive(Debug, Args)]
struct SolverArgs {
    #[arg(long)]
    k: usize,
    /// Basis size after restart (default 2k).
    #[arg(long)]
    m1: Option<usize>,
    /// Maximum basis size (default 4k).
    #[arg(long)]
    m2: Option<usize>,
    #[arg(long, default_value_t = 1)]
    block: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 100_000)]
    max_outer: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// CSV file with one observation per row.
    #[arg(long, conflicts_with_all = ["pencil_a", "pencil_b"], required_unless_present = "pencil_a")]
    data: Option<PathBuf>,
    /// Label column name or index, or a file with one label per row.
    #[arg(long, requires = "data")]
    labels: Option<String>,
    /// CSV matrix A of an explicit pencil.
    #[arg(long, requires = "pencil_b")]
    pencil_a: Option<PathBuf>,
    /// CSV matrix B of an explicit pencil.
    #[arg(long, requires = "pencil_a")]
    pencil_b: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Method::TrSubspace)]
    method: Method,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// Accept --alpha 0 (the within-group scatter may be singular).
    #[arg(long)]
    allow_unregularized: bool,
    /// Form the within-group scatter matrix explicitly.
    #[arg(long)]
    precompute: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 3)]
    g: usize,
    #[arg(long, default_value_t = 500)]
    q: usize,
    #[arg(long, default_value_t = 5000)]
    n_train: usize,
    #[arg(long, default_value_t = 1000)]
    n_test: usize,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long)]
    m1: Option<usize>,
    #[arg(long)]
    m2: Option<usize>,
    #[arg(long, default_value_t = 1)]
    block: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 100_000)]
    max_outer: usize,
    #[arg(long, value_delimiter = ',', default_value = "tr-subspace,tr-kschur,fda-subspace")]
    methods: Vec<Method>,
    #[arg(long, value_enum, default_value_t = PrecomputeMode::Off)]
    precompute: PrecomputeMode,
    /// Regularization; the synthetic within-group scatter is SPD, so 0 is
    /// accepted here.
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CvArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    labels: String,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, value_enum, default_value_t = Method::TrSubspace)]
    method: Method,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long)]
    allow_unregularized: bool,
    #[arg(long, default_value_t = 2)]
    m1_mult: usize,
    #[arg(long, default_value_t = 5)]
    m2_mult: usize,
    #[arg(long, default_value_t = 1)]
    block: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 100_000)]
    max_outer: usize,
    #[arg(long)]
    precompute: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    configure_threads();
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(&a),
        Command::SynthBench(a) => cmd_synth_bench(&a),
        Command::Cv(a) => cmd_cv(&a),
    };
    match result {
        Ok(Outcome::Converged) => 0,
        Ok(Outcome::NotConverged) => {
            eprintln!("warning: solver did not converge; artifacts are flagged");
            EXIT_NOT_CONVERGED
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_USAGE
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        // a pool may already exist when embedded in tests
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

enum Outcome {
    Converged,
    NotConverged,
}

impl Outcome {
    fn from_flag(converged: bool) -> Self {
        if converged {
            Outcome::Converged
        } else {
            Outcome::NotConverged
        }
    }
}

fn parse_labels(spec: &str) -> LabelSource {
    let path = Path::new(spec);
    if path.is_file() {
        LabelSource::File(path.to_path_buf())
    } else if let Ok(i) = spec.parse::<usize>() {
        LabelSource::ColumnIndex(i)
    } else {
        LabelSource::ColumnName(spec.to_owned())
    }
}

/// Builds and validates a solver configuration, naming the offending flag.
#[allow(clippy::too_many_arguments)]
fn solver_config(
    p: usize,
    k: usize,
    m1: usize,
    m2: usize,
    block: usize,
    tol: f64,
    max_outer: usize,
    seed: u64,
) -> anyhow::Result<SolverConfig> {
    if k == 0 || k >= p {
        bail!("--k must satisfy 1 <= k < p = {p}, got {k}");
    }
    if m1 < k {
        bail!("--m1 ({m1}) must be at least --k ({k})");
    }
    if m2 <= m1 || m2 > p {
        bail!("--m2 ({m2}) must satisfy m1 < m2 <= p = {p} (m1 = {m1})");
    }
    if block == 0 || block > k {
        bail!("--block ({block}) must lie in [1, k = {k}]");
    }
    if !(tol > 0.0) {
        bail!("--tol must be positive");
    }
    if max_outer == 0 {
        bail!("--max-outer must be positive");
    }
    let mut cfg = SolverConfig::new(k).with_sizes(m1, m2).with_block(block).with_tol(tol).with_seed(seed);
    cfg.max_outer = max_outer;
    cfg.validate(p)?;
    Ok(cfg)
}

fn check_alpha(alpha: f64, allow_unregularized: bool) -> anyhow::Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        bail!("--alpha must lie in [0, 1], got {alpha}");
    }
    if alpha == 0.0 && !allow_unregularized {
        bail!("--alpha 0 leaves the denominator unregularized; pass --allow-unregularized to accept that");
    }
    Ok(())
}

fn read_dataset(data: &Path, labels: &str) -> anyhow::Result<LabeledDataset> {
    LabeledDataset::read_csv(data, &parse_labels(labels)).with_context(|| format!("reading --data {}", data.display()))
}

/// Reads a numeric CSV matrix (no header).
pub fn read_matrix_csv(path: &Path) -> crate::Result<DMatrix<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let row = record
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| Error::Data(format!("'{f}' in {} is not a number", path.display()))))
            .collect::<crate::Result<Vec<_>>>()?;
        rows.push(row);
    }
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if n == 0 || m == 0 {
        return Err(Error::Data(format!("{} holds no matrix", path.display())));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> crate::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for row in m.row_iter() {
        w.write_record(row.iter().map(|v| format!("{v:e}")))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_csv(path: &Path, trace: &[IterationRecord]) -> crate::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["outer", "mv_total", "rho", "residual_norm", "dim", "restarted"])?;
    for r in trace {
        w.write_record([
            r.outer_index.to_string(),
            r.mv_total.to_string(),
            format!("{:e}", r.rho),
            format!("{:e}", r.residual_norm),
            r.subspace_dim.to_string(),
            u8::from(r.restarted).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

#[derive(Debug, Serialize)]
struct SolutionMeta {
    method: Method,
    p: usize,
    k: usize,
    m1: usize,
    m2: usize,
    block: usize,
    tol: f64,
    seed: u64,
    alpha: Option<f64>,
    /// Trace ratio value (trace ratio methods).
    rho: Option<f64>,
    /// Eigenvalues of the k x k block `Lambda` (trace ratio) or the leading
    /// generalized eigenvalues (FDA), descending.
    lambda: Vec<f64>,
    objective: f64,
    residual_norm: f64,
    mv_total: usize,
    iterations: usize,
    converged: bool,
    eigengap: Option<f64>,
}

#[derive(Debug, Serialize)]
struct SolveTiming {
    seconds: f64,
    precompute_seconds: Option<f64>,
}

fn cmd_solve(a: &SolveArgs) -> anyhow::Result<Outcome> {
    let s = &a.solver;
    let (pencil, alpha, precompute_seconds) = match (&a.data, &a.pencil_a, &a.pencil_b) {
        (Some(data), _, _) => {
            let labels = a.labels.as_deref().ok_or_else(|| anyhow!("--labels is required with --data"))?;
            check_alpha(a.alpha, a.allow_unregularized)?;
            let dataset = read_dataset(data, labels)?;
            let start = Instant::now();
            let model = ScatterModel::from_data(&dataset, a.precompute)?;
            let elapsed = start.elapsed().as_secs_f64();
            let pencil = regularized_pencil(&model, a.alpha, a.allow_unregularized)?;
            (pencil, Some(a.alpha), a.precompute.then_some(elapsed))
        }
        (None, Some(pa), Some(pb)) => {
            let ma = read_matrix_csv(pa).with_context(|| format!("reading --pencil-a {}", pa.display()))?;
            let mb = read_matrix_csv(pb).with_context(|| format!("reading --pencil-b {}", pb.display()))?;
            if !ma.is_square() || ma.shape() != mb.shape() {
                bail!("--pencil-a and --pencil-b must be square matrices of equal size");
            }
            (OperatorPencil::from_dense(ma, mb)?, None, None)
        }
        _ => bail!("either --data or both --pencil-a and --pencil-b are required"),
    };
    let p = pencil.dim();
    let m1 = s.m1.unwrap_or((2 * s.k).min(p.saturating_sub(1)));
    let m2 = s.m2.unwrap_or((4 * s.k).min(p));
    let cfg = solver_config(p, s.k, m1, m2, s.block, s.tol, s.max_outer, s.seed)?;

    let start = Instant::now();
    let projection = run_method(&pencil, a.method, &cfg, &KschurOptions::default())?;
    let seconds = start.elapsed().as_secs_f64() + precompute_seconds.unwrap_or(0.0);

    fs::create_dir_all(&a.out).with_context(|| format!("creating --out {}", a.out.display()))?;
    write_matrix_csv(&a.out.join("projection.csv"), &projection.v)?;
    write_trace_csv(&a.out.join("trace.csv"), &projection.trace)?;
    let meta = solution_meta(a.method, &cfg, p, alpha, &projection);
    write_json(&a.out.join("solution.json"), &meta)?;
    write_json(
        &a.out.join("timing.json"),
        &SolveTiming {
            seconds,
            precompute_seconds,
        },
    )?;
    println!(
        "{}: objective {:.12} residual {:.3e} mv {} converged {}",
        a.method, projection.objective, projection.residual_norm, projection.mv_total, projection.converged
    );
    Ok(Outcome::from_flag(projection.converged))
}

fn solution_meta(method: Method, cfg: &SolverConfig, p: usize, alpha: Option<f64>, proj: &Projection) -> SolutionMeta {
    let mut lambda = proj.lambda.clone();
    lambda.sort_by(|a, b| b.total_cmp(a));
    SolutionMeta {
        method,
        p,
        k: cfg.k,
        m1: cfg.m1,
        m2: cfg.m2,
        block: cfg.block,
        tol: cfg.tol,
        seed: cfg.seed,
        alpha,
        rho: method.is_trace_ratio().then_some(proj.objective),
        lambda,
        objective: proj.objective,
        residual_norm: proj.residual_norm,
        mv_total: proj.mv_total,
        iterations: proj.trace.len(),
        converged: proj.converged,
        eigengap: proj.eigengap,
    }
}

/// Mean and standard deviation of a column.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub sd: f64,
}

impl Stat {
    fn of(values: &[f64]) -> Option<Self> {
        (!values.is_empty()).then(|| {
            let (mean, sd) = mean_sd(values);
            Stat { mean, sd }
        })
    }
}

#[derive(Debug, Serialize)]
struct Row {
    /// Repetition or fold index.
    index: usize,
    mv: usize,
    accuracy: f64,
    rho: Option<f64>,
    objective: f64,
    eigengap: Option<f64>,
    residual_norm: f64,
    converged: bool,
    iterations: usize,
}

#[derive(Debug, Serialize)]
struct Aggregates {
    mv: Option<Stat>,
    accuracy: Option<Stat>,
    rho: Option<Stat>,
    eigengap: Option<Stat>,
}

#[derive(Debug, Serialize)]
struct MethodReport {
    method: Method,
    precompute: bool,
    rows: Vec<Row>,
    aggregates: Aggregates,
}

#[derive(Debug, Serialize)]
struct RunReport<C: Serialize> {
    command: &'static str,
    config: C,
    methods: Vec<MethodReport>,
}

#[derive(Debug, Serialize)]
struct TimingRow {
    method: Method,
    precompute: bool,
    seconds: Vec<f64>,
    mean: f64,
    sd: f64,
}

fn method_report(method: Method, precompute: bool, outcomes: &[&FoldOutcome]) -> MethodReport {
    let rows: Vec<Row> = outcomes
        .iter()
        .map(|o| Row {
            index: o.fold,
            mv: o.mv,
            accuracy: o.accuracy,
            rho: o.rho,
            objective: o.objective,
            eigengap: o.eigengap,
            residual_norm: o.residual_norm,
            converged: o.converged,
            iterations: o.iterations,
        })
        .collect();
    let col = |f: &dyn Fn(&Row) -> Option<f64>| -> Option<Stat> {
        let values: Vec<f64> = rows.iter().filter_map(f).collect();
        Stat::of(&values)
    };
    let aggregates = Aggregates {
        mv: col(&|r| Some(r.mv as f64)),
        accuracy: col(&|r| Some(r.accuracy)),
        rho: col(&|r| r.rho),
        eigengap: col(&|r| r.eigengap),
    };
    MethodReport {
        method,
        precompute,
        rows,
        aggregates,
    }
}

fn timing_row(method: Method, precompute: bool, outcomes: &[&FoldOutcome]) -> TimingRow {
    let seconds: Vec<f64> = outcomes.iter().map(|o| o.seconds).collect();
    let (mean, sd) = mean_sd(&seconds);
    TimingRow {
        method,
        precompute,
        seconds,
        mean,
        sd,
    }
}

fn fmt_stat(s: Option<Stat>, digits: usize) -> String {
    match s {
        Some(s) => format!("{:.*} ({:.*})", digits, s.mean, digits, s.sd),
        None => "-".into(),
    }
}

fn print_table(reports: &[MethodReport], timings: &[TimingRow]) {
    println!(
        "{:<28} {:>18} {:>18} {:>18} {:>18} {:>18}",
        "method", "MV avg (sd)", "time avg (sd)", "accuracy avg (sd)", "rho avg (sd)", "eigengap avg (sd)"
    );
    for (r, t) in reports.iter().zip(timings) {
        let name = format!("{}{}", r.method, if r.precompute { " [precomputed]" } else { "" });
        println!(
            "{:<28} {:>18} {:>18} {:>18} {:>18} {:>18}",
            name,
            fmt_stat(r.aggregates.mv, 1),
            format!("{:.3} ({:.3})", t.mean, t.sd),
            fmt_stat(r.aggregates.accuracy, 4),
            fmt_stat(r.aggregates.rho, 6),
            fmt_stat(r.aggregates.eigengap, 4),
        );
    }
}

fn write_traces(dir: &Path, tag: &str, outcomes: &[&FoldOutcome], what: &str) -> anyhow::Result<()> {
    for o in outcomes {
        write_trace_csv(&dir.join(format!("{tag}_{what}{}.csv", o.fold)), &o.trace)?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct SynthConfigEcho {
    g: usize,
    q: usize,
    n_train: usize,
    n_test: usize,
    reps: usize,
    k: usize,
    m1: usize,
    m2: usize,
    block: usize,
    tol: f64,
    alpha: f64,
    seed: u64,
}

fn cmd_synth_bench(a: &SynthArgs) -> anyhow::Result<Outcome> {
    if a.g < 2 {
        bail!("--g must be at least 2");
    }
    if a.reps == 0 || a.n_train == 0 || a.n_test == 0 {
        bail!("--reps, --n-train and --n-test must be positive");
    }
    if a.methods.is_empty() {
        bail!("--methods must name at least one method");
    }
    check_alpha(a.alpha, true)?;
    let p = a.g + a.q;
    let m1 = a.m1.unwrap_or(2 * a.k);
    let m2 = a.m2.unwrap_or(4 * a.k);
    let base = solver_config(p, a.k, m1, m2, a.block, a.tol, a.max_outer, a.seed)?;
    let modes = a.precompute.flags();

    let per_rep: Vec<Vec<FoldOutcome>> = (0..a.reps)
        .into_par_iter()
        .map(|rep| -> anyhow::Result<Vec<FoldOutcome>> {
            let (train, test) = synth_ortner(a.g, a.q, a.n_train, a.n_test, random::derive_seed(a.seed, rep as u64))?;
            let mut out = Vec::new();
            for &method in &a.methods {
                for &precompute in &modes {
                    let mut opts = FitOptions::new(method, base.clone());
                    opts.config.seed = random::derive_seed(a.seed ^ 0x5eed, rep as u64);
                    opts.alpha = a.alpha;
                    opts.allow_unregularized = true;
                    opts.precompute = precompute;
                    out.push(evaluate_split(&train, &test, &opts, rep)?);
                }
            }
            Ok(out)
        })
        .collect::<anyhow::Result<_>>()?;

    fs::create_dir_all(a.out.join("traces")).with_context(|| format!("creating --out {}", a.out.display()))?;
    let mut reports = Vec::new();
    let mut timings = Vec::new();
    let mut converged = true;
    for (mi, &method) in a.methods.iter().enumerate() {
        for (pi, &precompute) in modes.iter().enumerate() {
            let col = mi * modes.len() + pi;
            let outcomes: Vec<&FoldOutcome> = per_rep.iter().map(|r| &r[col]).collect();
            converged &= outcomes.iter().all(|o| o.converged);
            let tag = format!("{}{}", method, if precompute { "_precomputed" } else { "" });
            write_traces(&a.out.join("traces"), &tag, &outcomes, "rep")?;
            reports.push(method_report(method, precompute, &outcomes));
            timings.push(timing_row(method, precompute, &outcomes));
        }
    }
    print_table(&reports, &timings);
    let echo = SynthConfigEcho {
        g: a.g,
        q: a.q,
        n_train: a.n_train,
        n_test: a.n_test,
        reps: a.reps,
        k: a.k,
        m1,
        m2,
        block: a.block,
        tol: a.tol,
        alpha: a.alpha,
        seed: a.seed,
    };
    write_json(
        &a.out.join("report.json"),
        &RunReport {
            command: "synth-bench",
            config: echo,
            methods: reports,
        },
    )?;
    write_json(&a.out.join("timing.json"), &timings)?;
    Ok(Outcome::from_flag(converged))
}

#[derive(Debug, Serialize)]
struct CvConfigEcho {
    data: String,
    folds: usize,
    k: usize,
    m1: usize,
    m2: usize,
    block: usize,
    tol: f64,
    alpha: f64,
    precompute: bool,
    seed: u64,
}

fn cmd_cv(a: &CvArgs) -> anyhow::Result<Outcome> {
    check_alpha(a.alpha, a.allow_unregularized)?;
    if a.folds < 2 {
        bail!("--folds must be at least 2");
    }
    let data = read_dataset(&a.data, &a.labels)?;
    let p = data.p();
    let m1 = a.m1_mult * a.k;
    let m2 = (a.m2_mult * a.k).min(p);
    let cfg = solver_config(p, a.k, m1, m2, a.block, a.tol, a.max_outer, a.seed)
        .map_err(|e| anyhow!("{e} (from --m1-mult/--m2-mult)"))?;
    let mut opts = FitOptions::new(a.method, cfg);
    opts.alpha = a.alpha;
    opts.allow_unregularized = a.allow_unregularized;
    opts.precompute = a.precompute;

    // validate the split before spending time on solves
    stratified_folds(&data, a.folds, a.seed)?;
    let outcomes = crate::classify::cross_validate(&data, a.folds, &opts, a.seed)?;
    let refs: Vec<&FoldOutcome> = outcomes.iter().collect();

    fs::create_dir_all(a.out.join("traces")).with_context(|| format!("creating --out {}", a.out.display()))?;
    write_traces(&a.out.join("traces"), a.method.as_str(), &refs, "fold")?;
    let report = method_report(a.method, a.precompute, &refs);
    let timing = timing_row(a.method, a.precompute, &refs);
    print_table(std::slice::from_ref(&report), std::slice::from_ref(&timing));
    let echo = CvConfigEcho {
        data: a.data.display().to_string(),
        folds: a.folds,
        k: a.k,
        m1,
        m2,
        block: a.block,
        tol: a.tol,
        alpha: a.alpha,
        precompute: a.precompute,
        seed: a.seed,
    };
    write_json(
        &a.out.join("report.json"),
        &RunReport {
            command: "cv",
            config: echo,
            methods: vec![report],
        },
    )?;
    write_json(&a.out.join("timing.json"), &[timing])?;
    Ok(Outcome::from_flag(outcomes.iter().all(|o| o.converged)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_are_validated_by_name() {
        let err = solver_config(10, 2, 1, 8, 1, 1e-6, 10, 0).unwrap_err();
        assert!(err.to_string().contains("--m1"));
        let err = solver_config(10, 2, 4, 11, 1, 1e-6, 10, 0).unwrap_err();
        assert!(err.to_string().contains("--m2"));
        let err = solver_config(10, 2, 4, 8, 3, 1e-6, 10, 0).unwrap_err();
        assert!(err.to_string().contains("--block"));
        assert!(check_alpha(0.0, false).unwrap_err().to_string().contains("--allow-unregularized"));
        assert!(check_alpha(0.0, true).is_ok());
    }

    #[test]
    fn label_argument_forms() {
        assert_eq!(parse_labels("3"), LabelSource::ColumnIndex(3));
        assert_eq!(parse_labels("class"), LabelSource::ColumnName("class".into()));
    }

    #[test]
    fn missing_k_is_a_usage_error() {
        assert_eq!(run(["traceratio", "solve", "--pencil-a", "a", "--pencil-b", "b", "--out", "o"]), 2);
        assert_eq!(run(["traceratio", "--help"]), 0);
    }
}
