//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits non-zero if any criterion fails.
//!
//! Set `TRACERATIO_FULL_SCALE=1` to run the synthetic benchmark at its full
//! size (n_i = 50000, q = 5000) in addition to the desk-scale gate.

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;

use common::{diag, orth, rng, spd, symmetric, uniform};
use traceratio::classify::{evaluate_split, synth_ortner, FitOptions, LabeledDataset, Method, ScatterModel};
use traceratio::dense;
use traceratio::diagnostics::{self, AngleBoundContext};
use traceratio::fda_subspace;
use traceratio::krylov::{lanczos_topk, LanczosOptions};
use traceratio::operators::{OperatorPencil, SymmetricOperator};
use traceratio::random;
use traceratio::tr_newton::{bisection_rho, linear_rate_bound, solve_dense_tr, NewtonOptions};
use traceratio::tr_subspace::{self, IterationView, Observer, SolverConfig, SubspaceState};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_budget(start: Instant, limit: Duration) -> Result<(), String> {
    let used = start.elapsed();
    ensure(used < limit, || format!("runtime {:.1}s exceeds {:.0}s", used.as_secs_f64(), limit.as_secs_f64()))
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn example_pencil() -> (DMatrix<f64>, DMatrix<f64>) {
    (diag(&[3.0, 2.0, 1.0]), diag(&[1.0, 4.0, 3.0]))
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let (a, b) = example_pencil();
    let newton = solve_dense_tr(&a, &b, 2, None, &NewtonOptions::dense().with_tol(1e-12)).map_err(err)?;
    let bisect = bisection_rho(&a, &b, 2, 1e-13).map_err(err)?;
    let pencil = OperatorPencil::from_dense(a.clone(), b.clone()).map_err(err)?;
    let cfg = SolverConfig::new(2).with_sizes(2, 3).with_tol(1e-11);
    let sub = tr_subspace::solve(&pencil, &cfg, None).map_err(err)?;
    for (name, rho) in [("tr_newton", newton.rho), ("bisection", bisect), ("tr_subspace", sub.rho)] {
        ensure((rho - 1.0).abs() <= 1e-10, || format!("{name} rho = {rho}"))?;
    }
    let split = dense::sym_eigenvalues(&(&a - &b * 1.0)).map_err(err)?;
    ensure(
        (split[0] - 2.0).abs() < 1e-12 && (split[1] + 2.0).abs() < 1e-12 && (split[2] + 2.0).abs() < 1e-12,
        || format!("A - B eigenvalues {split:?}"),
    )?;
    let e1 = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
    let mut worst = 0.0f64;
    for v in [&newton.v, &sub.v] {
        worst = worst.max(diagnostics::sin_angle(v, &e1).map_err(err)?);
    }
    ensure(worst <= 1e-8, || format!("e1 angle sine {worst:e}"))?;
    within_budget(start, Duration::from_secs(1))?;
    Ok(format!("rho = 1 from all three solvers, e1 angle sine {worst:.1e}"))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let (mut worst_newton, mut worst_sub) = (0.0f64, 0.0f64);
    for seed in 0..100u64 {
        let mut r = rng(1000 + seed);
        let k = uniform(&mut r, 1, 5);
        let p = uniform(&mut r, 4 * k + 1, 30);
        let a = symmetric(p, &mut r);
        let b = spd(p, &mut r);
        let reference = bisection_rho(&a, &b, k, 1e-13).map_err(err)?;
        let newton = solve_dense_tr(&a, &b, k, None, &NewtonOptions::dense().with_tol(1e-11).with_seed(seed))
            .map_err(err)?;
        let pencil = OperatorPencil::from_dense(a, b).map_err(err)?;
        let cfg = SolverConfig::new(k).with_sizes(2 * k, 4 * k).with_tol(1e-8).with_seed(seed);
        let sub = tr_subspace::solve(&pencil, &cfg, None).map_err(err)?;
        worst_newton = worst_newton.max((newton.rho - reference).abs());
        worst_sub = worst_sub.max((sub.rho - reference).abs());
        ensure((newton.rho - reference).abs() <= 1e-8, || {
            format!("seed {seed}: newton {} vs bisection {reference}", newton.rho)
        })?;
        ensure((sub.rho - reference).abs() <= 1e-6, || {
            format!("seed {seed}: subspace {} vs bisection {reference}", sub.rho)
        })?;
    }
    within_budget(start, Duration::from_secs(60))?;
    Ok(format!("100 pencils, max |newton - bisection| {worst_newton:.1e}, max |subspace - bisection| {worst_sub:.1e}"))
}

/// Monitors one tr_subspace run for criteria 3 and 4.
struct Monitor<'a> {
    k: usize,
    a: &'a DMatrix<f64>,
    b: &'a DMatrix<f64>,
    ctx: &'a AngleBoundContext,
    beta_star: f64,
    last_rho: Option<f64>,
    last_v: Option<DMatrix<f64>>,
    monotone_violations: Vec<String>,
    restart_failures: Vec<String>,
    restarts: usize,
    bound_checks: usize,
    bound_failures: Vec<String>,
    quadratic_checks: usize,
    quadratic_violations: usize,
    failure: Option<String>,
}

impl Monitor<'_> {
    fn push_rho(&mut self, rho: f64, at: &str) {
        if let Some(prev) = self.last_rho {
            if rho < prev - 1e-12 * prev.abs().max(1.0) {
                self.monotone_violations.push(format!("{at}: {prev} -> {rho}"));
            }
        }
        self.last_rho = Some(rho);
    }

    fn observe(&mut self, view: &IterationView<'_>) -> Result<(), String> {
        let rho = view.record.rho;
        let v = view.state.u() * view.z;
        let r_norm = dense::spectral_norm(view.residual);
        let bound = self.ctx.check(&v, rho, r_norm, view.lambda).map_err(err)?;
        if bound.sep > 1e-6 {
            self.bound_checks += 1;
            if !bound.holds(1e-10) {
                self.bound_failures.push(format!(
                    "outer {}: sin {:e} > bound {:e}",
                    view.record.outer_index,
                    bound.lhs,
                    bound.rhs.unwrap_or(f64::NAN)
                ));
            }
        }
        // quadratic scale check: (rho* - rho) beta* <= ||R||^2 (1 + k / delta)
        let m_bar = diagnostics::m_star(self.a, self.b, &v, rho).map_err(err)?;
        let m_bar_eigs = dense::sym_eigenvalues(&m_bar).map_err(err)?;
        let lam = dense::sym_eigenvalues(view.lambda).map_err(err)?;
        let delta = lam
            .iter()
            .flat_map(|x| m_bar_eigs.iter().map(move |y| (x - y).abs()))
            .fold(f64::INFINITY, f64::min);
        if delta > 0.0 {
            self.quadratic_checks += 1;
            let lhs = (self.ctx.rho_star() - rho) * self.beta_star;
            let rhs = r_norm * r_norm * (1.0 + self.k as f64 / delta);
            if lhs > rhs + 1e-12 {
                self.quadratic_violations += 1;
            }
        }
        self.push_rho(rho, &format!("outer {}", view.record.outer_index));
        self.last_v = Some(v);
        Ok(())
    }

    fn on_restart(&mut self, state: &SubspaceState, z: &DMatrix<f64>, rho: f64) -> Result<(), String> {
        self.restarts += 1;
        let before = self.last_v.clone().ok_or("restart before any iteration")?;
        let v_carried = state.u() * z;
        let carried = diagnostics::sin_angle(&v_carried, &before).map_err(err)?;
        let again = tr_subspace::extract(state, self.k, None, &NewtonOptions::dense().with_tol(1e-12))
            .map_err(err)?;
        let v_again = state.u() * &again.z;
        let angle = diagnostics::sin_angle(&v_again, &before).map_err(err)?;
        let tag = self.restarts;
        if (again.rho - rho).abs() > 1e-12 * rho.abs().max(1.0) {
            self.restart_failures.push(format!("restart {tag}: rho {rho} re-extracted as {}", again.rho));
        }
        if angle > 1e-8 || carried > 1e-8 {
            self.restart_failures
                .push(format!("restart {tag}: span moved by {angle:e} (carried {carried:e})"));
        }
        self.push_rho(again.rho, &format!("restart {tag}"));
        Ok(())
    }
}

impl Observer for Monitor<'_> {
    fn iteration(&mut self, view: &IterationView<'_>) {
        if self.failure.is_none() {
            if let Err(e) = self.observe(view) {
                self.failure = Some(e);
            }
        }
    }

    fn restarted(&mut self, state: &SubspaceState, z: &DMatrix<f64>, rho: f64) {
        if self.failure.is_none() {
            if let Err(e) = self.on_restart(state, z, rho) {
                self.failure = Some(e);
            }
        }
    }
}

struct SubspaceRuns {
    runs: usize,
    restarts: usize,
    monotone_violations: Vec<String>,
    restart_failures: Vec<String>,
    bound_checks: usize,
    bound_failures: Vec<String>,
    quadratic_checks: usize,
    quadratic_violations: usize,
    unconverged: usize,
}

fn subspace_runs() -> Result<SubspaceRuns, String> {
    let (p, k) = (100, 5);
    let mut out = SubspaceRuns {
        runs: 50,
        restarts: 0,
        monotone_violations: Vec::new(),
        restart_failures: Vec::new(),
        bound_checks: 0,
        bound_failures: Vec::new(),
        quadratic_checks: 0,
        quadratic_violations: 0,
        unconverged: 0,
    };
    for seed in 0..out.runs as u64 {
        let mut r = rng(3000 + seed);
        let a = symmetric(p, &mut r);
        let b = spd(p, &mut r);
        let star = solve_dense_tr(&a, &b, k, None, &NewtonOptions::dense().with_tol(1e-12)).map_err(err)?;
        let ctx = AngleBoundContext::new(&a, &b, &star.v, star.rho).map_err(err)?;
        let beta_star = (star.v.transpose() * &b * &star.v).trace();
        let mut monitor = Monitor {
            k,
            a: &a,
            b: &b,
            ctx: &ctx,
            beta_star,
            last_rho: None,
            last_v: None,
            monotone_violations: Vec::new(),
            restart_failures: Vec::new(),
            restarts: 0,
            bound_checks: 0,
            bound_failures: Vec::new(),
            quadratic_checks: 0,
            quadratic_violations: 0,
            failure: None,
        };
        let pencil = OperatorPencil::from_dense(a.clone(), b.clone()).map_err(err)?;
        let cfg = SolverConfig::new(k).with_sizes(10, 25).with_tol(1e-6).with_seed(seed);
        let sol = tr_subspace::solve_observed(&pencil, &cfg, None, &mut monitor).map_err(err)?;
        if let Some(f) = monitor.failure {
            return Err(format!("run {seed}: {f}"));
        }
        if !sol.converged {
            out.unconverged += 1;
        }
        let tag = |v: Vec<String>| v.into_iter().map(move |s| format!("run {seed} {s}"));
        out.restarts += monitor.restarts;
        out.monotone_violations.extend(tag(monitor.monotone_violations));
        out.restart_failures.extend(tag(monitor.restart_failures));
        out.bound_checks += monitor.bound_checks;
        out.bound_failures.extend(tag(monitor.bound_failures));
        out.quadratic_checks += monitor.quadratic_checks;
        out.quadratic_violations += monitor.quadratic_violations;
    }
    Ok(out)
}

fn criterion_3(runs: &SubspaceRuns) -> Outcome {
    ensure(runs.unconverged == 0, || format!("{} runs did not converge", runs.unconverged))?;
    ensure(runs.restarts > 0, || "no restart occurred".into())?;
    ensure(runs.monotone_violations.is_empty(), || {
        format!("{} decreases, first: {}", runs.monotone_violations.len(), runs.monotone_violations[0])
    })?;
    ensure(runs.restart_failures.is_empty(), || {
        format!("{} restart mismatches, first: {}", runs.restart_failures.len(), runs.restart_failures[0])
    })?;
    Ok(format!("{} runs, {} restarts, rho non-decreasing, re-extraction reproduces rho and span", runs.runs, runs.restarts))
}

fn criterion_4(runs: &SubspaceRuns) -> Outcome {
    ensure(runs.bound_checks > 0, || "sep never exceeded 1e-6".into())?;
    ensure(runs.bound_failures.is_empty(), || {
        format!("{} bound violations, first: {}", runs.bound_failures.len(), runs.bound_failures[0])
    })?;
    if runs.quadratic_violations > 0 {
        eprintln!(
            "warning: quadratic scale check exceeded in {} of {} iterations",
            runs.quadratic_violations, runs.quadratic_checks
        );
    }
    Ok(format!(
        "angle bound held at {} iterations; quadratic scale check exceeded at {} of {}",
        runs.bound_checks, runs.quadratic_violations, runs.quadratic_checks
    ))
}

fn criterion_5() -> Outcome {
    let (mut worst_value, mut worst_angle) = (0.0f64, 0.0f64);
    for seed in 0..50u64 {
        let mut r = rng(5000 + seed);
        let k = uniform(&mut r, 1, 5);
        let p = uniform(&mut r, (4 * k + 1).max(20), 200);
        let a = symmetric(p, &mut r);
        let b = spd(p, &mut r);
        let reference = dense::gen_sym_eig(&a, &b).map_err(err)?;
        let pencil = OperatorPencil::from_dense(a, b).map_err(err)?;
        let cfg = SolverConfig::new(k).with_sizes(2 * k, 4 * k).with_tol(1e-10).with_seed(seed);
        let mut objectives: Vec<f64> = Vec::new();
        let mut record = |rec: &traceratio::subspace::IterationRecord| objectives.push(rec.rho);
        let sol = fda_subspace::solve_gep_observed(&pencil, &cfg, None, &mut record).map_err(err)?;
        ensure(sol.converged, || format!("seed {seed}: not converged"))?;
        for i in 0..k {
            let d = (sol.lambda[i] - reference.values[i]).abs();
            worst_value = worst_value.max(d);
            ensure(d <= 1e-8, || format!("seed {seed}: eigenvalue {i} off by {d:e}"))?;
        }
        let target = orth(&reference.vectors.columns(0, k).into_owned());
        let angle = diagnostics::sin_angle(&orth(&sol.v), &target).map_err(err)?;
        worst_angle = worst_angle.max(angle);
        ensure(angle <= 1e-6, || format!("seed {seed}: span angle sine {angle:e}"))?;
        for w in objectives.windows(2) {
            ensure(w[1] >= w[0] - 1e-12 * w[0].abs().max(1.0), || {
                format!("seed {seed}: objective decreased {} -> {}", w[0], w[1])
            })?;
        }
    }
    Ok(format!("50 pencils, max eigenvalue error {worst_value:.1e}, max angle sine {worst_angle:.1e}"))
}

fn criterion_6() -> Outcome {
    let mut forced = 0;
    let mut worst = 0.0f64;
    for seed in 0..50u64 {
        let mut r = rng(6000 + seed);
        let hard = seed < 15;
        let p = uniform(&mut r, 60, 200);
        let (m, opts) = if hard {
            // slowly decaying spectrum with a narrow top gap
            let q = random::orthonormal_matrix(p, p, &mut r);
            let values: Vec<f64> = (0..p).map(|i| 1.0 - i as f64 / p as f64).collect();
            let m = &q * diag(&values) * q.transpose();
            (m, LanczosOptions::new(3, 5, 9, 1e-10))
        } else {
            let k = uniform(&mut r, 1, 6);
            (symmetric(p, &mut r), LanczosOptions::new(k, 2 * k, (4 * k).max(20), 1e-10))
        };
        let opts = LanczosOptions { seed, ..opts };
        let reference = dense::sym_eigenvalues(&m).map_err(err)?;
        let op = SymmetricOperator::dense(m).map_err(err)?;
        let pairs = lanczos_topk(&op, &opts, None).map_err(|e| format!("seed {seed}: {}", traceratio::Error::from(e)))?;
        if pairs.restarts >= 5 {
            forced += 1;
        }
        for i in 0..opts.k {
            let d = (pairs.values[i] - reference[i]).abs();
            worst = worst.max(d);
            ensure(d <= 1e-8, || format!("seed {seed}: value {i} off by {d:e}"))?;
        }
    }
    ensure(forced >= 10, || format!("only {forced} instances needed 5 or more restarts"))?;
    Ok(format!("50 operators, {forced} with >= 5 restarts, max value error {worst:.1e}"))
}

struct SynthScale {
    q: usize,
    n_train: usize,
    n_test: usize,
}

fn synth_table(scale: &SynthScale, reps: usize, limit: Duration) -> Outcome {
    let start = Instant::now();
    let (g, k) = (3, 2);
    let mut lines = Vec::new();
    let mut means = [0.0f64; 3];
    for rep in 0..reps {
        let (train, test) =
            synth_ortner(g, scale.q, scale.n_train, scale.n_test, random::derive_seed(77, rep as u64)).map_err(err)?;
        let mut outcomes = Vec::new();
        for method in Method::ALL {
            let mut opts = FitOptions::new(method, SolverConfig::new(k).with_seed(rep as u64));
            opts.alpha = 0.0;
            opts.allow_unregularized = true;
            outcomes.push(evaluate_split(&train, &test, &opts, rep).map_err(err)?);
        }
        let [sub, ks, fda] = [&outcomes[0], &outcomes[1], &outcomes[2]];
        for (i, o) in outcomes.iter().enumerate() {
            means[i] += o.accuracy / reps as f64;
            ensure(o.converged, || format!("rep {rep}: {} did not converge", Method::ALL[i]))?;
            if i < 2 {
                ensure(o.eigengap.is_some_and(|e| e > 0.0), || {
                    format!("rep {rep}: {} eigengap {:?}", Method::ALL[i], o.eigengap)
                })?;
            }
        }
        let accs: Vec<f64> = outcomes.iter().map(|o| o.accuracy).collect();
        let spread = accs.iter().cloned().fold(f64::MIN, f64::max) - accs.iter().cloned().fold(f64::MAX, f64::min);
        ensure(spread <= 0.01, || format!("rep {rep}: accuracies {accs:?}"))?;
        let (r1, r2) = (sub.rho.unwrap(), ks.rho.unwrap());
        ensure((r1 - r2).abs() <= 1e-6, || format!("rep {rep}: rho {r1} vs {r2}"))?;
        ensure(sub.mv < ks.mv, || format!("rep {rep}: MV {} (subspace) vs {} (kschur)", sub.mv, ks.mv))?;
        lines.push(format!(
            "rep {rep}: rho {r1:.6} eigengap {:.4} MV {}/{}/{} accuracy {:.4}/{:.4}/{:.4}",
            sub.eigengap.unwrap(),
            sub.mv,
            ks.mv,
            fda.mv,
            accs[0],
            accs[1],
            accs[2]
        ));
    }
    for line in &lines {
        println!("    {line}");
    }
    for (i, m) in means.iter().enumerate() {
        ensure((0.80..=0.90).contains(m), || format!("{} mean accuracy {m}", Method::ALL[i]))?;
    }
    within_budget(start, limit)?;
    Ok(format!(
        "{reps} reps, mean accuracy {:.4}/{:.4}/{:.4}, {:.0}s",
        means[0],
        means[1],
        means[2],
        start.elapsed().as_secs_f64()
    ))
}

fn criterion_7() -> Outcome {
    let scale = SynthScale {
        q: 500,
        n_train: 5000,
        n_test: 1000,
    };
    let result = synth_table(&scale, 5, Duration::from_secs(600));
    if std::env::var("TRACERATIO_FULL_SCALE").is_ok_and(|v| v == "1") {
        let full = SynthScale {
            q: 5000,
            n_train: 50000,
            n_test: 1000,
        };
        match synth_table(&full, 1, Duration::from_secs(u64::MAX / 4)) {
            Ok(s) => println!("    full scale: {s}"),
            Err(e) => println!("    full scale failed: {e}"),
        }
    }
    result
}

fn criterion_8() -> Outcome {
    let mut worst_ratio = 0.0f64;
    let mut steps = 0;
    for seed in 0..20u64 {
        let mut r = rng(8000 + seed);
        let p = uniform(&mut r, 5, 40);
        let k = uniform(&mut r, 1, (p - 1).min(6));
        let a = symmetric(p, &mut r);
        let b = spd(p, &mut r);
        let rate = linear_rate_bound(&b, k).map_err(err)?;
        let rho_star = bisection_rho(&a, &b, k, 1e-14).map_err(err)?;
        let res = solve_dense_tr(&a, &b, k, None, &NewtonOptions::dense().with_tol(1e-12).with_seed(seed))
            .map_err(err)?;
        for (i, w) in res.rho_history.windows(2).enumerate() {
            let (prev, next) = ((w[0] - rho_star).abs(), (w[1] - rho_star).abs());
            steps += 1;
            ensure(next <= rate * prev + 1e-12, || {
                format!("seed {seed} step {}: {next:e} > {rate} * {prev:e}", i + 1)
            })?;
            if prev > 1e-8 {
                worst_ratio = worst_ratio.max(next / prev / rate.max(f64::MIN_POSITIVE));
            }
        }
    }
    Ok(format!("{steps} steps over 20 runs, largest error ratio / bound {worst_ratio:.3}"))
}

fn criterion_9() -> Outcome {
    let mut worst = [0.0f64; 3];
    for seed in 0..50u64 {
        let mut r = rng(9000 + seed);
        let g = uniform(&mut r, 2, 6);
        let p = uniform(&mut r, g + 1, 40);
        let n = uniform(&mut r, 3 * g, 120);
        let mut x = random::gaussian_matrix(n, p, &mut r);
        let y: Vec<usize> = (0..n).map(|i| i % g).collect();
        for (i, &label) in y.iter().enumerate() {
            x[(i, label % p)] += 3.0;
        }
        let data = LabeledDataset::new(x, y).map_err(err)?;
        let factored = ScatterModel::from_data(&data, false).map_err(err)?;
        let pre = ScatterModel::from_data(&data, true).map_err(err)?;
        let sb = factored.between_operator().map_err(err)?;
        let sw = factored.factored_within_operator().map_err(err)?;
        let st = factored.total_operator().map_err(err)?;
        let sw_pre = pre.within_operator().map_err(err)?;
        let st_norm = dense::spectral_norm(&st.densify().map_err(err)?);
        let probes = random::gaussian_matrix(p, 4, &mut r);
        let apply = |op: &SymmetricOperator| op.apply(&probes).map_err(err);
        let split = apply(&sb)? + apply(&sw)? - apply(&st)?;
        let w_diff = apply(&sw)? - apply(&sw_pre)?;
        for (j, v) in probes.column_iter().enumerate() {
            let scale = st_norm * v.norm();
            worst[0] = worst[0].max(split.column(j).norm() / scale);
            worst[1] = worst[1].max(w_diff.column(j).norm() / scale);
        }
        let sv = dense::thin_svd(factored.h_b()).map_err(err)?;
        let trailing = sv.values[sv.values.len() - 1] / sv.values[0];
        worst[2] = worst[2].max(trailing);
    }
    ensure(worst[0] <= 1e-10, || format!("S_B + S_W - S_T relative {:e}", worst[0]))?;
    ensure(worst[1] <= 1e-10, || format!("factored vs precomputed S_W relative {:e}", worst[1]))?;
    ensure(worst[2] <= 1e-10, || format!("trailing singular value of H_B relative {:e}", worst[2]))?;
    Ok(format!(
        "50 datasets, split {:.1e}, S_W forms {:.1e}, H_B trailing {:.1e}",
        worst[0], worst[1], worst[2]
    ))
}

fn synth_bench_once(out: &Path) -> Result<(), String> {
    let args = [
        "traceratio", "synth-bench", "--g", "3", "--q", "40", "--n-train", "200", "--n-test", "100", "--reps", "3",
        "--k", "2", "--precompute", "both", "--seed", "11", "--out",
    ];
    let mut argv: Vec<String> = args.iter().map(|s| s.to_string()).collect();
    argv.push(out.display().to_string());
    let code = traceratio::cli::run(argv);
    ensure(code == 0, || format!("synth-bench exited with {code}"))
}

fn tree_bytes(root: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files = vec![("report.json".to_string(), std::fs::read(root.join("report.json")).map_err(err)?)];
    let mut traces: Vec<_> = std::fs::read_dir(root.join("traces"))
        .map_err(err)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(err)?;
    traces.sort();
    for path in traces {
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        files.push((name, std::fs::read(&path).map_err(err)?));
    }
    Ok(files)
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().map_err(err)?;
    let (first, second) = (dir.path().join("a"), dir.path().join("b"));
    synth_bench_once(&first)?;
    synth_bench_once(&second)?;
    let (x, y) = (tree_bytes(&first)?, tree_bytes(&second)?);
    ensure(x.len() == y.len(), || "different file sets".into())?;
    for ((na, a), (nb, b)) in x.iter().zip(&y) {
        ensure(na == nb && a == b, || format!("{na} differs"))?;
    }
    Ok(format!("{} files byte-identical across two runs", x.len()))
}

fn run(n: usize, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let result = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    let secs = start.elapsed().as_secs_f64();
    match result {
        Ok(detail) => {
            println!("criterion {n:>2}: PASS [{secs:.1}s] {detail}");
            true
        }
        Err(detail) => {
            println!("criterion {n:>2}: FAIL [{secs:.1}s] {detail}");
            false
        }
    }
}

fn main() {
    let mut ok = true;
    ok &= run(1, criterion_1);
    ok &= run(2, criterion_2);
    let shared = Instant::now();
    let runs = subspace_runs();
    println!("shared runs for criteria 3 and 4: {:.1}s", shared.elapsed().as_secs_f64());
    ok &= run(3, || criterion_3(runs.as_ref().map_err(Clone::clone)?));
    ok &= run(4, || criterion_4(runs.as_ref().map_err(Clone::clone)?));
    ok &= run(5, criterion_5);
    ok &= run(6, criterion_6);
    ok &= run(7, criterion_7);
    ok &= run(8, criterion_8);
    ok &= run(9, criterion_9);
    ok &= run(10, criterion_10);
    if ok {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: FAILED");
        std::process::exit(1);
    }
}
