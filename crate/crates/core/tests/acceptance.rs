//! End-to-end acceptance criteria. Each test prints one `[PASS]` or `[FAIL]`
//! line to stderr (uncaptured) and then asserts.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use qpolicy::emulator::{
    amplitude_encode, amplitude_estimate, apply_depolarizing, expected_index, measure, EstimatorConfig,
    MeasurementHistogram, NoiseModel, StateVector,
};
use qpolicy::engine::{
    estimate_lambda, run_qpolicy, variance_reduce, verify_convergence_bound, verify_stability, BaselineTable,
    LambdaMode, QPolicyConfig,
};
use qpolicy::experiments::{
    estimate_resources, run_ablation, run_noise_comparison, run_query_complexity_study, run_scaling_study,
    run_update_rule_ablation, AblationGrid,
};
use qpolicy::mdp::{
    build_frozenlake, build_gridworld, exact_policy_evaluation, value_iteration, Policy, QTable, TabularMdp,
};
use qpolicy::rng::{stream_rng, Domain};
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ChiSquared, ContinuousCDF};

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn grid() -> TabularMdp {
    build_gridworld(4, 4, 0.2, (3, 3), 0.95).unwrap()
}

fn report(n: u32, title: &str, ok: bool, detail: &str, elapsed: Duration, budget: Duration) {
    let in_time = elapsed <= budget;
    let tag = if ok && in_time { "PASS" } else { "FAIL" };
    let _ = writeln!(
        std::io::stderr(),
        "[{tag}] criterion {n:>2}: {title} | {detail} | {:.2}s (budget {}s)",
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    assert!(ok, "criterion {n} failed: {detail}");
    assert!(in_time, "criterion {n} exceeded its runtime budget");
}

#[test]
fn criterion_01_oracle_equivalence() {
    let _g = serial();
    let start = Instant::now();
    let mdp = grid();
    let (_, pi_star) = value_iteration(&mdp, 1e-12).unwrap();
    let star = pi_star.actions().unwrap();
    let mut mismatches = 0;
    let mut converged = 0;
    for seed in 0..10 {
        let run = run_qpolicy(&mdp, &QPolicyConfig { seed, ..QPolicyConfig::exact() }).unwrap();
        converged += run.converged as usize;
        let got = run.final_policy.actions().unwrap();
        mismatches += (0..mdp.num_states())
            .filter(|&s| !mdp.is_terminal(s) && got[s] != star[s])
            .count();
    }
    let ok = mismatches == 0 && converged == 10;
    let detail = format!("{mismatches} mismatched states, {converged}/10 runs converged");
    report(1, "exact mode matches value iteration", ok, &detail, start.elapsed(), Duration::from_secs(5));
}

#[test]
fn criterion_02_bellman_error_monotonicity() {
    let _g = serial();
    let start = Instant::now();
    let mdp = grid();
    let gamma = mdp.gamma();
    let (mut mono, mut rate, mut steps) = (0, 0, 0);
    for seed in 0..10 {
        let run = run_qpolicy(&mdp, &QPolicyConfig { seed, ..QPolicyConfig::exact() }).unwrap();
        let deltas: Vec<f64> = run.records.iter().map(|r| r.bellman_error_max).collect();
        for t in 0..deltas.len() {
            steps += 1;
            if t > 0 && deltas[t] > deltas[t - 1] + 1e-12 {
                mono += 1;
            }
            if deltas[t] > gamma.powi(t as i32) * deltas[0] * 1.01 {
                rate += 1;
            }
        }
    }
    let ok = mono == 0 && rate == 0;
    let detail = format!("{steps} steps, {mono} increases, {rate} contraction-rate violations");
    report(2, "Bellman error is monotone in exact mode", ok, &detail, start.elapsed(), Duration::from_secs(5));
}

#[test]
fn criterion_03_query_complexity_table() {
    let _g = serial();
    let start = Instant::now();
    let qp = QPolicyConfig {
        estimator: EstimatorConfig::ae_oracle(0.01, 0.04),
        ..QPolicyConfig::default()
    };
    let seeds: Vec<u64> = (0..5).collect();
    let cmp = run_query_complexity_study(&grid(), &qp, 1000, 50, &seeds).unwrap();
    let mc_exact = cmp.monte_carlo.runs.iter().all(|r| {
        r.records.len() == 50 && r.records.iter().all(|x| x.queries_iteration == 1000) && r.total_queries() == 50_000
    });
    let qp_total_max = cmp.quantum.runs.iter().map(|r| r.total_queries()).max().unwrap();
    let ratio = qp_total_max as f64 / 50_000.0;
    let (qp_err, mc_err) = (cmp.quantum.mean_final_error(), cmp.monte_carlo.mean_final_error());
    let ok = mc_exact && ratio <= 0.25 && qp_err <= mc_err;
    let detail = format!(
        "MC {}/iter {} total; Q-Policy {:.0}/iter {} total (ratio {ratio:.3}); final error {qp_err:.4} vs {mc_err:.4}",
        cmp.monte_carlo.queries_per_iteration(),
        cmp.monte_carlo.total_queries(),
        cmp.quantum.queries_per_iteration(),
        qp_total_max
    );
    report(3, "query-complexity comparison", ok, &detail, start.elapsed(), Duration::from_secs(120));
}

#[test]
fn criterion_04_ae_vs_mc_scaling() {
    let _g = serial();
    let start = Instant::now();
    let study = run_scaling_study(&[0.1, 0.05, 0.02, 0.01], 1.0, 0.5, 20_000, 2024).unwrap();
    let ok = (study.ae_slope + 1.0).abs() <= 0.2 && (study.mc_slope + 2.0).abs() <= 0.3;
    let budgets: Vec<String> = study
        .points
        .iter()
        .map(|p| format!("eps {}: AE {} MC {}", p.epsilon, p.ae_queries, p.mc_queries))
        .collect();
    let detail = format!(
        "AE slope {:.3}, MC slope {:.3} ({})",
        study.ae_slope,
        study.mc_slope,
        budgets.join("; ")
    );
    report(4, "AE vs MC query scaling", ok, &detail, start.elapsed(), Duration::from_secs(300));
}

#[test]
fn criterion_05_ae_hard_bound() {
    let _g = serial();
    let start = Instant::now();
    let eps = 0.01;
    let mut violations = 0;
    let mut worst = 0.0f64;
    for seed in 0..100_000u64 {
        let truth = (seed % 1001) as f64 / 1000.0;
        let cfg = EstimatorConfig { seed, ..EstimatorConfig::ae_oracle(eps, 1.0) };
        let (est, _) = amplitude_estimate(truth, &cfg).unwrap();
        let err = (est - truth).abs();
        worst = worst.max(err);
        if err > eps {
            violations += 1;
        }
    }
    let detail = format!("{violations} violations in 1e5 calls, worst error {worst:.6}");
    report(5, "AE oracle error bound", violations == 0, &detail, start.elapsed(), Duration::from_secs(10));
}

#[test]
fn criterion_06_depolarizing_fidelity() {
    let _g = serial();
    let start = Instant::now();
    let zero = StateVector::basis(1, 0).unwrap();
    let ensemble = |p: f64| -> [f64; 2] {
        let mut acc = [0.0; 2];
        for seed in 0..100_000u64 {
            let probs = apply_depolarizing(&zero, p, 0, seed).unwrap().probabilities();
            acc[0] += probs[0];
            acc[1] += probs[1];
        }
        [acc[0] / 1e5, acc[1] / 1e5]
    };
    // rho -> (1 - p) rho + p/3 (X rho X + Y rho Y + Z rho Z) on |0><0| gives Pr(1) = 2p/3
    let oracle_one = |p: f64| 2.0 * p / 3.0;
    let full = ensemble(1.0);
    let three_q = ensemble(0.75);
    let ok = (full[1] - 2.0 / 3.0).abs() <= 0.01
        && (three_q[0] - 0.5).abs() <= 0.01
        && (full[1] - oracle_one(1.0)).abs() <= 0.01
        && (three_q[0] - (1.0 - oracle_one(0.75))).abs() <= 0.01;
    let detail = format!("p=1: Pr(1) = {:.4}; p=0.75: Pr(0) = {:.4}", full[1], three_q[0]);
    report(6, "depolarizing trajectories match the channel", ok, &detail, start.elapsed(), Duration::from_secs(30));
}

#[test]
fn criterion_07_encoding_worked_example() {
    let _g = serial();
    let start = Instant::now();
    let enc = amplitude_encode(&[0.5; 4]).unwrap();
    let amps_ok = enc.state.num_qubits() == 2
        && enc.state.amplitudes().iter().all(|a| (a.re - 0.5).abs() <= 1e-12 && a.im.abs() <= 1e-12);
    let critical = ChiSquared::new(3.0).unwrap().inverse_cdf(1.0 - 0.001);
    let mut passing = 0;
    for seed in 0..100 {
        let h = measure(&enc.state, 512, NoiseModel::noiseless(), seed).unwrap();
        let stat: f64 = (0..4).map(|i| (h.count(i) as f64 - 128.0).powi(2) / 128.0).sum();
        if stat <= critical {
            passing += 1;
        }
    }
    let probs = enc.state.probabilities();
    let exact_mean: f64 = probs.iter().enumerate().map(|(i, p)| i as f64 * p).sum();
    let exact_hist = MeasurementHistogram::from_counts(2, BTreeMap::from([(0, 1), (1, 1), (2, 1), (3, 1)])).unwrap();
    let ok = amps_ok && passing >= 99 && exact_mean == 1.5 && expected_index(&exact_hist).unwrap() == 1.5;
    let detail = format!("amplitudes ok: {amps_ok}; chi-square pass {passing}/100; expected index {exact_mean}");
    report(7, "uniform encoding example", ok, &detail, start.elapsed(), Duration::from_secs(10));
}

#[test]
fn criterion_08_variance_reduction() {
    let _g = serial();
    let start = Instant::now();

    // q_tilde = truth + e and a baseline f = truth + d with corr(e, d) = 0.8
    let mut rng = stream_rng(808, Domain::Synthetic, 0, 0, 0);
    let n = 64;
    let truth: Vec<f64> = (0..n).map(|i| (i as f64 * 0.21).cos()).collect();
    let (mut raw, mut reduced) = (Vec::new(), Vec::new());
    for _ in 0..1000 {
        let (mut q, mut d) = (Vec::new(), Vec::new());
        for &t in &truth {
            let z1: f64 = StandardNormal.sample(&mut rng);
            let z2: f64 = StandardNormal.sample(&mut rng);
            q.push(t + z1);
            d.push(0.8 * z1 + 0.6 * z2);
        }
        let qt = QTable::from_vec(n, 1, q).unwrap();
        let base = BaselineTable { f: QTable::from_vec(n, 1, d).unwrap() };
        let qh = variance_reduce(&qt, &base, -0.8).unwrap();
        for i in 0..n {
            raw.push(qt.get(i, 0) - truth[i]);
            reduced.push(qh.get(i, 0) - truth[i]);
        }
    }
    let var = |x: &[f64]| {
        let m = x.iter().sum::<f64>() / x.len() as f64;
        x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64
    };
    let ratio = var(&reduced) / var(&raw);

    let mut rng = stream_rng(809, Domain::Synthetic, 0, 0, 0);
    let (mut ae, mut cv) = (Vec::new(), Vec::new());
    for _ in 0..100_000 {
        let z1: f64 = StandardNormal.sample(&mut rng);
        let z2: f64 = StandardNormal.sample(&mut rng);
        cv.push(z1);
        ae.push(2.0 * (0.6 * z1 + 0.8 * z2));
    }
    let lambda = estimate_lambda(&ae, &cv).unwrap();
    let lambda_ok = (lambda + 1.2).abs() <= 0.12;

    let cfg = QPolicyConfig { max_iterations: 20, seed: 3, ..QPolicyConfig::default() };
    let arms = run_update_rule_ablation(&grid(), &cfg, &["no_control_variate"], &[3]).unwrap();
    let beta_zero = run_qpolicy(
        &grid(),
        &QPolicyConfig { lambda_mode: LambdaMode::FixedBeta, beta: 0.0, ..cfg },
    )
    .unwrap();
    let identical = arms[0].runs[0].records == beta_zero.records;

    let ok = ratio <= 0.5 && lambda_ok && identical;
    let detail = format!("variance ratio {ratio:.3}; lambda {lambda:.4} (optimum -1.2); no_control_variate == beta 0: {identical}");
    report(8, "control-variate variance reduction", ok, &detail, start.elapsed(), Duration::from_secs(30));
}

#[test]
fn criterion_09_stability_bound() {
    let _g = serial();
    let start = Instant::now();
    let mdp = grid();
    let (_, pi_star) = value_iteration(&mdp, 1e-12).unwrap();
    let r = verify_stability(&mdp, &pi_star, 0.05, 100, 9).unwrap();
    let detail = format!("{} violations over {} trials; max gap {:.2e} vs bound {:.3}", r.violations, r.trials, r.max_gap, r.bound);
    report(9, "policy-update stability bound", r.violations == 0, &detail, start.elapsed(), Duration::from_secs(30));
}

#[test]
fn criterion_10_convergence_bound() {
    let _g = serial();
    let start = Instant::now();
    let g = verify_convergence_bound(&grid(), 0.01, 10).unwrap();

    let two = TabularMdp::new(
        2,
        2,
        vec![vec![(0, 1.0)], vec![(0, 0.4), (1, 0.6)], vec![(1, 1.0)], vec![(0, 0.7), (1, 0.3)]],
        vec![0.2, 0.1, 0.5, 0.0],
        0.5,
        Default::default(),
        0,
    )
    .unwrap();
    // optimum by enumerating all four deterministic policies
    let mut v_star = [f64::NEG_INFINITY; 2];
    for code in 0..4 {
        let pi = Policy::deterministic(vec![code % 2, code / 2], 2).unwrap();
        let v = pi.values(&exact_policy_evaluation(&two, &pi, 1e-13).unwrap());
        v_star[0] = v_star[0].max(v[0]);
        v_star[1] = v_star[1].max(v[1]);
    }
    let (q_vi, _) = value_iteration(&two, 1e-13).unwrap();
    let vi_matches = q_vi.greedy_values().iter().zip(&v_star).all(|(a, b)| (a - b).abs() < 1e-10);
    let mut two_ok = true;
    let mut worst_gap = 0.0f64;
    for seed in 0..20 {
        let r = verify_convergence_bound(&two, 0.1, seed).unwrap();
        worst_gap = worst_gap.max(r.gap);
        two_ok &= r.holds && (r.bound - 0.4).abs() < 1e-12;
    }
    let ok = g.holds && g.iterations == 93 && vi_matches && two_ok;
    let detail = format!(
        "gridworld K={} gap {:.2e} <= {:.2}; two-state worst gap {worst_gap:.2e} <= 0.4",
        g.iterations, g.gap, g.bound
    );
    report(10, "approximate policy iteration bound", ok, &detail, start.elapsed(), Duration::from_secs(30));
}

#[test]
fn criterion_11_resource_estimates() {
    let _g = serial();
    let start = Instant::now();
    let r = estimate_resources(&grid(), &QPolicyConfig::default(), 1.0).unwrap();
    let gates_ok = (r.gates_per_iteration as f64 - 5600.0).abs() <= 0.15 * 5600.0;
    let secs_ok = (r.seconds_per_iteration_at_1khz - 5.6).abs() <= 0.15 * 5.6;
    let ok = r.qubits == 6 && gates_ok && secs_ok;
    let detail = format!(
        "{} qubits, {} gates/iteration, {:.2} s at 1 kHz",
        r.qubits, r.gates_per_iteration, r.seconds_per_iteration_at_1khz
    );
    report(11, "resource estimates", ok, &detail, start.elapsed(), Duration::from_secs(1));
}

fn qpolicy_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qpolicy"))
}

#[test]
fn criterion_12_ablation_grid() {
    let _g = serial();
    let start = Instant::now();
    let grid_spec = AblationGrid {
        epsilons: vec![0.001, 0.01, 0.05],
        shot_counts: vec![128, 512, 1024, 2048, 4096],
        seeds: (0..5).collect(),
        iterations: 100,
    };
    let cells = run_ablation(&grid(), &grid_spec, &QPolicyConfig::default()).unwrap();
    let complete = cells.len() == 15
        && cells.iter().all(|c| c.runs.len() == 5 && c.summary.as_ref().is_some_and(|s| s.len() == 100));
    let mean_at = |shots: u64| {
        let sel: Vec<f64> = cells.iter().filter(|c| c.shots == shots).map(|c| c.mean_final_error()).collect();
        sel.iter().sum::<f64>() / sel.len() as f64
    };
    let (e4096, e128) = (mean_at(4096), mean_at(128));

    let dir = tempfile::tempdir().unwrap();
    let status = qpolicy_bin()
        .args(["ablate", "--epsilons", "0.001,0.01,0.05", "--shots", "128,512,1024,2048,4096"])
        .args(["--iters", "100", "--seeds", "5", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    let arm_files = std::fs::read_dir(dir.path())
        .unwrap()
        .filter(|e| {
            let name = e.as_ref().unwrap().file_name().into_string().unwrap();
            name.starts_with("ablation_eps") && name.ends_with(".csv")
        })
        .count();
    let summary = std::fs::read_to_string(dir.path().join("ablation_summary.csv")).unwrap_or_default();
    let summary_rows = summary.lines().count().saturating_sub(1);
    let emitted = status.success() && arm_files == 15 && summary_rows == 1500;

    let ok = complete && e4096 <= e128 && emitted;
    let detail = format!(
        "75 runs complete: {complete}; final error 4096 shots {e4096:.4} vs 128 shots {e128:.4}; {arm_files} arm CSVs, {summary_rows} summary rows"
    );
    report(12, "ablation grid", ok, &detail, start.elapsed(), Duration::from_secs(900));
}

#[test]
fn criterion_13_noise_study() {
    let _g = serial();
    let start = Instant::now();
    let lake = build_frozenlake(8, true, 0.95).unwrap();
    let cfg = QPolicyConfig { max_iterations: 50, ..QPolicyConfig::default() };
    let seeds: Vec<u64> = (0..50).collect();
    let arms = run_noise_comparison(&lake, &[0.0, 0.01], &cfg, &seeds).unwrap();
    let (clean, noisy) = (arms[0].mean_final_error(), arms[1].mean_final_error());
    let identical = arms[0].runs.iter().all(|r| {
        let direct = run_qpolicy(
            &lake,
            &QPolicyConfig {
                seed: r.seed,
                estimator: EstimatorConfig { noise: NoiseModel::noiseless(), ..cfg.estimator },
                ..cfg.clone()
            },
        )
        .unwrap();
        direct.records == r.records
    });
    let ok = noisy >= clean && identical;
    let detail = format!("mean final error p=0.01 {noisy:.5} vs p=0 {clean:.5}; p=0 equals noiseless: {identical}");
    report(13, "depolarizing noise study", ok, &detail, start.elapsed(), Duration::from_secs(600));
}

fn run_cli(args: &[&str], out: &Path, threads: &str) -> bool {
    qpolicy_bin()
        .args(args)
        .arg("--out")
        .arg(out)
        .env("QPOLICY_THREADS", threads)
        .status()
        .unwrap()
        .success()
}

fn csv_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

#[test]
fn criterion_14_cli_determinism() {
    let _g = serial();
    let start = Instant::now();
    let commands: [&[&str]; 5] = [
        &["run", "--iters", "20", "--seeds", "1,2,3"],
        &["ablate", "--epsilons", "0.01,0.05", "--shots", "128,512", "--iters", "10", "--seeds", "2"],
        &["compare-queries", "--iters", "10", "--mc-budget", "200", "--seeds", "2", "--mode", "ae", "--c-ae", "0.04"],
        &["noise-study", "--p-values", "0,0.05", "--iters", "10", "--seeds", "2"],
        &["update-rules", "--iters", "10", "--seeds", "2"],
    ];
    let mut failures = Vec::new();
    let mut files = 0;
    for cmd in commands {
        let dirs: Vec<tempfile::TempDir> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
        let ran = run_cli(cmd, dirs[0].path(), "1") && run_cli(cmd, dirs[1].path(), "1") && run_cli(cmd, dirs[2].path(), "8");
        let outputs: Vec<_> = dirs.iter().map(|d| csv_files(d.path())).collect();
        files += outputs[0].len();
        if !ran || outputs[0].is_empty() || outputs[0] != outputs[1] || outputs[0] != outputs[2] {
            failures.push(cmd[0]);
        }
    }
    let ok = failures.is_empty();
    let detail = format!("{files} CSV files compared across reruns and 1/8 threads; mismatches: {failures:?}");
    report(14, "CLI output determinism", ok, &detail, start.elapsed(), Duration::from_secs(120));
}
