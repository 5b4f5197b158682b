//! Acceptance suite. Each criterion prints one PASS/FAIL line followed by the
//! measurements behind it; the process fails if any criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use designlab::analysis::{bias_decompose, expected_error, interpolation_check, mc_error_estimate, variance_at};
use designlab::experiments::{
    aggregate, run_double_descent, run_knn_sweep, run_validation, ExperimentConfig, ExperimentTable, Metric, Statistic,
    ValidationConfig, DEFAULT_P_GRID,
};
use designlab::smoothers::{knn_weights, Smoother};
use designlab::{make_rng, Dataset, DgpSpec, InputLaw, NoiseModel, SeedSpec, Setting, SimRng, SmootherSpec, Truth};

struct Outcome {
    passed: bool,
    details: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome {
            passed: true,
            details: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: String) {
        self.passed &= ok;
        self.details
            .push(format!("{} {what}", if ok { "ok  " } else { "FAIL" }));
    }
}

/// Mean of `b − a` over paired replications and its standard error.
fn paired_gap(a: &[f64], b: &[f64]) -> (f64, f64) {
    let d: Vec<f64> = a.iter().zip(b).map(|(a, b)| b - a).collect();
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn double_descent_config() -> ExperimentConfig {
    // The default grid plus p = s, which the shape criterion needs.
    let mut p_range = DEFAULT_P_GRID.to_vec();
    p_range.push(50);
    p_range.sort_unstable();
    ExperimentConfig {
        p_range,
        ..ExperimentConfig::double_descent()
    }
}

fn interpolator_in_sample_error(dd: &ExperimentTable, elapsed: Duration) -> Outcome {
    let mut out = Outcome::new();
    let sigma2 = 0.25;
    for p in dd.sweep_values().into_iter().filter(|&p| p >= 100.0) {
        let reps = dd.replicates(p, Setting::InSample, Metric::Err);
        let m = mean(&reps);
        out.check(
            (m - 2.0 * sigma2).abs() <= 0.05,
            format!("p={p}: mean ERR_is {m:.6} within 0.5 ± 0.05"),
        );
        let worst = reps.iter().map(|e| (e - 2.0 * sigma2).abs()).fold(0.0, f64::max);
        out.check(
            worst <= 1e-10,
            format!("p={p}: per-replication |ERR_is − 0.5| ≤ {worst:.2e}"),
        );
    }
    out.check(
        elapsed < Duration::from_secs(60),
        format!("runtime {:.1} s < 60 s", elapsed.as_secs_f64()),
    );
    out
}

fn knn_variance_law() -> Outcome {
    let mut out = Outcome::new();
    let base = DgpSpec::new(Truth::Friedman, InputLaw::UniformCube { d: 5 }, NoiseModel::noiseless()).unwrap();
    let mut rng = make_rng(SeedSpec::new(2, 0));
    let x = base.sample_inputs(100, &mut rng).unwrap();
    let xe = base.sample_inputs(100, &mut rng).unwrap();
    let data = Dataset::new(x.clone(), vec![0.0; 100], xe.clone()).unwrap();
    for (i, sigma) in [0.5, 5.0].into_iter().enumerate() {
        let noise = NoiseModel::new(sigma).unwrap();
        let dgp = base.with_noise(noise);
        for (j, k) in [1usize, 2, 5, 10, 50, 100].into_iter().enumerate() {
            let start = Instant::now();
            let target = sigma * sigma / k as f64;
            let worst = xe
                .rows()
                .map(|x0| {
                    let w = knn_weights(&x, x0, k).unwrap();
                    (variance_at(&w, &noise) - target).abs() / target
                })
                .fold(0.0, f64::max);
            out.check(
                worst <= 1e-12,
                format!("k={k} σ={sigma}: variance_at relative error {worst:.1e}"),
            );
            let analytic = expected_error(&data, SmootherSpec::Knn { k }, &dgp, Setting::OutOfSample).unwrap();
            let formula = analytic.mean_squared_bias + target + sigma * sigma;
            out.check(
                (analytic.expected_error - formula).abs() <= 1e-12 * formula,
                format!("k={k} σ={sigma}: ERR = bias² + σ²/k + σ² = {formula:.6}"),
            );
            let mut mc_rng = make_rng(SeedSpec::new(3, (i * 10 + j) as u64));
            let mc = mc_error_estimate(
                &data,
                SmootherSpec::Knn { k },
                &dgp,
                Setting::OutOfSample,
                10_000,
                &mut mc_rng,
            )
            .unwrap();
            let z = mc.z_score(formula);
            out.check(
                z <= 3.0,
                format!("k={k} σ={sigma}: MC {:.6} ± {:.6} (z = {z:.2})", mc.mean, mc.stderr),
            );
            let secs = start.elapsed().as_secs_f64();
            out.check(secs < 30.0, format!("k={k} σ={sigma}: {secs:.2} s < 30 s"));
        }
    }
    out
}

fn random_truth(rng: &mut SimRng) -> (Truth, InputLaw) {
    let pick = (rng.uniform() * 3.0) as usize;
    let d = 1 + (rng.uniform() * 12.0) as usize;
    let rho = 0.9 * rng.uniform();
    let s = 1 + (rng.uniform() * d as f64) as usize;
    match pick {
        0 => (Truth::Friedman, InputLaw::UniformCube { d: d.max(5) }),
        1 => (Truth::LinearSum { s }, InputLaw::GaussianAr { d, rho }),
        _ => (Truth::ScaledSparseLinear { s }, InputLaw::GaussianAr { d, rho }),
    }
}

fn decomposition_identity() -> Outcome {
    let mut out = Outcome::new();
    let mut rng = make_rng(SeedSpec::new(4, 0));
    let (mut worst_identity, mut worst_linear_avg, mut linear_cases) = (0.0f64, 0.0f64, 0);
    for _ in 0..1000 {
        let (truth, law) = random_truth(&mut rng);
        let dgp = DgpSpec::new(truth, law, NoiseModel::noiseless()).unwrap();
        let n = 2 + (rng.uniform() * 40.0) as usize;
        let x = dgp.sample_inputs(n, &mut rng).unwrap();
        let x0 = dgp.sample_inputs(1, &mut rng).unwrap();
        let spec = if rng.uniform() < 0.5 {
            SmootherSpec::Knn {
                k: 1 + (rng.uniform() * n as f64) as usize,
            }
        } else {
            SmootherSpec::LeastSquares {
                p: 1 + (rng.uniform() * dgp.dim() as f64) as usize,
            }
        };
        let w = Smoother::fit(&x, spec).unwrap().weights_at(x0.row(0)).unwrap();
        let r = bias_decompose(&w, &truth, &x).unwrap();
        worst_identity = worst_identity.max((r.neighbor_matching_bias + r.averaging_bias - r.total_bias).abs());
        if truth.is_linear() {
            linear_cases += 1;
            worst_linear_avg = worst_linear_avg.max(r.averaging_bias.abs());
        }
    }
    out.check(
        worst_identity <= 1e-10,
        format!("max |NM + Avg − bias| = {worst_identity:.2e} over 1000 configurations"),
    );
    out.check(
        worst_linear_avg <= 1e-10,
        format!("max |Avg| = {worst_linear_avg:.2e} over {linear_cases} linear-truth configurations"),
    );
    out
}

fn knn_bias_shape(table: &ExperimentTable, elapsed: Duration) -> Outcome {
    let mut out = Outcome::new();
    let ks = [1.0, 2.0, 3.0, 5.0, 10.0];
    for pair in ks.windows(2) {
        let a = table.replicates(pair[0], Setting::InSample, Metric::BiasSq);
        let b = table.replicates(pair[1], Setting::InSample, Metric::BiasSq);
        let (gap, se) = paired_gap(&a, &b);
        out.check(
            gap >= -se,
            format!(
                "in-sample bias² k={} → {}: change {gap:.4} ± {se:.4} (≥ −1 stderr)",
                pair[0], pair[1]
            ),
        );
    }
    let k1 = table.replicates(1.0, Setting::OutOfSample, Metric::BiasSq);
    let best = (2..=20)
        .map(|k| {
            (
                k as f64,
                mean(&table.replicates(k as f64, Setting::OutOfSample, Metric::BiasSq)),
            )
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let (gap, se) = paired_gap(&table.replicates(best.0, Setting::OutOfSample, Metric::BiasSq), &k1);
    out.check(
        gap >= 2.0 * se,
        format!(
            "out-of-sample bias²: k=1 {:.4}, minimum {:.4} at k={}; gap {gap:.4} = {:.1} stderr",
            mean(&k1),
            best.1,
            best.0,
            gap / se
        ),
    );
    out.check(
        elapsed < Duration::from_secs(120),
        format!("runtime {:.1} s < 120 s", elapsed.as_secs_f64()),
    );
    out
}

fn noiseless_contrast(table: &ExperimentTable) -> Outcome {
    let mut out = Outcome::new();
    let k1 = table.replicates(1.0, Setting::InSample, Metric::Err);
    out.check(
        k1.iter().all(|&e| e == 0.0),
        format!(
            "in-sample err at k=1: max {:.1e}",
            k1.iter().fold(0.0f64, |a, &b| a.max(b.abs()))
        ),
    );
    let ks = table.sweep_values();
    let curve: Vec<f64> = ks
        .iter()
        .map(|&k| mean(&table.replicates(k, Setting::InSample, Metric::Err)))
        .collect();
    let drops: Vec<f64> = ks
        .windows(2)
        .zip(curve.windows(2))
        .filter(|(_, c)| c[1] < c[0])
        .map(|(k, _)| k[1])
        .collect();
    out.check(
        drops.is_empty(),
        format!(
            "in-sample mean err nondecreasing over k=1..{}; decreases at {drops:?}",
            ks.len()
        ),
    );
    let oos: Vec<f64> = ks
        .iter()
        .map(|&k| mean(&table.replicates(k, Setting::OutOfSample, Metric::Err)))
        .collect();
    let (arg, min) = oos
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, v)| (ks[i], *v))
        .unwrap();
    let (gap, se) = paired_gap(
        &table.replicates(arg, Setting::OutOfSample, Metric::Err),
        &table.replicates(1.0, Setting::OutOfSample, Metric::Err),
    );
    out.check(
        arg > 1.0 && arg < *ks.last().unwrap() && gap >= 2.0 * se,
        format!(
            "out-of-sample err minimum {min:.4} at k*={arg} vs {:.4} at k=1; gap = {:.1} stderr",
            oos[0],
            gap / se
        ),
    );
    out
}

fn double_descent_shape(dd: &ExperimentTable, n: f64, s: f64) -> Outcome {
    let mut out = Outcome::new();
    let oos = |p: f64| dd.replicates(p, Setting::OutOfSample, Metric::Err);
    let peak = oos(n);
    for (label, p) in [("p=2n", 2.0 * n), ("p=s", s)] {
        let (gap, se) = paired_gap(&oos(p), &peak);
        out.check(
            gap >= 2.0 * se,
            format!(
                "out-of-sample err p=n {:.4} vs {label} {:.4}: gap {gap:.4} ± {se:.4} = {:.2} stderr",
                mean(&peak),
                mean(&oos(p)),
                gap / se
            ),
        );
    }
    let worst_train = dd
        .sweep_values()
        .into_iter()
        .filter(|&p| p >= n)
        .flat_map(|p| dd.replicates(p, Setting::InSample, Metric::TrainErr))
        .fold(0.0f64, |a, b| a.max(b.abs()));
    out.check(
        worst_train <= 1e-10,
        format!("train_err for p ≥ n: max {worst_train:.2e}"),
    );
    let is_at_s = dd.replicates(s, Setting::InSample, Metric::Err);
    for p in [2.0, 98.0] {
        let other = dd.replicates(p, Setting::InSample, Metric::Err);
        let (gap, se) = paired_gap(&is_at_s, &other);
        out.check(
            gap > 0.0 && gap >= 2.0 * se,
            format!(
                "in-sample err p=s {:.4} below p={p} {:.4}: gap {gap:.4} ± {se:.1e}",
                mean(&is_at_s),
                mean(&other)
            ),
        );
    }
    out
}

fn fixed_design_interpolation() -> Outcome {
    let mut out = Outcome::new();
    let mut rng = make_rng(SeedSpec::new(7, 0));
    let (mut knn_bias, mut knn_var, mut ls_bias, mut ls_var) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut all_interpolate = true;
    for i in 0..20 {
        let n = 5 + (rng.uniform() * 40.0) as usize;
        let sigma = 0.5 + 4.5 * rng.uniform();
        let noise = NoiseModel::new(sigma).unwrap();

        let knn = DgpSpec::new(Truth::Friedman, InputLaw::UniformCube { d: 5 }, noise).unwrap();
        let x = knn.sample_inputs(n, &mut rng).unwrap();
        let data = Dataset::new(x.clone(), vec![0.0; n], x.clone()).unwrap();
        let spec = SmootherSpec::Knn { k: 1 };
        all_interpolate &= interpolation_check(&x, spec).unwrap();
        let e = expected_error(&data, spec, &knn, Setting::InSample).unwrap();
        knn_bias = knn_bias.max(e.mean_squared_bias);
        knn_var = knn_var.max((e.mean_variance - sigma * sigma).abs());

        let p = n + (rng.uniform() * 2.0 * n as f64) as usize;
        let ls = DgpSpec::new(
            Truth::LinearSum { s: p.min(10) },
            InputLaw::GaussianAr { d: p, rho: 0.3 },
            noise,
        )
        .unwrap();
        let x = ls.sample_inputs(n, &mut rng).unwrap();
        let data = Dataset::new(x.clone(), vec![0.0; n], x.clone()).unwrap();
        let spec = SmootherSpec::LeastSquares { p };
        let interpolates = interpolation_check(&x, spec).unwrap();
        all_interpolate &= interpolates;
        let e = expected_error(&data, spec, &ls, Setting::InSample).unwrap();
        ls_bias = ls_bias.max(e.mean_squared_bias);
        ls_var = ls_var.max((e.mean_variance / (sigma * sigma) - 1.0).abs());
        if !interpolates {
            out.check(
                false,
                format!("design {i}: least squares p={p} n={n} does not interpolate"),
            );
        }
    }
    out.check(all_interpolate, "interpolation_check true on all 40 fits".into());
    out.check(
        knn_bias == 0.0 && knn_var == 0.0,
        format!("KNN(1): max bias² {knn_bias:e}, max |var − σ²| {knn_var:e}"),
    );
    // Least-squares weights come from an SVD, so "exactly" means to rounding.
    out.check(
        ls_bias <= 1e-20 && ls_var <= 1e-10,
        format!("LeastSquares(p ≥ n): max bias² {ls_bias:.1e}, max |var/σ² − 1| {ls_var:.1e}"),
    );
    out
}

fn oracle_suite() -> Outcome {
    let mut out = Outcome::new();
    let cfg = ValidationConfig::default();
    let (first, elapsed) = timed(|| run_validation(&cfg).unwrap());
    let second = run_validation(&cfg).unwrap();
    let failed: Vec<String> = first.iter().filter(|c| !c.passed).map(|c| c.spec.label()).collect();
    out.check(first.len() >= 20, format!("{} configurations", first.len()));
    let mut coverage = BTreeMap::new();
    for c in &first {
        let truth = match c.spec.dgp.truth() {
            Truth::Friedman => "friedman",
            Truth::LinearSum { .. } => "linear_sum",
            Truth::ScaledSparseLinear { .. } => "scaled_sparse",
        };
        let smoother = match c.spec.smoother {
            SmootherSpec::Knn { .. } => "knn",
            SmootherSpec::LeastSquares { .. } => "least_squares",
        };
        *coverage.entry((truth, smoother, c.spec.setting.as_str())).or_insert(0) += 1;
    }
    out.check(
        coverage.len() == 12,
        format!(
            "{} of 12 (truth, smoother, setting) combinations covered",
            coverage.len()
        ),
    );
    out.check(
        failed.is_empty(),
        format!("all within 3 stderr at 10⁴ reps; failures: {failed:?}"),
    );
    out.check(first == second, "identical results on a second run".into());
    out.check(
        elapsed < Duration::from_secs(300),
        format!("runtime {:.1} s < 300 s", elapsed.as_secs_f64()),
    );
    out
}

fn run_cli(args: &[&str], out: &Path, threads: &str) -> bool {
    Command::new(env!("CARGO_BIN_EXE_designlab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("DESIGNLAB_THREADS", threads)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn directory_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

fn determinism() -> Outcome {
    let mut out = Outcome::new();
    let runs: [&[&str]; 5] = [
        &["knn-sweep", "--n", "40", "--k-max", "20", "--reps", "12"],
        &["noise-sweep", "--n", "30", "--k-max", "10", "--reps", "8"],
        &[
            "double-descent",
            "--n",
            "20",
            "--p-grid",
            "2,10,19,20,21,40",
            "--s",
            "10",
            "--reps",
            "12",
        ],
        &[
            "bias-decomp",
            "--dgp",
            "linear",
            "--n",
            "30",
            "--k-max",
            "10",
            "--reps",
            "8",
        ],
        &[
            "bias-decomp",
            "--n",
            "30",
            "--k-max",
            "10",
            "--reps",
            "8",
            "--aggregate-only",
        ],
    ];
    for args in runs {
        let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
        let ok = run_cli(args, dirs[0].path(), "1")
            && run_cli(args, dirs[1].path(), "4")
            && run_cli(args, dirs[2].path(), "1");
        let files: Vec<_> = dirs.iter().map(|d| directory_bytes(d.path())).collect();
        let has_both = files[0].keys().any(|f| f.ends_with(".csv")) && files[0].keys().any(|f| f.ends_with(".svg"));
        out.check(
            ok && has_both && files[0] == files[1] && files[0] == files[2],
            format!(
                "{}: {} files byte-identical across DESIGNLAB_THREADS=1,4 and a rerun",
                args[0],
                files[0].len()
            ),
        );
    }
    out
}

fn main() -> ExitCode {
    let mut results: Vec<(&str, Outcome)> = Vec::new();

    let dd_cfg = double_descent_config();
    let (dd, dd_time) = timed(|| run_double_descent(&dd_cfg).unwrap());
    let knn_cfg = ExperimentConfig::knn_sweep();
    let (knn, knn_time) = timed(|| run_knn_sweep(&knn_cfg).unwrap());
    let quiet_cfg = ExperimentConfig {
        sigmas: vec![0.0],
        ..ExperimentConfig::knn_sweep()
    };
    let quiet = run_knn_sweep(&quiet_cfg).unwrap();
    // Aggregation is exercised here so a broken aggregate also shows up.
    let agg = aggregate(&dd, Statistic::Mean).unwrap();
    assert_eq!(agg.replications(), vec![0]);

    results.push((
        "1 interpolator in-sample error is 2σ²",
        interpolator_in_sample_error(&dd, dd_time),
    ));
    results.push(("2 k-NN variance law", knn_variance_law()));
    results.push(("3 bias decomposition identity", decomposition_identity()));
    results.push(("4 non-monotone out-of-sample bias", knn_bias_shape(&knn, knn_time)));
    results.push(("5 noiseless in/out-of-sample contrast", noiseless_contrast(&quiet)));
    results.push((
        "6 double-descent shape",
        double_descent_shape(&dd, dd_cfg.n as f64, dd_cfg.s as f64),
    ));
    results.push(("7 fixed-design interpolation", fixed_design_interpolation()));
    results.push(("8 oracle suite", oracle_suite()));
    results.push(("9 determinism", determinism()));

    let mut failures = 0;
    for (name, outcome) in &results {
        println!("{} criterion {name}", if outcome.passed { "PASS" } else { "FAIL" });
        for line in &outcome.details {
            println!("      {line}");
        }
        failures += usize::from(!outcome.passed);
    }
    println!("acceptance: {} passed, {failures} failed", results.len() - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
