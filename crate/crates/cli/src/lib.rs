//! Command-line front end: flag parsing, experiment dispatch, CSV and SVG
//! output.
//!
//! ```text
//! designlab knn-sweep      [flags]   -> knn_sweep.csv, knn_sweep.svg
//! designlab noise-sweep    [flags]   -> noise_sweep_sigma_<σ>.csv (one per σ), noise_sweep.svg
//! designlab double-descent [flags]   -> double_descent.csv, double_descent.svg
//! designlab bias-decomp    [flags]   -> bias_decomp_<dgp>.csv, bias_decomp_<dgp>.svg
//! designlab validate       [flags]   -> pass/fail per oracle configuration on stdout
//! ```
//!
//! Exit codes: 0 success, 1 runtime failure, 2 invalid configuration.
//! `DESIGNLAB_THREADS` caps the worker count; it never changes the output.

pub mod csv;
pub mod error;
pub mod svg;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use designlab::experiments::{
    aggregate, run_bias_decomp, run_double_descent, run_knn_sweep, run_noise_sweep, run_validation, DecompDgp,
    ExperimentConfig, ExperimentKind, ExperimentTable, Metric, Statistic, ValidationConfig,
};
use designlab::Setting;

pub use crate::error::CliError;
use crate::svg::{render_panels, render_svg, ChartSpec, Panel, Scale, Series};

pub const THREADS_ENV: &str = "DESIGNLAB_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "designlab",
    version,
    about = "Bias, variance and prediction error of linear smoothers in fixed and random designs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// k-NN on the Friedman function: error, bias² and variance by k, in- and out-of-sample
    KnnSweep(CommonArgs),
    /// The k-NN sweep repeated across noise levels (one panel per --sigma)
    NoiseSweep(CommonArgs),
    /// Least squares on a growing number of Gaussian features, minimum-norm past p = n
    DoubleDescent(CommonArgs),
    /// Neighbor-matching vs averaging bias for k-NN on a nonlinear or linear truth
    BiasDecomp(BiasDecompArgs),
    /// Check every analytic error against a Monte Carlo estimate
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Svg,
    Both,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Training set size
    #[arg(long)]
    pub n: Option<usize>,
    /// Test set size per replication
    #[arg(long = "n-test")]
    pub n_test: Option<usize>,
    /// Input dimension
    #[arg(long)]
    pub d: Option<usize>,
    /// Outcome noise standard deviation; repeat (or comma-separate) for noise-sweep
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub sigma: Vec<f64>,
    /// Largest k; the sweep covers 1..=k-max
    #[arg(long = "k-max")]
    pub k_max: Option<usize>,
    /// Comma-separated feature counts for double-descent
    #[arg(long = "p-grid", value_delimiter = ',')]
    pub p_grid: Vec<usize>,
    /// Number of relevant features
    #[arg(long)]
    pub s: Option<usize>,
    /// Design replications
    #[arg(long)]
    pub reps: Option<usize>,
    /// Base seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Both)]
    pub format: Format,
    /// Write only replication means to the CSV
    #[arg(long = "aggregate-only")]
    pub aggregate_only: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DgpChoice {
    Nonlinear,
    Linear,
}

#[derive(Debug, Clone, Args)]
pub struct BiasDecompArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Ground truth: Friedman on the unit cube, or a linear sum with correlated Gaussian features
    #[arg(long, value_enum, default_value_t = DgpChoice::Nonlinear)]
    pub dgp: DgpChoice,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Number of randomized configurations
    #[arg(long, default_value_t = 24)]
    pub cases: usize,
    /// Monte Carlo replications per configuration
    #[arg(long = "mc-reps", default_value_t = 10_000)]
    pub mc_reps: usize,
}

/// Where and how results are written.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputSpec {
    pub out_dir: PathBuf,
    pub csv: bool,
    pub svg: bool,
    pub aggregate_only: bool,
}

impl OutputSpec {
    fn from_args(a: &CommonArgs) -> Self {
        OutputSpec {
            out_dir: a.out.clone(),
            csv: matches!(a.format, Format::Csv | Format::Both),
            svg: matches!(a.format, Format::Svg | Format::Both),
            aggregate_only: a.aggregate_only,
        }
    }
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn flag_for(param: &str) -> &'static str {
    match param {
        "n" => "--n",
        "n_test" => "--n-test",
        "d" => "--d",
        "sigma" => "--sigma",
        "k" | "k_range" => "--k-max",
        "p" | "p_range" => "--p-grid",
        "s" => "--s",
        "replications" | "reps" => "--reps",
        "cases" => "--cases",
        _ => "configuration",
    }
}

fn core_config_err(e: designlab::Error) -> CliError {
    match &e {
        designlab::Error::Parameter { name, reason } => config_err(format!("{}: {reason}", flag_for(name))),
        designlab::Error::Dimension { .. } => config_err(format!("--d: {e}")),
        _ => CliError::Core(e),
    }
}

fn reject(flag: &str, set: bool, command: &str) -> Result<(), CliError> {
    if set {
        Err(config_err(format!("{flag} is not used by {command}")))
    } else {
        Ok(())
    }
}

/// Builds and validates the experiment configuration from flags.
pub fn build_config(
    kind: ExperimentKind,
    args: &CommonArgs,
    dgp: Option<DgpChoice>,
    threads: Option<usize>,
) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match kind {
        ExperimentKind::BiasDecomp => ExperimentConfig::bias_decomp(match dgp.unwrap_or(DgpChoice::Nonlinear) {
            DgpChoice::Nonlinear => DecompDgp::Nonlinear,
            DgpChoice::Linear => DecompDgp::Linear,
        }),
        other => ExperimentConfig::defaults(other),
    };
    let command = kind.as_str().replace('_', "-");
    let uses_k = kind != ExperimentKind::DoubleDescent;
    reject("--p-grid", !args.p_grid.is_empty() && uses_k, &command)?;
    reject("--k-max", args.k_max.is_some() && !uses_k, &command)?;
    reject(
        "--d",
        args.d.is_some() && kind == ExperimentKind::DoubleDescent,
        &command,
    )?;
    let uses_s = kind == ExperimentKind::DoubleDescent || dgp == Some(DgpChoice::Linear);
    reject("--s", args.s.is_some() && !uses_s, &command)?;
    if kind != ExperimentKind::NoiseSweep && args.sigma.len() > 1 {
        return Err(config_err(format!("--sigma: {command} takes a single noise level")));
    }

    if let Some(n) = args.n {
        if n == 0 {
            return Err(config_err("--n must be at least 1"));
        }
        cfg.n = n;
    }
    if let Some(m) = args.n_test {
        if m == 0 {
            return Err(config_err("--n-test must be at least 1"));
        }
        cfg.n_test = m;
    }
    if let Some(d) = args.d {
        cfg.d = d;
    }
    if !args.sigma.is_empty() {
        if let Some(bad) = args.sigma.iter().find(|s| !s.is_finite() || **s < 0.0) {
            return Err(config_err(format!("--sigma must be finite and >= 0, got {bad}")));
        }
        cfg.sigmas = args.sigma.clone();
    }
    if uses_k {
        let k_max = args.k_max.unwrap_or(cfg.n);
        if k_max == 0 {
            return Err(config_err("--k-max must be at least 1"));
        }
        if k_max > cfg.n {
            return Err(config_err(format!("--k-max ({k_max}) cannot exceed --n ({})", cfg.n)));
        }
        cfg.k_range = (1..=k_max).collect();
    }
    if !args.p_grid.is_empty() {
        if args.p_grid.contains(&0) {
            return Err(config_err("--p-grid entries must be at least 1"));
        }
        cfg.p_range = args.p_grid.clone();
    }
    if let Some(s) = args.s {
        cfg.s = s;
    }
    if let Some(r) = args.reps {
        if r == 0 {
            return Err(config_err("--reps must be at least 1"));
        }
        cfg.replications = r;
    }
    if let Some(seed) = args.seed {
        cfg.base_seed = seed;
    }
    cfg.threads = threads;
    cfg.validate().map_err(core_config_err)?;
    Ok(cfg)
}

/// Reads the worker cap from the environment.
pub fn threads_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(config_err(format!("{THREADS_ENV}: {e}"))),
        Ok(v) if v.trim().is_empty() => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(0) | Err(_) => Err(config_err(format!(
                "{THREADS_ENV} must be a positive integer, got `{v}`"
            ))),
            Ok(t) => Ok(Some(t)),
        },
    }
}

/// A file to be written once all computation has finished.
struct Output {
    path: PathBuf,
    bytes: Vec<u8>,
}

struct RunReport {
    experiment: String,
    rows: usize,
    files: Vec<PathBuf>,
    dropped: usize,
}

fn chart_for(kind: ExperimentKind, title: &str) -> ChartSpec {
    match kind {
        ExperimentKind::DoubleDescent => ChartSpec {
            title: title.into(),
            x_label: "p (number of features)".into(),
            metrics: vec![Metric::Err],
            x_scale: Scale::Linear,
            y_scale: Scale::Log,
        },
        ExperimentKind::BiasDecomp => ChartSpec {
            title: title.into(),
            x_label: "k".into(),
            metrics: vec![Metric::NmBiasSq, Metric::AvgBiasSq],
            x_scale: Scale::Linear,
            y_scale: Scale::Linear,
        },
        _ => ChartSpec {
            title: title.into(),
            x_label: "k".into(),
            metrics: vec![Metric::Err, Metric::BiasSq, Metric::Variance],
            x_scale: Scale::Linear,
            y_scale: Scale::Linear,
        },
    }
}

fn csv_output(dir: &Path, stem: &str, table: &ExperimentTable, out: &OutputSpec) -> Result<(Output, usize), CliError> {
    let table = if out.aggregate_only {
        aggregate(table, Statistic::Mean)?
    } else {
        table.clone()
    };
    Ok((
        Output {
            path: dir.join(format!("{stem}.csv")),
            bytes: csv::to_csv_string(&table).into_bytes(),
        },
        table.len(),
    ))
}

fn title_for(kind: ExperimentKind, cfg: &ExperimentConfig) -> String {
    let sigma = cfg.sigmas.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(", ");
    match kind {
        ExperimentKind::KnnSweep => format!("k-NN, Friedman truth, n = {}, sigma = {sigma}", cfg.n),
        ExperimentKind::NoiseSweep => format!("k-NN prediction error by noise level, n = {}", cfg.n),
        ExperimentKind::DoubleDescent => format!(
            "Least squares by number of features, n = {}, s = {}, sigma = {sigma}",
            cfg.n, cfg.s
        ),
        ExperimentKind::BiasDecomp => format!("Bias decomposition, {} truth, n = {}", cfg.decomp_dgp.as_str(), cfg.n),
    }
}

fn run_experiment(kind: ExperimentKind, cfg: &ExperimentConfig, out: &OutputSpec) -> Result<RunReport, CliError> {
    let dir = &out.out_dir;
    let mut outputs = Vec::new();
    let mut rows = 0;
    let mut dropped = 0;
    let title = title_for(kind, cfg);
    match kind {
        ExperimentKind::NoiseSweep => {
            let panels = run_noise_sweep(cfg)?;
            let mut svg_panels = Vec::new();
            for panel in &panels {
                let stem = format!("noise_sweep_sigma_{}", panel.sigma);
                if out.csv {
                    let (o, r) = csv_output(dir, &stem, &panel.table, out)?;
                    outputs.push(o);
                    rows += r;
                }
                let mean = aggregate(&panel.table, Statistic::Mean)?;
                svg_panels.push(Panel {
                    title: format!("sigma = {}", panel.sigma),
                    x_label: "k".into(),
                    x_scale: Scale::Linear,
                    y_scale: Scale::Linear,
                    series: Setting::ALL
                        .iter()
                        .map(|&s| Series {
                            label: s.label().into(),
                            color: svg::setting_color(s).into(),
                            points: mean.series(s, Metric::Err),
                        })
                        .collect(),
                });
            }
            if out.svg {
                let doc = render_panels(&title, &svg_panels)?;
                dropped += doc.dropped_points;
                outputs.push(Output {
                    path: dir.join("noise_sweep.svg"),
                    bytes: doc.text.into_bytes(),
                });
            }
        }
        _ => {
            let (table, stem) = match kind {
                ExperimentKind::KnnSweep => (run_knn_sweep(cfg)?, "knn_sweep".to_string()),
                ExperimentKind::DoubleDescent => (run_double_descent(cfg)?, "double_descent".to_string()),
                _ => (
                    run_bias_decomp(cfg)?,
                    format!("bias_decomp_{}", cfg.decomp_dgp.as_str()),
                ),
            };
            if out.csv {
                let (o, r) = csv_output(dir, &stem, &table, out)?;
                outputs.push(o);
                rows += r;
            }
            if out.svg {
                let mean = aggregate(&table, Statistic::Mean)?;
                let doc = render_svg(&mean, &chart_for(kind, &title))?;
                dropped += doc.dropped_points;
                outputs.push(Output {
                    path: dir.join(format!("{stem}.svg")),
                    bytes: doc.text.into_bytes(),
                });
            }
        }
    }

    std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.clone(),
        source,
    })?;
    let mut files = Vec::new();
    for o in outputs {
        csv::write_atomic(&o.path, &o.bytes)?;
        files.push(o.path);
    }
    Ok(RunReport {
        experiment: kind.as_str().into(),
        rows,
        files,
        dropped,
    })
}

fn run_validate(args: &ValidateArgs, threads: Option<usize>, stdout: &mut dyn Write) -> Result<bool, CliError> {
    if args.cases == 0 {
        return Err(config_err("--cases must be at least 1"));
    }
    if args.mc_reps < 2 {
        return Err(config_err("--mc-reps must be at least 2"));
    }
    let cfg = ValidationConfig {
        base_seed: args.seed,
        cases: args.cases,
        mc_reps: args.mc_reps,
        threads,
        ..ValidationConfig::default()
    };
    let results = run_validation(&cfg)?;
    let mut passed = 0;
    for r in &results {
        let _ = writeln!(
            stdout,
            "{} {}: analytic {:.6} mc {:.6} ± {:.6} (z = {:.2})",
            if r.passed { "PASS" } else { "FAIL" },
            r.spec.label(),
            r.analytic,
            r.mc.mean,
            r.mc.stderr,
            r.z
        );
        passed += r.passed as usize;
    }
    let _ = writeln!(
        stdout,
        "validate: {passed}/{} configurations within {} standard errors ({} Monte Carlo reps, seed {})",
        results.len(),
        cfg.max_z,
        cfg.mc_reps,
        cfg.base_seed
    );
    Ok(passed == results.len())
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp
                | ErrorKind::DisplayVersion
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    let _ = write!(stdout, "{text}");
                    if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                        2
                    } else {
                        0
                    }
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    2
                }
            };
        }
    };
    match dispatch(&cli.command, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: &Command, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let threads = threads_from_env()?;
    let (kind, args, dgp) = match command {
        Command::Validate(v) => {
            let start = Instant::now();
            let ok = run_validate(v, threads, stdout)?;
            let _ = writeln!(stdout, "validate: finished in {:.2} s", start.elapsed().as_secs_f64());
            return Ok(if ok { 0 } else { 1 });
        }
        Command::KnnSweep(a) => (ExperimentKind::KnnSweep, a, None),
        Command::NoiseSweep(a) => (ExperimentKind::NoiseSweep, a, None),
        Command::DoubleDescent(a) => (ExperimentKind::DoubleDescent, a, None),
        Command::BiasDecomp(b) => (ExperimentKind::BiasDecomp, &b.common, Some(b.dgp)),
    };
    let cfg = build_config(kind, args, dgp, threads)?;
    let out = OutputSpec::from_args(args);
    let start = Instant::now();
    let report = run_experiment(kind, &cfg, &out)?;
    let files: Vec<String> = report.files.iter().map(|p| p.display().to_string()).collect();
    let _ = writeln!(
        stdout,
        "{}: wrote {} rows to [{}] in {:.2} s (seed {}, {} replications, dropped {} non-finite points)",
        report.experiment,
        report.rows,
        files.join(", "),
        start.elapsed().as_secs_f64(),
        cfg.base_seed,
        cfg.replications,
        report.dropped
    );
    Ok(0)
}
