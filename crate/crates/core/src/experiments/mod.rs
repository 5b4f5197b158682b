//! Seeded, replicated sweeps over smoother complexity.
//!
//! Replication `r` of every experiment draws its design and outcomes from the
//! stream `SeedSpec { base_seed, replication_index: r }`, in the order
//! training inputs, test inputs, training outcomes. Replications run in
//! parallel but are collected in index order and the final table is sorted,
//! so output never depends on the worker count.
//!
//! For every sweep value and both settings a run records the analytic
//! expected error, squared bias, variance, squared neighbor-matching and
//! averaging bias (all averaged over evaluation points, conditional on the
//! drawn design), the realized training error, and the excess error
//! `err − train_err`.

mod config;
mod table;
mod validate;

pub use config::{
    DecompDgp, ExperimentConfig, ExperimentKind, DEFAULT_NOISE_GRID, DEFAULT_P_GRID, DEFAULT_REPLICATIONS,
};
pub use table::{aggregate, mean, stderr, ExperimentTable, Metric, Row, Statistic};
pub use validate::{run_validation, validation_cases, CaseSpec, ValidationCase, ValidationConfig};

use rayon::prelude::*;

use crate::analysis::{summarize, Setting};
use crate::dgp::{sample_outcomes, DgpSpec};
use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};
use crate::rng::{make_rng, SeedSpec};
use crate::smoothers::{neighbor_order, Smoother, SmootherSpec, WeightVector};

/// One panel of the noise sweep: a k-NN sweep at a fixed noise level.
#[derive(Debug, Clone)]
pub struct NoisePanel {
    pub sigma: f64,
    pub table: ExperimentTable,
}

/// Runs `f` for replications `0..reps` on at most `threads` workers and
/// returns the results in replication order.
pub fn run_replications<T, F>(reps: usize, threads: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u32) -> Result<T> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Workers(e.to_string()))?;
    let reps = u32::try_from(reps).map_err(|_| Error::param("replications", "too many"))?;
    pool.install(|| (0..reps).into_par_iter().map(&f).collect())
}

/// A drawn training/test design with its outcomes.
#[derive(Debug, Clone)]
pub struct Design {
    pub x_train: Matrix,
    pub x_test: Matrix,
    pub y_train: Vec<f64>,
    pub f_train: Vec<f64>,
}

impl Design {
    pub fn draw(dgp: &DgpSpec, n: usize, n_test: usize, seed: SeedSpec) -> Result<Self> {
        let mut rng = make_rng(seed);
        let x_train = dgp.sample_inputs(n, &mut rng)?;
        let x_test = dgp.sample_inputs(n_test, &mut rng)?;
        let y_train = sample_outcomes(dgp, &x_train, &mut rng)?;
        let f_train = dgp.truth().eval_rows(&x_train)?;
        Ok(Design {
            x_train,
            x_test,
            y_train,
            f_train,
        })
    }

    /// Appends all metrics for one sweep value, given the smoother weights
    /// at the training rows and at the test rows.
    fn emit(
        &self,
        dgp: &DgpSpec,
        sweep_value: f64,
        in_sample: &[WeightVector],
        out_of_sample: &[WeightVector],
        replication: u32,
        rows: &mut Vec<Row>,
    ) -> Result<()> {
        let truth = dgp.truth();
        let noise = dgp.noise();
        let train_err = in_sample
            .iter()
            .zip(&self.y_train)
            .map(|(w, y)| {
                let r = y - dot(&w.weights, &self.y_train);
                r * r
            })
            .sum::<f64>()
            / self.y_train.len() as f64;
        for (setting, weights) in [(Setting::InSample, in_sample), (Setting::OutOfSample, out_of_sample)] {
            let s = summarize(weights, &truth, &noise, &self.x_train, &self.f_train, setting)?;
            let values = [
                (Metric::Err, s.expected_error),
                (Metric::BiasSq, s.mean_squared_bias),
                (Metric::Variance, s.mean_variance),
                (Metric::NmBiasSq, s.mean_squared_nm_bias),
                (Metric::AvgBiasSq, s.mean_squared_avg_bias),
                (Metric::TrainErr, train_err),
                (Metric::ExcessErr, s.expected_error - train_err),
            ];
            rows.extend(values.into_iter().map(|(metric, value)| Row {
                sweep_value,
                setting,
                metric,
                value,
                replication,
            }));
        }
        Ok(())
    }
}

fn orders_for(x_train: &Matrix, eval: &Matrix) -> Result<Vec<Vec<usize>>> {
    eval.rows().map(|r| neighbor_order(x_train, r)).collect()
}

fn knn_weights_for(orders: &[Vec<usize>], eval: &Matrix, k: usize) -> Result<Vec<WeightVector>> {
    orders
        .iter()
        .zip(eval.rows())
        .map(|(o, r)| WeightVector::knn_from_order(o, k, r))
        .collect()
}

fn knn_replication(cfg: &ExperimentConfig, dgp: &DgpSpec, rep: u32) -> Result<Vec<Row>> {
    let design = Design::draw(dgp, cfg.n, cfg.n_test, SeedSpec::new(cfg.base_seed, rep as u64))?;
    let orders_in = orders_for(&design.x_train, &design.x_train)?;
    let orders_out = orders_for(&design.x_train, &design.x_test)?;
    let mut rows = Vec::with_capacity(cfg.k_range.len() * 14);
    for &k in &cfg.k_range {
        let w_in = knn_weights_for(&orders_in, &design.x_train, k)?;
        let w_out = knn_weights_for(&orders_out, &design.x_test, k)?;
        design.emit(dgp, k as f64, &w_in, &w_out, rep, &mut rows)?;
    }
    Ok(rows)
}

fn least_squares_replication(cfg: &ExperimentConfig, dgp: &DgpSpec, rep: u32) -> Result<Vec<Row>> {
    let design = Design::draw(dgp, cfg.n, cfg.n_test, SeedSpec::new(cfg.base_seed, rep as u64))?;
    let mut rows = Vec::with_capacity(cfg.p_range.len() * 14);
    for &p in &cfg.p_range {
        let smoother = Smoother::fit(&design.x_train, SmootherSpec::LeastSquares { p })?;
        let w_in = smoother.weights_at_rows(&design.x_train)?;
        let w_out = smoother.weights_at_rows(&design.x_test)?;
        design.emit(dgp, p as f64, &w_in, &w_out, rep, &mut rows)?;
    }
    Ok(rows)
}

fn collect_table(metadata: Vec<(String, String)>, per_rep: Vec<Vec<Row>>) -> Result<ExperimentTable> {
    let mut table = ExperimentTable::new(metadata);
    table.rows = per_rep.into_iter().flatten().collect();
    table.sort();
    table.check_unique_keys()?;
    Ok(table)
}

fn expect_kind(cfg: &ExperimentConfig, kind: ExperimentKind) -> Result<()> {
    if cfg.experiment != kind {
        return Err(Error::param(
            "experiment",
            format!("expected {}, got {}", kind.as_str(), cfg.experiment.as_str()),
        ));
    }
    cfg.validate()
}

fn knn_table(cfg: &ExperimentConfig, sigma: f64) -> Result<ExperimentTable> {
    let dgp = cfg.dgp(sigma)?;
    let per_rep = run_replications(cfg.replications, cfg.threads, |rep| knn_replication(cfg, &dgp, rep))?;
    let mut meta = cfg.metadata();
    if cfg.sigmas.len() > 1 {
        meta.push(("panel_sigma".into(), sigma.to_string()));
    }
    collect_table(meta, per_rep)
}

/// k-NN sweep on the Friedman truth with uniform inputs.
pub fn run_knn_sweep(cfg: &ExperimentConfig) -> Result<ExperimentTable> {
    expect_kind(cfg, ExperimentKind::KnnSweep)?;
    knn_table(cfg, cfg.sigmas[0])
}

/// The k-NN sweep repeated for each noise level. Every panel uses the same
/// seeds, so designs and standard-normal noise draws are shared and the bias
/// terms agree exactly across panels.
pub fn run_noise_sweep(cfg: &ExperimentConfig) -> Result<Vec<NoisePanel>> {
    expect_kind(cfg, ExperimentKind::NoiseSweep)?;
    cfg.sigmas
        .iter()
        .map(|&sigma| {
            Ok(NoisePanel {
                sigma,
                table: knn_table(cfg, sigma)?,
            })
        })
        .collect()
}

/// Least squares on the first `p` of `max(p_range)` independent standard
/// normal features, minimum-norm once `p ≥ n`.
pub fn run_double_descent(cfg: &ExperimentConfig) -> Result<ExperimentTable> {
    expect_kind(cfg, ExperimentKind::DoubleDescent)?;
    let dgp = cfg.dgp(cfg.sigmas[0])?;
    let per_rep = run_replications(cfg.replications, cfg.threads, |rep| {
        least_squares_replication(cfg, &dgp, rep)
    })?;
    collect_table(cfg.metadata(), per_rep)
}

/// k-NN sweep on either the nonlinear or the linear truth, reporting the
/// neighbor-matching / averaging split of the bias alongside the rest.
pub fn run_bias_decomp(cfg: &ExperimentConfig) -> Result<ExperimentTable> {
    expect_kind(cfg, ExperimentKind::BiasDecomp)?;
    let mut table = knn_table(cfg, cfg.sigmas[0])?;
    table.set_meta("decomp_dgp", cfg.decomp_dgp.as_str());
    Ok(table)
}
