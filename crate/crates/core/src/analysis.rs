//! Exact bias and variance of linear smoothers, conditional on the design.
//!
//! For weights `w(x)` and truth `f*`:
//!
//! ```text
//! Bias(x) = f*(x) − Σᵢ wᵢ(x) f*(xᵢ)
//! Var(x)  = σ² ‖w(x)‖²
//! ```
//!
//! and the bias splits exactly into a neighbor-matching part and an averaging
//! part around the reconstructed input `x̄ = Σᵢ wᵢ(x) xᵢ`:
//!
//! ```text
//! NeighborMatching(x) = f*(x) − f*(x̄)
//! Averaging(x)        = f*(x̄) − Σᵢ wᵢ(x) f*(xᵢ)
//! ```
//!
//! Expected prediction error averages `Bias² + Var` over the evaluation points
//! and adds `σ²` for the independently drawn test label. The in-sample setting
//! evaluates at the training inputs (fixed design); the out-of-sample setting
//! at the held-out inputs (random design). Randomness is over outcome noise
//! only; averaging over design draws happens in [`crate::experiments`].

use crate::data::{Dataset, NoiseModel};
use crate::dgp::{DgpSpec, Truth};
use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};
use crate::rng::SimRng;
use crate::smoothers::{smoother_matrix, Smoother, SmootherSpec, WeightVector};

/// Maximum entrywise deviation of the in-sample smoother matrix from the
/// identity for a smoother to count as interpolating.
pub const INTERPOLATION_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Setting {
    InSample,
    OutOfSample,
}

impl Setting {
    pub const ALL: [Setting; 2] = [Setting::InSample, Setting::OutOfSample];

    pub fn as_str(&self) -> &'static str {
        match self {
            Setting::InSample => "in_sample",
            Setting::OutOfSample => "out_of_sample",
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Setting::InSample => "in-sample",
            Setting::OutOfSample => "out-of-sample",
        }
    }
}

impl std::str::FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "in_sample" => Ok(Setting::InSample),
            "out_of_sample" => Ok(Setting::OutOfSample),
            other => Err(Error::param("setting", format!("unknown setting `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasReport {
    pub total_bias: f64,
    pub neighbor_matching_bias: f64,
    pub averaging_bias: f64,
    pub eval_point: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorSummary {
    pub setting: Setting,
    /// `mean_squared_bias + mean_variance + noise_floor`.
    pub expected_error: f64,
    pub mean_squared_bias: f64,
    pub mean_variance: f64,
    /// σ².
    pub noise_floor: f64,
    pub mean_squared_nm_bias: f64,
    pub mean_squared_avg_bias: f64,
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub reps: usize,
}

impl McEstimate {
    /// `|mean − target|` in units of the standard error. Zero-width estimates
    /// give 0 on exact agreement and infinity otherwise.
    pub fn z_score(&self, target: f64) -> f64 {
        let diff = (self.mean - target).abs();
        if diff == 0.0 {
            0.0
        } else {
            diff / self.stderr
        }
    }
}

fn check_weights(w: &WeightVector, x_train: &Matrix) -> Result<()> {
    if w.len() != x_train.nrows() {
        return Err(Error::dim("weight vector length", x_train.nrows(), w.len()));
    }
    if w.eval_point.len() != x_train.ncols() {
        return Err(Error::dim("evaluation point", x_train.ncols(), w.eval_point.len()));
    }
    Ok(())
}

/// Decomposition with `f*` already evaluated on the training rows.
pub fn decompose_with(w: &WeightVector, truth: &Truth, x_train: &Matrix, f_train: &[f64]) -> Result<BiasReport> {
    check_weights(w, x_train)?;
    if f_train.len() != x_train.nrows() {
        return Err(Error::dim("f* on training rows", x_train.nrows(), f_train.len()));
    }
    let f_query = truth.eval(&w.eval_point)?;
    let averaged_truth = dot(&w.weights, f_train);
    let f_reconstructed = truth.eval(&w.weighted_input(x_train)?)?;
    Ok(BiasReport {
        total_bias: f_query - averaged_truth,
        neighbor_matching_bias: f_query - f_reconstructed,
        averaging_bias: f_reconstructed - averaged_truth,
        eval_point: w.eval_point.clone(),
    })
}

pub fn bias_decompose(w: &WeightVector, truth: &Truth, x_train: &Matrix) -> Result<BiasReport> {
    let f_train = truth.eval_rows(x_train)?;
    decompose_with(w, truth, x_train, &f_train)
}

pub fn bias_at(w: &WeightVector, truth: &Truth, x_train: &Matrix) -> Result<f64> {
    check_weights(w, x_train)?;
    let f_train = truth.eval_rows(x_train)?;
    Ok(truth.eval(&w.eval_point)? - dot(&w.weights, &f_train))
}

pub fn variance_at(w: &WeightVector, noise: &NoiseModel) -> f64 {
    noise.variance() * w.squared_norm()
}

/// Averages bias and variance terms over a set of weight vectors.
pub fn summarize(
    weights: &[WeightVector],
    truth: &Truth,
    noise: &NoiseModel,
    x_train: &Matrix,
    f_train: &[f64],
    setting: Setting,
) -> Result<ErrorSummary> {
    if weights.is_empty() {
        return Err(Error::EmptyGroup(format!("no {} evaluation points", setting.label())));
    }
    // Running means: a constant term (e.g. σ² for an interpolator) stays
    // exact instead of picking up rounding from sum-then-divide.
    let mut bias_sq = 0.0;
    let mut nm_sq = 0.0;
    let mut avg_sq = 0.0;
    let mut var = 0.0;
    for (i, w) in weights.iter().enumerate() {
        let report = decompose_with(w, truth, x_train, f_train)?;
        let count = (i + 1) as f64;
        bias_sq += (report.total_bias * report.total_bias - bias_sq) / count;
        nm_sq += (report.neighbor_matching_bias * report.neighbor_matching_bias - nm_sq) / count;
        avg_sq += (report.averaging_bias * report.averaging_bias - avg_sq) / count;
        var += (variance_at(w, noise) - var) / count;
    }
    let mean_squared_bias = bias_sq;
    let mean_variance = var;
    let noise_floor = noise.variance();
    Ok(ErrorSummary {
        setting,
        expected_error: mean_squared_bias + mean_variance + noise_floor,
        mean_squared_bias,
        mean_variance,
        noise_floor,
        mean_squared_nm_bias: nm_sq,
        mean_squared_avg_bias: avg_sq,
    })
}

fn eval_rows(data: &Dataset, setting: Setting) -> &Matrix {
    match setting {
        Setting::InSample => data.x_train(),
        Setting::OutOfSample => data.x_eval(),
    }
}

/// Analytic expected prediction error of `spec` fitted on `data`'s training
/// inputs, evaluated in-sample (at the training inputs) or out-of-sample (at
/// the evaluation inputs).
pub fn expected_error(data: &Dataset, spec: SmootherSpec, dgp: &DgpSpec, setting: Setting) -> Result<ErrorSummary> {
    check_design(data, dgp)?;
    let x_train = data.x_train();
    let smoother = Smoother::fit(x_train, spec)?;
    let weights = smoother.weights_at_rows(eval_rows(data, setting))?;
    let f_train = dgp.truth().eval_rows(x_train)?;
    summarize(&weights, &dgp.truth(), &dgp.noise(), x_train, &f_train, setting)
}

fn check_design(data: &Dataset, dgp: &DgpSpec) -> Result<()> {
    if data.d() != dgp.dim() {
        return Err(Error::dim("design columns vs DGP dimension", dgp.dim(), data.d()));
    }
    Ok(())
}

/// Brute-force estimate of [`expected_error`]: each replication redraws the
/// training outcomes and the test labels, refits, and scores the mean squared
/// error over the evaluation points.
pub fn mc_error_estimate(
    data: &Dataset,
    spec: SmootherSpec,
    dgp: &DgpSpec,
    setting: Setting,
    reps: usize,
    rng: &mut SimRng,
) -> Result<McEstimate> {
    if reps == 0 {
        return Err(Error::param("reps", "must be at least 1"));
    }
    check_design(data, dgp)?;
    let x_train = data.x_train();
    let x_eval = eval_rows(data, setting);
    if x_eval.nrows() == 0 {
        return Err(Error::EmptyGroup(format!("no {} evaluation points", setting.label())));
    }
    let truth = dgp.truth();
    let sigma = dgp.noise().sigma();
    let s = smoother_matrix(x_train, x_eval, spec)?;
    let f_train = truth.eval_rows(x_train)?;
    let f_eval = truth.eval_rows(x_eval)?;
    let mut y = vec![0.0; f_train.len()];
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for rep in 0..reps {
        for (yi, fi) in y.iter_mut().zip(&f_train) {
            *yi = fi + sigma * rng.normal();
        }
        // Same running mean as `summarize`, so noiseless runs agree exactly.
        let mut err = 0.0;
        for (i, (row, f0)) in s.rows().zip(&f_eval).enumerate() {
            let label = f0 + sigma * rng.normal();
            let resid = label - dot(row, &y);
            err += (resid * resid - err) / (i + 1) as f64;
        }
        // Welford; repeated identical values leave the mean exact.
        let delta = err - mean;
        mean += delta / (rep + 1) as f64;
        m2 += delta * (err - mean);
    }
    let stderr = if reps > 1 {
        (m2 / (reps - 1) as f64 / reps as f64).sqrt()
    } else {
        0.0
    };
    Ok(McEstimate { mean, stderr, reps })
}

/// True when the smoother reproduces every training outcome, i.e. its
/// in-sample smoother matrix is the identity to within
/// [`INTERPOLATION_TOLERANCE`].
pub fn interpolation_check(x_train: &Matrix, spec: SmootherSpec) -> Result<bool> {
    let s = smoother_matrix(x_train, x_train, spec)?;
    let n = x_train.nrows();
    Ok(s.max_abs_diff(&Matrix::identity(n)).unwrap_or(f64::INFINITY) <= INTERPOLATION_TOLERANCE)
}

/// Empirical residual mean square `(1/n) Σ (yᵢ − ŷ(xᵢ))²` on the realized
/// outcomes.
pub fn training_error(x_train: &Matrix, y_train: &[f64], spec: SmootherSpec) -> Result<f64> {
    if y_train.len() != x_train.nrows() {
        return Err(Error::dim("training outcomes", x_train.nrows(), y_train.len()));
    }
    let s = smoother_matrix(x_train, x_train, spec)?;
    Ok(residual_mean_square(&s, y_train))
}

pub(crate) fn residual_mean_square(s: &Matrix, y: &[f64]) -> f64 {
    let sse: f64 = s
        .rows()
        .zip(y)
        .map(|(row, yi)| {
            let r = yi - dot(row, y);
            r * r
        })
        .sum();
    sse / y.len() as f64
}
