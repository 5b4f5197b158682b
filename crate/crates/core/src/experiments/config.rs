use crate::data::NoiseModel;
use crate::dgp::{DgpSpec, InputLaw, Truth};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    KnnSweep,
    NoiseSweep,
    DoubleDescent,
    BiasDecomp,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::KnnSweep => "knn_sweep",
            ExperimentKind::NoiseSweep => "noise_sweep",
            ExperimentKind::DoubleDescent => "double_descent",
            ExperimentKind::BiasDecomp => "bias_decomp",
        }
    }
}

/// Ground truth for the bias-decomposition experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecompDgp {
    /// Friedman truth on `Unif[0,1)^5`.
    Nonlinear,
    /// `x₁ + … + x_s` with AR-correlated Gaussian features.
    Linear,
}

impl DecompDgp {
    pub fn as_str(&self) -> &'static str {
        match self {
            DecompDgp::Nonlinear => "nonlinear",
            DecompDgp::Linear => "linear",
        }
    }
}

/// Noise levels swept by default in the noise experiment.
pub const DEFAULT_NOISE_GRID: [f64; 5] = [0.0, 1.0, 2.5, 5.0, 10.0];

/// Feature counts swept by default in the double-descent experiment (n = 100).
pub const DEFAULT_P_GRID: [usize; 17] = [2, 5, 10, 20, 40, 60, 80, 90, 95, 98, 100, 102, 105, 110, 125, 150, 200];

pub const DEFAULT_REPLICATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub n: usize,
    pub n_test: usize,
    /// Input dimension. Ignored by the double-descent run, whose dimension is
    /// the largest entry of `p_range`.
    pub d: usize,
    /// One entry for every experiment except the noise sweep.
    pub sigmas: Vec<f64>,
    pub k_range: Vec<usize>,
    pub p_range: Vec<usize>,
    pub s: usize,
    /// Feature correlation of the Gaussian input law.
    pub rho: f64,
    pub decomp_dgp: DecompDgp,
    pub replications: usize,
    pub base_seed: u64,
    /// Worker cap; `None` uses all available parallelism. Never affects the
    /// output.
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn knn_sweep() -> Self {
        ExperimentConfig {
            experiment: ExperimentKind::KnnSweep,
            n: 100,
            n_test: 100,
            d: 5,
            sigmas: vec![5.0],
            k_range: (1..=100).collect(),
            p_range: Vec::new(),
            s: 5,
            rho: 0.0,
            decomp_dgp: DecompDgp::Nonlinear,
            replications: DEFAULT_REPLICATIONS,
            base_seed: 1,
            threads: None,
        }
    }

    pub fn noise_sweep() -> Self {
        ExperimentConfig {
            experiment: ExperimentKind::NoiseSweep,
            sigmas: DEFAULT_NOISE_GRID.to_vec(),
            ..Self::knn_sweep()
        }
    }

    pub fn double_descent() -> Self {
        ExperimentConfig {
            experiment: ExperimentKind::DoubleDescent,
            n: 100,
            n_test: 100,
            d: 200,
            sigmas: vec![0.5],
            k_range: Vec::new(),
            p_range: DEFAULT_P_GRID.to_vec(),
            s: 50,
            rho: 0.0,
            ..Self::knn_sweep()
        }
    }

    pub fn bias_decomp(dgp: DecompDgp) -> Self {
        let base = ExperimentConfig {
            experiment: ExperimentKind::BiasDecomp,
            decomp_dgp: dgp,
            ..Self::knn_sweep()
        };
        match dgp {
            DecompDgp::Nonlinear => base,
            DecompDgp::Linear => ExperimentConfig {
                d: 10,
                s: 5,
                rho: 0.35,
                ..base
            },
        }
    }

    pub fn defaults(kind: ExperimentKind) -> Self {
        match kind {
            ExperimentKind::KnnSweep => Self::knn_sweep(),
            ExperimentKind::NoiseSweep => Self::noise_sweep(),
            ExperimentKind::DoubleDescent => Self::double_descent(),
            ExperimentKind::BiasDecomp => Self::bias_decomp(DecompDgp::Nonlinear),
        }
    }

    /// Effective input dimension.
    pub fn input_dim(&self) -> usize {
        match self.experiment {
            ExperimentKind::DoubleDescent => self.p_range.iter().copied().max().unwrap_or(0),
            _ => self.d,
        }
    }

    /// The DGP at noise level `sigma`.
    pub fn dgp(&self, sigma: f64) -> Result<DgpSpec> {
        let noise = NoiseModel::new(sigma)?;
        let d = self.input_dim();
        let (truth, law) = match (self.experiment, self.decomp_dgp) {
            (ExperimentKind::DoubleDescent, _) => (
                Truth::ScaledSparseLinear { s: self.s },
                InputLaw::GaussianAr { d, rho: self.rho },
            ),
            (ExperimentKind::BiasDecomp, DecompDgp::Linear) => (
                Truth::LinearSum { s: self.s },
                InputLaw::GaussianAr { d, rho: self.rho },
            ),
            _ => (Truth::Friedman, InputLaw::UniformCube { d }),
        };
        DgpSpec::new(truth, law, noise)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::param("replications", "must be at least 1"));
        }
        if self.replications > u32::MAX as usize {
            return Err(Error::param("replications", "too many"));
        }
        if self.n == 0 {
            return Err(Error::param("n", "must be at least 1"));
        }
        if self.n_test == 0 {
            return Err(Error::param("n_test", "must be at least 1"));
        }
        if self.sigmas.is_empty() {
            return Err(Error::param("sigma", "at least one noise level is required"));
        }
        for &s in &self.sigmas {
            NoiseModel::new(s)?;
        }
        match self.experiment {
            ExperimentKind::NoiseSweep => {
                if !self.sigmas.contains(&0.0) {
                    return Err(Error::param("sigma", "the noise sweep must include sigma = 0"));
                }
                let mut sorted = self.sigmas.clone();
                sorted.sort_by(f64::total_cmp);
                sorted.dedup();
                if sorted.len() != self.sigmas.len() {
                    return Err(Error::param("sigma", "noise levels must be distinct"));
                }
            }
            _ if self.sigmas.len() != 1 => {
                return Err(Error::param("sigma", "exactly one noise level expected"));
            }
            _ => {}
        }
        match self.experiment {
            ExperimentKind::DoubleDescent => {
                check_range("p_range", &self.p_range, 1, usize::MAX)?;
                if self.s == 0 || self.s > self.input_dim() {
                    return Err(Error::param(
                        "s",
                        format!("need 1 <= s <= max p = {}, got {}", self.input_dim(), self.s),
                    ));
                }
            }
            _ => check_range("k_range", &self.k_range, 1, self.n)?,
        }
        // catches d, s and rho problems
        self.dgp(self.sigmas[0])?;
        Ok(())
    }

    /// `key = value` echo of everything that determines the output.
    pub fn metadata(&self) -> Vec<(String, String)> {
        let mut meta = vec![
            ("experiment".to_string(), self.experiment.as_str().to_string()),
            ("code_version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
            ("base_seed".to_string(), self.base_seed.to_string()),
            ("replications".to_string(), self.replications.to_string()),
            ("n".to_string(), self.n.to_string()),
            ("n_test".to_string(), self.n_test.to_string()),
            ("d".to_string(), self.input_dim().to_string()),
        ];
        match self.experiment {
            ExperimentKind::DoubleDescent => {
                meta.push(("sweep".into(), "p".into()));
                meta.push(("p_range".into(), join(&self.p_range)));
                meta.push(("smoother".into(), "least_squares (minimum norm, no intercept)".into()));
                meta.push(("intercept".into(), "false".into()));
            }
            _ => {
                meta.push(("sweep".into(), "k".into()));
                meta.push(("k_range".into(), join(&self.k_range)));
                meta.push(("smoother".into(), "knn (euclidean, ties to lower row index)".into()));
            }
        }
        if let Ok(dgp) = self.dgp(self.sigmas[0]) {
            meta.push(("truth".into(), describe_truth(&dgp.truth())));
            meta.push(("input_law".into(), describe_law(&dgp.input_law())));
        }
        if self.experiment == ExperimentKind::DoubleDescent {
            meta.push((
                "assumption".into(),
                "independent standard normal features; no intercept".into(),
            ));
        }
        meta.push(("sigma".into(), join(&self.sigmas)));
        meta
    }
}

fn check_range(name: &'static str, values: &[usize], lo: usize, hi: usize) -> Result<()> {
    if values.is_empty() {
        return Err(Error::param(name, "must not be empty"));
    }
    if let Some(bad) = values.iter().find(|&&v| v < lo || v > hi) {
        return Err(Error::param(name, format!("value {bad} outside [{lo}, {hi}]")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != values.len() {
        return Err(Error::param(name, "values must be distinct"));
    }
    Ok(())
}

fn join<T: ToString>(values: &[T]) -> String {
    values.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

fn describe_truth(t: &Truth) -> String {
    match t {
        Truth::Friedman => "friedman".into(),
        Truth::LinearSum { s } => format!("linear_sum(s={s})"),
        Truth::ScaledSparseLinear { s } => format!("scaled_sparse_linear(s={s})"),
    }
}

fn describe_law(l: &InputLaw) -> String {
    match l {
        InputLaw::UniformCube { d } => format!("uniform_cube(d={d})"),
        InputLaw::GaussianAr { d, rho } => format!("gaussian_ar(d={d}, rho={rho})"),
    }
}
