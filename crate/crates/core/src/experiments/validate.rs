//! Analytic-versus-Monte-Carlo oracle suite.
//!
//! Case `i` is generated from the stream `SeedSpec { base_seed, i }`: the
//! configuration draws come first, then the design, then the Monte Carlo
//! replications. Cases cycle through every combination of truth (Friedman,
//! linear sum, scaled sparse linear), smoother (k-NN, least squares) and
//! setting, so any 12 consecutive cases cover all of them.

use super::run_replications;
use crate::analysis::{expected_error, mc_error_estimate, McEstimate, Setting};
use crate::data::{Dataset, NoiseModel};
use crate::dgp::{sample_outcomes, DgpSpec, InputLaw, Truth};
use crate::error::{Error, Result};
use crate::rng::{make_rng, SeedSpec, SimRng};
use crate::smoothers::SmootherSpec;

const NOISE_LEVELS: [f64; 5] = [0.0, 0.5, 1.0, 2.0, 5.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationConfig {
    pub base_seed: u64,
    pub cases: usize,
    pub mc_reps: usize,
    /// Largest accepted |analytic − MC| in Monte Carlo standard errors.
    pub max_z: f64,
    pub threads: Option<usize>,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig {
            base_seed: 1,
            cases: 24,
            mc_reps: 10_000,
            max_z: 3.0,
            threads: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseSpec {
    pub index: usize,
    pub dgp: DgpSpec,
    pub smoother: SmootherSpec,
    pub setting: Setting,
    pub n: usize,
    pub m: usize,
}

impl CaseSpec {
    pub fn label(&self) -> String {
        let truth = match self.dgp.truth() {
            Truth::Friedman => "friedman".to_string(),
            Truth::LinearSum { s } => format!("linear_sum(s={s})"),
            Truth::ScaledSparseLinear { s } => format!("scaled_sparse(s={s})"),
        };
        format!(
            "#{:02} {truth} d={} n={} m={} sigma={} {} {}",
            self.index,
            self.dgp.dim(),
            self.n,
            self.m,
            self.dgp.noise().sigma(),
            self.smoother,
            self.setting.as_str()
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationCase {
    pub spec: CaseSpec,
    pub analytic: f64,
    pub mc: McEstimate,
    pub z: f64,
    pub passed: bool,
}

fn uniform_int(rng: &mut SimRng, lo: usize, hi: usize) -> usize {
    lo + ((hi - lo + 1) as f64 * rng.uniform()) as usize
}

fn draw_case(index: usize, rng: &mut SimRng) -> Result<CaseSpec> {
    let sigma = NOISE_LEVELS[uniform_int(rng, 0, NOISE_LEVELS.len() - 1)];
    let noise = NoiseModel::new(sigma)?;
    let (truth, law) = match index % 3 {
        0 => (Truth::Friedman, InputLaw::UniformCube { d: 5 }),
        1 => (Truth::LinearSum { s: 5 }, InputLaw::GaussianAr { d: 10, rho: 0.35 }),
        _ => (
            Truth::ScaledSparseLinear { s: 10 },
            InputLaw::GaussianAr { d: 40, rho: 0.0 },
        ),
    };
    let dgp = DgpSpec::new(truth, law, noise)?;
    let n = uniform_int(rng, 10, 40);
    let m = uniform_int(rng, 5, 20);
    let smoother = if (index / 3).is_multiple_of(2) {
        SmootherSpec::Knn {
            k: uniform_int(rng, 1, n),
        }
    } else {
        SmootherSpec::LeastSquares {
            p: uniform_int(rng, 1, dgp.dim()),
        }
    };
    let setting = if (index / 6).is_multiple_of(2) {
        Setting::InSample
    } else {
        Setting::OutOfSample
    };
    Ok(CaseSpec {
        index,
        dgp,
        smoother,
        setting,
        n,
        m,
    })
}

/// The case specifications the suite will run, without running them.
pub fn validation_cases(cfg: &ValidationConfig) -> Result<Vec<CaseSpec>> {
    (0..cfg.cases)
        .map(|i| draw_case(i, &mut make_rng(SeedSpec::new(cfg.base_seed, i as u64))))
        .collect()
}

fn run_case(cfg: &ValidationConfig, index: usize) -> Result<ValidationCase> {
    let mut rng = make_rng(SeedSpec::new(cfg.base_seed, index as u64));
    let spec = draw_case(index, &mut rng)?;
    let x_train = spec.dgp.sample_inputs(spec.n, &mut rng)?;
    let y_train = sample_outcomes(&spec.dgp, &x_train, &mut rng)?;
    let x_eval = spec.dgp.sample_inputs(spec.m, &mut rng)?;
    let data = Dataset::new(x_train, y_train, x_eval)?;
    let analytic = expected_error(&data, spec.smoother, &spec.dgp, spec.setting)?.expected_error;
    let mc = mc_error_estimate(&data, spec.smoother, &spec.dgp, spec.setting, cfg.mc_reps, &mut rng)?;
    let z = mc.z_score(analytic);
    Ok(ValidationCase {
        spec,
        analytic,
        mc,
        z,
        passed: z <= cfg.max_z,
    })
}

/// Runs every case and reports each one; the caller decides what a failing
/// case means.
pub fn run_validation(cfg: &ValidationConfig) -> Result<Vec<ValidationCase>> {
    if cfg.cases == 0 {
        return Err(Error::param("cases", "must be at least 1"));
    }
    run_replications(cfg.cases, cfg.threads, |i| run_case(cfg, i as usize))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cases_cover_every_combination() {
        let cases = validation_cases(&ValidationConfig::default()).unwrap();
        let mut seen = std::collections::HashSet::new();
        for c in &cases {
            let truth = std::mem::discriminant(&c.dgp.truth());
            let smoother = matches!(c.smoother, SmootherSpec::Knn { .. });
            seen.insert((truth, smoother, c.setting));
        }
        assert_eq!(seen.len(), 12);
    }

    #[test]
    fn small_suite_agrees() {
        let cfg = ValidationConfig {
            cases: 6,
            mc_reps: 2_000,
            ..ValidationConfig::default()
        };
        let results = run_validation(&cfg).unwrap();
        assert_eq!(results.len(), 6);
        for r in &results {
            assert!(r.passed, "{} analytic {} mc {:?}", r.spec.label(), r.analytic, r.mc);
        }
    }
}
