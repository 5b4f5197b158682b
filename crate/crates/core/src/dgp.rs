//! Ground-truth regression functions and the input/outcome samplers.
//!
//! Three truths are available:
//!
//! * `Friedman`: `10 sin(π x₁x₂) + 20 (x₃ − ½)² + 10 x₄ + x₅`, reading only
//!   the first five coordinates.
//! * `LinearSum(s)`: `x₁ + … + x_s`.
//! * `ScaledSparseLinear(s)`: `(x₁ + … + x_s) / √s`. The `1/√s` factor keeps
//!   the signal variance equal to one under independent standard normal
//!   features, whatever `s` is.
//!
//! Inputs come either from the unit cube (i.i.d. `Unif[0, 1)` entries) or from
//! a zero-mean Gaussian with AR(1)-type covariance `Σᵢⱼ = ρ^|i−j|`; `ρ = 0`
//! gives independent standard normal features.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix};

use crate::data::NoiseModel;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truth {
    Friedman,
    LinearSum { s: usize },
    ScaledSparseLinear { s: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InputLaw {
    UniformCube { d: usize },
    GaussianAr { d: usize, rho: f64 },
}

impl InputLaw {
    pub fn dim(&self) -> usize {
        match *self {
            InputLaw::UniformCube { d } | InputLaw::GaussianAr { d, .. } => d,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DgpSpec {
    truth: Truth,
    input_law: InputLaw,
    noise: NoiseModel,
}

impl DgpSpec {
    pub fn new(truth: Truth, input_law: InputLaw, noise: NoiseModel) -> Result<Self> {
        let d = input_law.dim();
        if d == 0 {
            return Err(Error::param("d", "input dimension must be at least 1"));
        }
        truth.check_dim(d)?;
        if let InputLaw::GaussianAr { rho, .. } = input_law {
            check_rho(rho)?;
        }
        Ok(DgpSpec {
            truth,
            input_law,
            noise,
        })
    }

    pub fn truth(&self) -> Truth {
        self.truth
    }

    pub fn input_law(&self) -> InputLaw {
        self.input_law
    }

    pub fn noise(&self) -> NoiseModel {
        self.noise
    }

    pub fn dim(&self) -> usize {
        self.input_law.dim()
    }

    /// Same truth and inputs with a different noise level.
    pub fn with_noise(&self, noise: NoiseModel) -> Self {
        DgpSpec { noise, ..*self }
    }

    pub fn sample_inputs(&self, n: usize, rng: &mut SimRng) -> Result<Matrix> {
        match self.input_law {
            InputLaw::UniformCube { d } => sample_uniform_inputs(n, d, rng),
            InputLaw::GaussianAr { d, rho } => sample_gaussian_ar_inputs(n, d, rho, rng),
        }
    }
}

impl Truth {
    /// Smallest input dimension this truth can be evaluated on.
    pub fn min_dim(&self) -> usize {
        match *self {
            Truth::Friedman => 5,
            Truth::LinearSum { s } | Truth::ScaledSparseLinear { s } => s.max(1),
        }
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        match *self {
            Truth::Friedman if d < 5 => Err(Error::dim("Friedman input", 5, d)),
            Truth::LinearSum { s } | Truth::ScaledSparseLinear { s } => check_sparsity(s, d),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        match *self {
            Truth::Friedman => friedman_eval(x),
            Truth::LinearSum { s } => linear_sum_eval(x, s),
            Truth::ScaledSparseLinear { s } => scaled_sparse_linear_eval(x, s),
        }
    }

    /// `f*` applied to every row.
    pub fn eval_rows(&self, x: &Matrix) -> Result<Vec<f64>> {
        self.check_dim(x.ncols())?;
        x.rows().map(|r| self.eval(r)).collect()
    }

    pub fn is_linear(&self) -> bool {
        !matches!(self, Truth::Friedman)
    }
}

fn check_sparsity(s: usize, d: usize) -> Result<()> {
    if s == 0 || s > d {
        return Err(Error::param("s", format!("need 1 <= s <= d = {d}, got {s}")));
    }
    Ok(())
}

fn check_rho(rho: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::param("rho", format!("need 0 <= rho < 1, got {rho}")));
    }
    Ok(())
}

pub fn friedman_eval(x: &[f64]) -> Result<f64> {
    if x.len() < 5 {
        return Err(Error::dim("friedman_eval", 5, x.len()));
    }
    Ok(10.0 * (PI * x[0] * x[1]).sin() + 20.0 * (x[2] - 0.5).powi(2) + 10.0 * x[3] + x[4])
}

pub fn linear_sum_eval(x: &[f64], s: usize) -> Result<f64> {
    check_sparsity(s, x.len())?;
    Ok(x[..s].iter().sum())
}

pub fn scaled_sparse_linear_eval(x: &[f64], s: usize) -> Result<f64> {
    Ok(linear_sum_eval(x, s)? / (s as f64).sqrt())
}

fn check_shape(n: usize, d: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    if d == 0 {
        return Err(Error::param("d", "must be at least 1"));
    }
    Ok(())
}

/// `n × d` matrix of i.i.d. `Unif[0, 1)` entries, filled row by row.
pub fn sample_uniform_inputs(n: usize, d: usize, rng: &mut SimRng) -> Result<Matrix> {
    check_shape(n, d)?;
    Ok(Matrix::from_fn(n, d, |_, _| rng.uniform()))
}

/// Lower Cholesky factor of `Σᵢⱼ = rho^|i−j|`.
pub fn ar_covariance_factor(d: usize, rho: f64) -> Result<Matrix> {
    check_rho(rho)?;
    let sigma = DMatrix::from_fn(d, d, |i, j| rho.powi(i.abs_diff(j) as i32));
    match Cholesky::new(sigma.clone()) {
        Some(chol) => Ok(Matrix::from_nalgebra(&chol.l())),
        None => {
            let eig = sigma.symmetric_eigenvalues();
            let (lo, hi) = eig
                .iter()
                .fold((f64::INFINITY, 0.0_f64), |(lo, hi), &v| (lo.min(v), hi.max(v.abs())));
            Err(Error::Numeric {
                context: "Cholesky factor of the AR covariance",
                condition: hi / lo.abs(),
            })
        }
    }
}

/// Rows i.i.d. `N(0, Σ)` with `Σᵢⱼ = rho^|i−j|`, realized as `L z` for the
/// Cholesky factor `L` and `d` fresh standard normals per row.
pub fn sample_gaussian_ar_inputs(n: usize, d: usize, rho: f64, rng: &mut SimRng) -> Result<Matrix> {
    check_shape(n, d)?;
    let factor = ar_covariance_factor(d, rho)?;
    let mut out = Matrix::zeros(n, d);
    let mut z = vec![0.0; d];
    for i in 0..n {
        z.iter_mut().for_each(|v| *v = rng.normal());
        let row = out.row_mut(i);
        for (a, slot) in row.iter_mut().enumerate() {
            // L is lower triangular
            *slot = (0..=a).map(|b| factor[(a, b)] * z[b]).sum();
        }
    }
    Ok(out)
}

/// `yᵢ = f*(xᵢ) + σ zᵢ`. One normal is drawn per row even when `σ = 0`, so
/// designs that share a seed share their noise draws across noise levels.
pub fn sample_outcomes(spec: &DgpSpec, x: &Matrix, rng: &mut SimRng) -> Result<Vec<f64>> {
    if x.ncols() != spec.dim() {
        return Err(Error::dim("sample_outcomes input columns", spec.dim(), x.ncols()));
    }
    let sigma = spec.noise.sigma();
    let truth = spec.truth.eval_rows(x)?;
    Ok(truth.into_iter().map(|f| f + sigma * rng.normal()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{make_rng, SeedSpec};

    #[test]
    fn friedman_examples() {
        assert_eq!(friedman_eval(&[0.0, 0.0, 0.5, 0.0, 0.0]).unwrap(), 0.0);
        let v = friedman_eval(&[0.5, 1.0, 0.5, 0.0, 0.0]).unwrap();
        assert!((v - 10.0).abs() < 1e-12);
        let v = friedman_eval(&[1.0, 0.5, 1.0, 1.0, 1.0]).unwrap();
        assert!((v - 26.0).abs() < 1e-12);
        // trailing coordinates ignored
        assert_eq!(
            friedman_eval(&[0.3, 0.2, 0.1, 0.9, 0.4, 7.0]).unwrap(),
            friedman_eval(&[0.3, 0.2, 0.1, 0.9, 0.4]).unwrap()
        );
        assert!(matches!(friedman_eval(&[0.0; 4]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn linear_sum_examples() {
        assert_eq!(linear_sum_eval(&[1., 1., 1., 0., 0.], 3).unwrap(), 3.0);
        assert_eq!(linear_sum_eval(&[0.7, 4.0], 1).unwrap(), 0.7);
        assert_eq!(linear_sum_eval(&[0.2, -0.2, 5.0], 2).unwrap(), 0.0);
        assert!(linear_sum_eval(&[1.0, 2.0], 0).is_err());
        assert!(linear_sum_eval(&[1.0, 2.0], 3).is_err());
    }

    #[test]
    fn scaled_sparse_linear_examples() {
        assert_eq!(scaled_sparse_linear_eval(&[1.0; 6], 4).unwrap(), 2.0);
        assert_eq!(scaled_sparse_linear_eval(&[-1.5, 3.0], 1).unwrap(), -1.5);
        assert_eq!(scaled_sparse_linear_eval(&[0.0; 8], 8).unwrap(), 0.0);
        assert!(scaled_sparse_linear_eval(&[1.0], 2).is_err());
    }

    #[test]
    fn spec_validation() {
        let noise = NoiseModel::noiseless();
        assert!(DgpSpec::new(Truth::Friedman, InputLaw::UniformCube { d: 4 }, noise).is_err());
        assert!(DgpSpec::new(Truth::Friedman, InputLaw::UniformCube { d: 5 }, noise).is_ok());
        assert!(DgpSpec::new(Truth::LinearSum { s: 11 }, InputLaw::UniformCube { d: 10 }, noise).is_err());
        assert!(DgpSpec::new(
            Truth::LinearSum { s: 5 },
            InputLaw::GaussianAr { d: 10, rho: 1.0 },
            noise
        )
        .is_err());
        assert!(DgpSpec::new(
            Truth::LinearSum { s: 5 },
            InputLaw::GaussianAr { d: 10, rho: 0.35 },
            noise
        )
        .is_ok());
    }

    #[test]
    fn uniform_sampler_shape_range_determinism() {
        let a = sample_uniform_inputs(3, 5, &mut make_rng(SeedSpec::new(4, 0))).unwrap();
        let b = sample_uniform_inputs(3, 5, &mut make_rng(SeedSpec::new(4, 0))).unwrap();
        assert_eq!(a.shape(), (3, 5));
        assert!(a.as_slice().iter().all(|v| (0.0..1.0).contains(v)));
        assert_eq!(a, b);
        assert!(sample_uniform_inputs(0, 5, &mut make_rng(SeedSpec::new(4, 0))).is_err());
    }

    #[test]
    fn uniform_sampler_mean() {
        let x = sample_uniform_inputs(10_000, 1, &mut make_rng(SeedSpec::new(5, 0))).unwrap();
        let mean = x.as_slice().iter().sum::<f64>() / 10_000.0;
        let bound = 4.0 * (1.0 / 12f64.sqrt()) / 100.0;
        assert!((mean - 0.5).abs() < bound, "mean {mean}");
    }

    #[test]
    fn ar_factor_reproduces_covariance() {
        let l = ar_covariance_factor(6, 0.35).unwrap();
        let llt = Matrix::from_fn(6, 6, |i, j| (0..6).map(|k| l[(i, k)] * l[(j, k)]).sum());
        let target = Matrix::from_fn(6, 6, |i, j| 0.35f64.powi(i.abs_diff(j) as i32));
        assert!(llt.max_abs_diff(&target).unwrap() < 1e-14);
        assert!(ar_covariance_factor(3, -0.2).is_err());
    }

    #[test]
    fn gaussian_single_column_is_standard_normal() {
        let x = sample_gaussian_ar_inputs(20_000, 1, 0.35, &mut make_rng(SeedSpec::new(6, 0))).unwrap();
        let mean = x.as_slice().iter().sum::<f64>() / 20_000.0;
        assert!(mean.abs() < 4.0 / (20_000f64).sqrt());
    }

    #[test]
    fn noiseless_outcomes_equal_truth() {
        let spec = DgpSpec::new(Truth::Friedman, InputLaw::UniformCube { d: 5 }, NoiseModel::noiseless()).unwrap();
        let mut rng = make_rng(SeedSpec::new(8, 0));
        let x = spec.sample_inputs(50, &mut rng).unwrap();
        let y = sample_outcomes(&spec, &x, &mut rng).unwrap();
        assert_eq!(y, Truth::Friedman.eval_rows(&x).unwrap());
    }

    #[test]
    fn outcome_dimension_mismatch() {
        let spec = DgpSpec::new(Truth::Friedman, InputLaw::UniformCube { d: 5 }, NoiseModel::noiseless()).unwrap();
        let x = Matrix::zeros(3, 6);
        assert!(matches!(
            sample_outcomes(&spec, &x, &mut make_rng(SeedSpec::new(0, 0))),
            Err(Error::Dimension { .. })
        ));
    }
}
