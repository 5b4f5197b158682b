use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Training inputs and outcomes plus a set of held-out evaluation inputs.
///
/// Immutable after construction; every entry is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x_train: Matrix,
    y_train: Vec<f64>,
    x_eval: Matrix,
}

impl Dataset {
    pub fn new(x_train: Matrix, y_train: Vec<f64>, x_eval: Matrix) -> Result<Self> {
        let (n, d) = x_train.shape();
        if n == 0 {
            return Err(Error::param("n", "training set must have at least one row"));
        }
        if d == 0 {
            return Err(Error::param("d", "inputs must have at least one column"));
        }
        if y_train.len() != n {
            return Err(Error::dim("Dataset outcomes", n, y_train.len()));
        }
        if x_eval.ncols() != d && x_eval.nrows() > 0 {
            return Err(Error::dim("Dataset evaluation columns", d, x_eval.ncols()));
        }
        if let Some((i, j)) = x_train.first_non_finite() {
            return Err(Error::NonFinite {
                location: format!("x_train[{i}, {j}]"),
            });
        }
        if let Some(i) = y_train.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                location: format!("y_train[{i}]"),
            });
        }
        if let Some((i, j)) = x_eval.first_non_finite() {
            return Err(Error::NonFinite {
                location: format!("x_eval[{i}, {j}]"),
            });
        }
        let x_eval = if x_eval.nrows() == 0 {
            Matrix::zeros(0, d)
        } else {
            x_eval
        };
        Ok(Dataset {
            x_train,
            y_train,
            x_eval,
        })
    }

    pub fn x_train(&self) -> &Matrix {
        &self.x_train
    }

    pub fn y_train(&self) -> &[f64] {
        &self.y_train
    }

    pub fn x_eval(&self) -> &Matrix {
        &self.x_eval
    }

    pub fn n(&self) -> usize {
        self.x_train.nrows()
    }

    pub fn d(&self) -> usize {
        self.x_train.ncols()
    }

    pub fn m(&self) -> usize {
        self.x_eval.nrows()
    }
}

/// Homoskedastic Gaussian outcome noise with standard deviation `sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    sigma: f64,
}

impl NoiseModel {
    pub fn new(sigma: f64) -> Result<Self> {
        if !sigma.is_finite() || sigma < 0.0 {
            return Err(Error::param("sigma", format!("must be finite and >= 0, got {sigma}")));
        }
        Ok(NoiseModel { sigma })
    }

    pub fn noiseless() -> Self {
        NoiseModel { sigma: 0.0 }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn variance(&self) -> f64 {
        self.sigma * self.sigma
    }
}
