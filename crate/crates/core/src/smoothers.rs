//! Predictors written as linear smoothers.
//!
//! Every predictor here outputs `f̂(x) = Σᵢ wᵢ(x) yᵢ`, where the weights depend
//! only on the training inputs and the query point. Bias and variance follow
//! from the weights alone, so the weight vector is the object everything else
//! is built on.
//!
//! * k-NN: weight `1/k` on the `k` rows nearest to the query in Euclidean
//!   distance on raw features. Distances are sorted stably, so ties go to the
//!   lower row index; a training row identical to the query has distance zero
//!   and is always picked first.
//! * Least squares on the leading `p` columns, without an intercept:
//!   `w(x₀)ᵀ = x₀[..p]ᵀ · pinv(X[:, ..p])`. For `p < n` with full column rank
//!   this is the OLS hat row; for `p ≥ n` it is the minimum-norm interpolating
//!   solution.

use crate::error::{Error, Result};
use crate::linalg::{pseudoinverse, PseudoInverse};
use crate::matrix::{dot, squared_distance, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SmootherSpec {
    Knn {
        k: usize,
    },
    /// Least squares on the first `p` feature columns.
    LeastSquares {
        p: usize,
    },
}

impl SmootherSpec {
    pub fn validate(&self, n: usize, d: usize) -> Result<()> {
        match *self {
            SmootherSpec::Knn { k } if k == 0 || k > n => {
                Err(Error::param("k", format!("need 1 <= k <= n = {n}, got {k}")))
            }
            SmootherSpec::LeastSquares { p } if p == 0 || p > d => {
                Err(Error::param("p", format!("need 1 <= p <= d = {d}, got {p}")))
            }
            _ => Ok(()),
        }
    }
}

impl std::fmt::Display for SmootherSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SmootherSpec::Knn { k } => write!(f, "knn(k={k})"),
            SmootherSpec::LeastSquares { p } => write!(f, "least_squares(p={p})"),
        }
    }
}

/// Smoother weights at one evaluation point.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    pub weights: Vec<f64>,
    pub eval_point: Vec<f64>,
    pub source: SmootherSpec,
}

impl WeightVector {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn squared_norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum()
    }

    /// `Σᵢ wᵢ xᵢ`: the input the smoother effectively reconstructs.
    pub fn weighted_input(&self, x_train: &Matrix) -> Result<Vec<f64>> {
        if x_train.nrows() != self.weights.len() {
            return Err(Error::dim("weighted_input rows", self.weights.len(), x_train.nrows()));
        }
        let mut out = vec![0.0; x_train.ncols()];
        for (w, row) in self.weights.iter().zip(x_train.rows()) {
            if *w == 0.0 {
                continue;
            }
            for (o, x) in out.iter_mut().zip(row) {
                *o += w * x;
            }
        }
        Ok(out)
    }

    /// k-NN weights from a precomputed neighbor ordering.
    pub fn knn_from_order(order: &[usize], k: usize, eval_point: &[f64]) -> Result<Self> {
        let n = order.len();
        SmootherSpec::Knn { k }.validate(n, 1)?;
        let mut weights = vec![0.0; n];
        let w = 1.0 / k as f64;
        for &i in &order[..k] {
            weights[i] = w;
        }
        Ok(WeightVector {
            weights,
            eval_point: eval_point.to_vec(),
            source: SmootherSpec::Knn { k },
        })
    }
}

/// Training row indices sorted by increasing Euclidean distance to `x0`,
/// ties by increasing index.
pub fn neighbor_order(x_train: &Matrix, x0: &[f64]) -> Result<Vec<usize>> {
    if x0.len() != x_train.ncols() {
        return Err(Error::dim("query point", x_train.ncols(), x0.len()));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            location: "query point".into(),
        });
    }
    let dist: Vec<f64> = x_train.rows().map(|r| squared_distance(r, x0)).collect();
    let mut order: Vec<usize> = (0..dist.len()).collect();
    order.sort_by(|&a, &b| dist[a].total_cmp(&dist[b]));
    Ok(order)
}

pub fn knn_weights(x_train: &Matrix, x0: &[f64], k: usize) -> Result<WeightVector> {
    SmootherSpec::Knn { k }.validate(x_train.nrows(), x_train.ncols())?;
    let order = neighbor_order(x_train, x0)?;
    WeightVector::knn_from_order(&order, k, x0)
}

pub fn least_squares_weights(x_train: &Matrix, x0: &[f64], p: usize) -> Result<WeightVector> {
    Smoother::fit(x_train, SmootherSpec::LeastSquares { p })?.weights_at(x0)
}

/// A smoother bound to a training design, with whatever precomputation the
/// weights need (the pseudoinverse for least squares).
#[derive(Debug, Clone)]
pub struct Smoother<'a> {
    x_train: &'a Matrix,
    spec: SmootherSpec,
    pinv: Option<PseudoInverse>,
}

impl<'a> Smoother<'a> {
    pub fn fit(x_train: &'a Matrix, spec: SmootherSpec) -> Result<Self> {
        spec.validate(x_train.nrows(), x_train.ncols())?;
        let pinv = match spec {
            SmootherSpec::Knn { .. } => None,
            SmootherSpec::LeastSquares { p } => Some(pseudoinverse(&x_train.leading_columns(p)?)?),
        };
        Ok(Smoother { x_train, spec, pinv })
    }

    pub fn spec(&self) -> SmootherSpec {
        self.spec
    }

    pub fn pseudoinverse(&self) -> Option<&PseudoInverse> {
        self.pinv.as_ref()
    }

    pub fn weights_at(&self, x0: &[f64]) -> Result<WeightVector> {
        if x0.len() != self.x_train.ncols() {
            return Err(Error::dim("query point", self.x_train.ncols(), x0.len()));
        }
        match (self.spec, &self.pinv) {
            (SmootherSpec::Knn { k }, _) => {
                let order = neighbor_order(self.x_train, x0)?;
                WeightVector::knn_from_order(&order, k, x0)
            }
            (SmootherSpec::LeastSquares { p }, Some(pinv)) => {
                let n = self.x_train.nrows();
                let mut weights = vec![0.0; n];
                for (l, &xl) in x0[..p].iter().enumerate() {
                    for (w, v) in weights.iter_mut().zip(pinv.matrix.row(l)) {
                        *w += xl * v;
                    }
                }
                Ok(WeightVector {
                    weights,
                    eval_point: x0.to_vec(),
                    source: self.spec,
                })
            }
            (SmootherSpec::LeastSquares { .. }, None) => unreachable!("fit stores the pseudoinverse"),
        }
    }

    /// Weight vectors at every row of `x_eval`.
    pub fn weights_at_rows(&self, x_eval: &Matrix) -> Result<Vec<WeightVector>> {
        x_eval.rows().map(|r| self.weights_at(r)).collect()
    }
}

/// `m × n` matrix whose row `j` is the weight vector at `x_eval` row `j`.
pub fn smoother_matrix(x_train: &Matrix, x_eval: &Matrix, spec: SmootherSpec) -> Result<Matrix> {
    if x_eval.ncols() != x_train.ncols() {
        return Err(Error::dim(
            "smoother_matrix eval columns",
            x_train.ncols(),
            x_eval.ncols(),
        ));
    }
    let smoother = Smoother::fit(x_train, spec)?;
    let mut out = Matrix::zeros(x_eval.nrows(), x_train.nrows());
    for (j, row) in x_eval.rows().enumerate() {
        out.row_mut(j).copy_from_slice(&smoother.weights_at(row)?.weights);
    }
    Ok(out)
}

pub fn predict(w: &WeightVector, y_train: &[f64]) -> Result<f64> {
    if w.weights.len() != y_train.len() {
        return Err(Error::dim("predict", w.weights.len(), y_train.len()));
    }
    Ok(dot(&w.weights, y_train))
}
