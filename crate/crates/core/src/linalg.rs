use crate::error::{Error, Result};
use crate::matrix::Matrix;

const SVD_MAX_ITERATIONS: usize = 10_000;
// nalgebra's own default; a bare machine epsilon can stop the bidiagonal
// sweep early on rank-deficient inputs and return a wrong factorization.
const SVD_CONVERGENCE_EPS: f64 = 5.0 * f64::EPSILON;
// Relative reconstruction error above which a factorization is rejected.
const SVD_RECONSTRUCTION_TOLERANCE: f64 = 1e-9;

/// Moore–Penrose pseudoinverse together with the spectrum it was built from.
#[derive(Debug, Clone)]
pub struct PseudoInverse {
    /// `cols × rows` of the input.
    pub matrix: Matrix,
    /// Singular values in decreasing order.
    pub singular_values: Vec<f64>,
    /// Number of singular values kept above the cutoff.
    pub rank: usize,
    pub cutoff: f64,
}

impl PseudoInverse {
    /// Ratio of the largest to the smallest retained singular value.
    pub fn condition(&self) -> f64 {
        match (self.singular_values.first(), self.rank) {
            (Some(&max), r) if r > 0 => max / self.singular_values[r - 1],
            _ => f64::INFINITY,
        }
    }
}

/// Default cutoff `max(rows, cols) · ε · σ_max`.
pub fn default_cutoff(rows: usize, cols: usize, sigma_max: f64) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON * sigma_max
}

/// Pseudoinverse via SVD; singular values below
/// `max(rows, cols) · ε · σ_max` are treated as zero.
// Negated comparisons below are deliberate: a NaN error must fail the check.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn pseudoinverse(a: &Matrix) -> Result<PseudoInverse> {
    let (rows, cols) = a.shape();
    if rows == 0 || cols == 0 {
        return Ok(PseudoInverse {
            matrix: Matrix::zeros(cols, rows),
            singular_values: Vec::new(),
            rank: 0,
            cutoff: 0.0,
        });
    }
    if let Some((i, j)) = a.first_non_finite() {
        return Err(Error::NonFinite {
            location: format!("pseudoinverse input[{i}, {j}]"),
        });
    }
    let svd = a
        .to_nalgebra()
        .try_svd(true, true, SVD_CONVERGENCE_EPS, SVD_MAX_ITERATIONS)
        .ok_or(Error::Numeric {
            context: "SVD did not converge",
            condition: f64::NAN,
        })?;
    let u = svd.u.as_ref().expect("U requested");
    let v_t = svd.v_t.as_ref().expect("V^T requested");

    // nalgebra does not guarantee ordering; sort indices by decreasing value.
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let singular_values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let sigma_max = singular_values[0];
    let mut recon = u * nalgebra::DMatrix::from_diagonal(&svd.singular_values) * v_t;
    recon -= a.to_nalgebra();
    let recon_err = recon.abs().max();
    if !(recon_err <= SVD_RECONSTRUCTION_TOLERANCE * sigma_max.max(f64::MIN_POSITIVE)) {
        let smallest = singular_values.iter().rev().copied().find(|&v| v > 0.0);
        return Err(Error::Numeric {
            context: "SVD reconstruction check",
            condition: smallest.map_or(f64::INFINITY, |v| sigma_max / v),
        });
    }
    let cutoff = default_cutoff(rows, cols, sigma_max);

    let mut pinv = Matrix::zeros(cols, rows);
    let mut rank = 0;
    for &idx in &order {
        let s = svd.singular_values[idx];
        if s <= cutoff {
            continue;
        }
        rank += 1;
        let inv = 1.0 / s;
        // pinv += v_idx · u_idxᵀ / s
        for r in 0..cols {
            let vr = v_t[(idx, r)] * inv;
            if vr == 0.0 {
                continue;
            }
            let out = pinv.row_mut(r);
            for (c, slot) in out.iter_mut().enumerate() {
                *slot += vr * u[(c, idx)];
            }
        }
    }
    Ok(PseudoInverse {
        matrix: pinv,
        singular_values,
        rank,
        cutoff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
        Matrix::from_fn(a.nrows(), b.ncols(), |i, j| {
            (0..a.ncols()).map(|k| a[(i, k)] * b[(k, j)]).sum()
        })
    }

    #[test]
    fn tall_full_rank() {
        let a = Matrix::from_rows(&[[1.0], [2.0]]).unwrap();
        let p = pseudoinverse(&a).unwrap();
        assert_eq!(p.rank, 1);
        assert!((p.matrix[(0, 0)] - 0.2).abs() < 1e-15);
        assert!((p.matrix[(0, 1)] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn wide_min_norm() {
        let a = Matrix::from_rows(&[[1.0, 0.0]]).unwrap();
        let p = pseudoinverse(&a).unwrap();
        assert_eq!(p.matrix.shape(), (2, 1));
        assert!((p.matrix[(0, 0)] - 1.0).abs() < 1e-15);
        assert!(p.matrix[(1, 0)].abs() < 1e-15);
    }

    #[test]
    fn rank_deficient_penrose_conditions() {
        // second column duplicates the first
        let a = Matrix::from_rows(&[[1.0, 1.0, 0.0], [2.0, 2.0, 1.0], [3.0, 3.0, -1.0], [0.5, 0.5, 2.0]]).unwrap();
        let p = pseudoinverse(&a).unwrap();
        assert_eq!(p.rank, 2);
        let apa = matmul(&matmul(&a, &p.matrix), &a);
        assert!(apa.max_abs_diff(&a).unwrap() < 1e-12);
        let pap = matmul(&matmul(&p.matrix, &a), &p.matrix);
        assert!(pap.max_abs_diff(&p.matrix).unwrap() < 1e-12);
        let ap = matmul(&a, &p.matrix);
        assert!(ap.max_abs_diff(&ap.transpose()).unwrap() < 1e-12);
    }

    #[test]
    fn zero_matrix_has_zero_pseudoinverse() {
        let p = pseudoinverse(&Matrix::zeros(3, 2)).unwrap();
        assert_eq!(p.rank, 0);
        assert!(p.matrix.as_slice().iter().all(|&v| v == 0.0));
    }
}
