//! Symmetric eigendecomposition by cyclic Jacobi rotations.
//!
//! The matrices in this crate are small (feature covariance, normal-score
//! correlation), so the quadratic-per-sweep cost is irrelevant and Jacobi
//! gives eigenvectors that are orthonormal to working precision.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct SymmetricEigen<T> {
    /// Eigenvalues sorted non-increasing.
    pub values: Vec<T>,
    /// Eigenvectors as rows, in the same order as `values`.
    pub vectors: Matrix<T>,
}

const MAX_SWEEPS: usize = 100;

pub fn symmetric_eigen<T: Scalar>(m: &Matrix<T>) -> Result<SymmetricEigen<T>> {
    let n = m.rows();
    if n != m.cols() {
        return Err(Error::Contract(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            n,
            m.cols()
        )));
    }
    let mut a = m.clone();
    let mut v = Matrix::<T>::identity(n);
    let two = T::of(2.0);

    for _ in 0..MAX_SWEEPS {
        let mut off = T::zero();
        let mut diag = T::zero();
        for i in 0..n {
            diag = diag + a[(i, i)] * a[(i, i)];
            for j in (i + 1)..n {
                off = off + a[(i, j)] * a[(i, j)];
            }
        }
        if off <= T::epsilon() * T::epsilon() * diag.max(T::min_positive_value())
            || off == T::zero()
        {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[(j, j)]
            .partial_cmp(&a[(i, i)])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (r, &i) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(r, k)] = v[(k, i)];
        }
    }
    Ok(SymmetricEigen { values, vectors })
}

/// Nearest correlation-like matrix: clips negative eigenvalues to zero and
/// rescales back to a unit diagonal.
pub fn repair_correlation<T: Scalar>(c: &Matrix<T>) -> Result<Matrix<T>> {
    let eig = symmetric_eigen(c)?;
    let n = c.rows();
    let mut out = Matrix::<T>::zeros(n, n);
    for (k, &lambda) in eig.values.iter().enumerate() {
        let lambda = lambda.max(T::zero());
        let vk = eig.vectors.row(k);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = out[(i, j)] + lambda * vk[i] * vk[j];
            }
        }
    }
    let d: Vec<T> = (0..n)
        .map(|i| out[(i, i)].max(T::min_positive_value()).sqrt())
        .collect();
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = if i == j {
                T::one()
            } else {
                out[(i, j)] / (d[i] * d[j])
            };
        }
    }
    Ok(out)
}

/// Symmetric square-root factor `L` with `L Lᵀ = c` for a PSD matrix, built
/// from the eigendecomposition so singular matrices are handled.
pub fn psd_factor<T: Scalar>(c: &Matrix<T>) -> Result<Matrix<T>> {
    let eig = symmetric_eigen(c)?;
    let n = c.rows();
    let mut l = Matrix::<T>::zeros(n, n);
    for (k, &lambda) in eig.values.iter().enumerate() {
        let s = lambda.max(T::zero()).sqrt();
        for i in 0..n {
            l[(i, k)] = eig.vectors[(k, i)] * s;
        }
    }
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_of_diagonal_is_sorted() {
        let m = Matrix::from_vec(3, 3, vec![1.0, 0.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0, 2.0]).unwrap();
        let e = symmetric_eigen(&m).unwrap();
        assert_eq!(e.values, vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn eigen_reconstructs_symmetric_matrix() {
        let m =
            Matrix::from_vec(3, 3, vec![4.0, 1.0, 0.5, 1.0, 3.0, -0.2, 0.5, -0.2, 2.0]).unwrap();
        let e = symmetric_eigen(&m).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let r: f64 = (0..3)
                    .map(|k| e.values[k] * e.vectors[(k, i)] * e.vectors[(k, j)])
                    .sum();
                assert!((r - m[(i, j)]).abs() < 1e-12);
                let dot: f64 = (0..3).map(|k| e.vectors[(i, k)] * e.vectors[(j, k)]).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn psd_factor_reproduces_matrix() {
        let c = Matrix::from_vec(2, 2, vec![1.0f32, 0.6, 0.6, 1.0]).unwrap();
        let l = psd_factor(&c).unwrap();
        let llt = l.matmul(&l.transpose()).unwrap();
        for (a, b) in llt.as_slice().iter().zip(c.as_slice()) {
            assert!((a - b).abs() < 1e-5);
        }
    }

    #[test]
    fn repair_keeps_valid_correlation() {
        let c = Matrix::from_vec(2, 2, vec![1.0f64, 0.3, 0.3, 1.0]).unwrap();
        let r = repair_correlation(&c).unwrap();
        assert!((r[(0, 1)] - 0.3).abs() < 1e-12);
        assert_eq!(r[(0, 0)], 1.0);
    }
}
