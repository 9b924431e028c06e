use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;
use crate::matrix::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PcaModel<T: Scalar> {
    pub means: Vec<T>,
    /// Principal axes as orthonormal rows, strongest first.
    pub axes: Matrix<T>,
    pub explained_variance: Vec<T>,
    /// Trace of the sample covariance.
    pub total_variance: T,
}

impl<T: Scalar> PcaModel<T> {
    pub fn explained_ratio(&self) -> Vec<T> {
        self.explained_variance
            .iter()
            .map(|&v| {
                if self.total_variance > T::zero() {
                    v / self.total_variance
                } else {
                    T::zero()
                }
            })
            .collect()
    }
}

/// Top `n_components` eigenvectors of the sample covariance. Each axis is
/// signed so its largest-magnitude coordinate is positive.
pub fn pca_fit<T: Scalar>(x: &Matrix<T>, n_components: usize) -> Result<PcaModel<T>> {
    let (n, d) = (x.rows(), x.cols());
    if n < 2 {
        return Err(Error::Data(format!("PCA needs at least 2 rows, got {n}")));
    }
    if n_components == 0 || n_components > d {
        return Err(Error::Parameter(format!(
            "cannot extract {n_components} components from {d} columns"
        )));
    }
    let nt = T::of_usize(n);
    let means: Vec<T> = (0..d)
        .map(|j| x.iter_rows().fold(T::zero(), |a, r| a + r[j]) / nt)
        .collect();
    let mut cov = Matrix::<T>::zeros(d, d);
    for r in x.iter_rows() {
        for i in 0..d {
            let ci = r[i] - means[i];
            for j in i..d {
                cov[(i, j)] = cov[(i, j)] + ci * (r[j] - means[j]);
            }
        }
    }
    let denom = T::of_usize(n - 1);
    for i in 0..d {
        for j in i..d {
            let v = cov[(i, j)] / denom;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    let total_variance = (0..d).fold(T::zero(), |a, i| a + cov[(i, i)]);
    let eig = symmetric_eigen(&cov)?;
    let mut axes = Matrix::<T>::zeros(n_components, d);
    for k in 0..n_components {
        let v = eig.vectors.row(k);
        let lead = (0..d).fold(0, |b, j| if v[j].abs() > v[b].abs() { j } else { b });
        let sign = if v[lead] < T::zero() {
            -T::one()
        } else {
            T::one()
        };
        for (a, &c) in axes.row_mut(k).iter_mut().zip(v) {
            *a = sign * c;
        }
    }
    Ok(PcaModel {
        means,
        axes,
        explained_variance: eig.values[..n_components]
            .iter()
            .map(|v| v.max(T::zero()))
            .collect(),
        total_variance,
    })
}

pub fn pca_transform<T: Scalar>(model: &PcaModel<T>, x: &Matrix<T>) -> Result<Matrix<T>> {
    if x.cols() != model.means.len() {
        return Err(Error::Contract(format!(
            "PCA was fitted on {} columns, got {}",
            model.means.len(),
            x.cols()
        )));
    }
    let k = model.axes.rows();
    let mut out = Matrix::<T>::zeros(x.rows(), k);
    for (i, r) in x.iter_rows().enumerate() {
        for c in 0..k {
            out[(i, c)] = r
                .iter()
                .zip(&model.means)
                .zip(model.axes.row(c))
                .fold(T::zero(), |a, ((&v, &m), &w)| a + (v - m) * w);
        }
    }
    Ok(out)
}

/// Maps component scores back to the original columns.
pub fn pca_inverse<T: Scalar>(model: &PcaModel<T>, scores: &Matrix<T>) -> Matrix<T> {
    let d = model.means.len();
    let mut out = Matrix::<T>::zeros(scores.rows(), d);
    for i in 0..scores.rows() {
        for j in 0..d {
            out[(i, j)] = (0..model.axes.rows()).fold(model.means[j], |a, c| {
                a + scores[(i, c)] * model.axes[(c, j)]
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use crate::stats::{mean, sample_sd};
    use rand::Rng as _;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn collinear_points() {
        let x = Matrix::from_vec(
            5,
            2,
            vec![0.0, 0.0, 1.0, 1.0, 2.0, 2.0, 3.0, 3.0, -1.0, -1.0],
        )
        .unwrap();
        let m = pca_fit(&x, 2).unwrap();
        let h = 0.5f64.sqrt();
        assert!((m.axes[(0, 0)] - h).abs() < 1e-12 && (m.axes[(0, 1)] - h).abs() < 1e-12);
        assert!((m.explained_ratio()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn isotropic_shares_are_equal() {
        let mut rng = random::rng(1);
        let x = Matrix::from_vec(
            5000,
            2,
            (0..10000)
                .map(|_| StandardNormal.sample(&mut rng))
                .collect(),
        )
        .unwrap();
        let r = pca_fit::<f64>(&x, 2).unwrap().explained_ratio();
        assert!((r[0] - r[1]).abs() < 0.05);
    }

    #[test]
    fn transform_properties() {
        let mut rng = random::rng(2);
        let n = 300;
        let mut data = Vec::new();
        for _ in 0..n {
            let (a, b): (f64, f64) = (rng.random_range(-2.0..2.0), rng.random_range(-1.0..1.0));
            data.extend([a + b, 2.0 * a - b, 3.0 * b, a]);
        }
        let x = Matrix::from_vec(n, 4, data).unwrap();
        let m = pca_fit(&x, 2).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let dot: f64 = (0..4).map(|k| m.axes[(i, k)] * m.axes[(j, k)]).sum();
                assert!((dot - if i == j { 1.0 } else { 0.0 }).abs() < 1e-8);
            }
        }
        assert!(m.explained_variance[0] >= m.explained_variance[1]);
        let s = pca_transform(&m, &x).unwrap();
        let (c0, c1) = (s.column(0), s.column(1));
        assert!(mean(&c0).abs() < 1e-9 && mean(&c1).abs() < 1e-9);
        assert!((sample_sd(&c0).powi(2) - m.explained_variance[0]).abs() < 1e-6);
        let cross: f64 = c0.iter().zip(&c1).map(|(a, b)| a * b).sum::<f64>() / (n - 1) as f64;
        assert!(cross.abs() < 1e-6);
        let back = pca_inverse(&m, &s);
        let err = back
            .as_slice()
            .iter()
            .zip(x.as_slice())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-6);
        let centre = Matrix::from_vec(1, 4, m.means.clone()).unwrap();
        assert!(pca_transform(&m, &centre)
            .unwrap()
            .as_slice()
            .iter()
            .all(|v| v.abs() < 1e-12));
        assert!(matches!(
            pca_transform(&m, &Matrix::zeros(1, 3)),
            Err(Error::Contract(_))
        ));
    }
}
