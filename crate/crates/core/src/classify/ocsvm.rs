//! One-class ν-SVM with an RBF kernel, solved by SMO on maximal violating pairs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;
use crate::stats::sigmoid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OcsvmParams {
    pub nu: f64,
    /// RBF width; `None` means `1 / d`.
    pub gamma: Option<f64>,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for OcsvmParams {
    fn default() -> Self {
        Self {
            nu: 0.5,
            gamma: None,
            tolerance: 1e-4,
            max_iterations: 10_000,
        }
    }
}

impl OcsvmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.nu <= 1.0) {
            return Err(Error::Parameter(format!(
                "nu = {} must be in (0, 1]",
                self.nu
            )));
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::Parameter(format!("gamma = {g} must be positive")));
            }
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Parameter("tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct OneClassSvm<T: Scalar> {
    pub support: Matrix<T>,
    /// Dual coefficients of the support rows, normalised to sum to 1.
    pub coef: Vec<T>,
    pub rho: T,
    pub gamma: T,
    pub iterations: usize,
    pub converged: bool,
    /// Support vectors / training rows.
    pub support_fraction: T,
}

/// Rows above this size compute kernel rows on demand instead of caching the matrix.
const CACHE_LIMIT: usize = 4000;

fn rbf<T: Scalar>(a: &[T], b: &[T], gamma: T) -> T {
    let d2 = a
        .iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y));
    (-gamma * d2).exp()
}

pub fn fit_ocsvm<T: Scalar>(x: &Matrix<T>, params: &OcsvmParams) -> Result<OneClassSvm<T>> {
    params.validate()?;
    let l = x.rows();
    if l < 2 {
        return Err(Error::Data(format!(
            "one-class SVM needs at least 2 rows, got {l}"
        )));
    }
    let gamma = T::of(params.gamma.unwrap_or(1.0 / x.cols().max(1) as f64));
    let cache: Option<Matrix<T>> = (l <= CACHE_LIMIT).then(|| {
        let mut k = Matrix::<T>::zeros(l, l);
        for i in 0..l {
            for j in i..l {
                let v = rbf(x.row(i), x.row(j), gamma);
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        k
    });
    let kernel_row = |i: usize| -> Vec<T> {
        match &cache {
            Some(k) => k.row(i).to_vec(),
            None => (0..l).map(|j| rbf(x.row(i), x.row(j), gamma)).collect(),
        }
    };

    // libsvm start: the first floor(nu l) coefficients at the bound, one fractional
    let total = params.nu * l as f64;
    let full = (total.floor() as usize).min(l);
    let mut alpha = vec![T::zero(); l];
    for a in alpha.iter_mut().take(full) {
        *a = T::one();
    }
    if full < l {
        alpha[full] = T::of(total - full as f64);
    }
    let mut grad = vec![T::zero(); l];
    for (i, &a) in alpha.iter().enumerate() {
        if a > T::zero() {
            for (g, q) in grad.iter_mut().zip(kernel_row(i)) {
                *g = *g + a * q;
            }
        }
    }

    let tol = T::of(params.tolerance);
    let tau = T::of(1e-12);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < params.max_iterations {
        // i maximises -G over alpha < 1, j minimises -G over alpha > 0
        let mut i = None;
        let mut j = None;
        for k in 0..l {
            if alpha[k] < T::one() && i.is_none_or(|a: usize| -grad[k] > -grad[a]) {
                i = Some(k);
            }
            if alpha[k] > T::zero() && j.is_none_or(|b: usize| -grad[k] < -grad[b]) {
                j = Some(k);
            }
        }
        let (Some(i), Some(j)) = (i, j) else {
            converged = true;
            break;
        };
        if -grad[i] + grad[j] < tol {
            converged = true;
            break;
        }
        let (qi, qj) = (kernel_row(i), kernel_row(j));
        let curvature = (qi[i] + qj[j] - T::of(2.0) * qi[j]).max(tau);
        let step = ((grad[j] - grad[i]) / curvature)
            .min(T::one() - alpha[i])
            .min(alpha[j]);
        alpha[i] = alpha[i] + step;
        alpha[j] = alpha[j] - step;
        for k in 0..l {
            grad[k] = grad[k] + step * (qi[k] - qj[k]);
        }
        iterations += 1;
    }
    if !converged {
        log::warn!(
            "one-class SVM stopped after {iterations} iterations without reaching tolerance {}",
            params.tolerance
        );
    }

    let (mut free_sum, mut free_n) = (T::zero(), 0usize);
    let (mut ub, mut lb) = (T::infinity(), T::neg_infinity());
    for k in 0..l {
        if alpha[k] >= T::one() {
            lb = lb.max(grad[k]);
        } else if alpha[k] <= T::zero() {
            ub = ub.min(grad[k]);
        } else {
            free_sum = free_sum + grad[k];
            free_n += 1;
        }
    }
    let rho = if free_n > 0 {
        free_sum / T::of_usize(free_n)
    } else {
        (ub + lb) / T::of(2.0)
    };

    let sv: Vec<usize> = (0..l).filter(|&k| alpha[k] > T::zero()).collect();
    let norm = T::of(total);
    Ok(OneClassSvm {
        support: x.select_rows(&sv),
        coef: sv.iter().map(|&k| alpha[k] / norm).collect(),
        rho: rho / norm,
        gamma,
        iterations,
        converged,
        support_fraction: T::of_usize(sv.len()) / T::of_usize(l),
    })
}

impl<T: Scalar> OneClassSvm<T> {
    /// Signed decision value `sum a_i K(x_i, x) - rho`; non-negative means inlier.
    pub fn decision(&self, row: &[T]) -> T {
        let s = self
            .support
            .iter_rows()
            .zip(&self.coef)
            .fold(T::zero(), |acc, (sv, &a)| {
                acc + a * rbf(sv, row, self.gamma)
            });
        let f = s - self.rho;
        // values within rounding of the boundary count as on it
        if f.abs() <= T::of(1e-9) * (T::one() + self.rho.abs()) {
            T::zero()
        } else {
            f
        }
    }

    /// Presence score: logistic squash of the decision value relative to `rho`.
    pub fn scores(&self, x: &Matrix<T>) -> Vec<T> {
        let scale = self.rho.abs().max(T::min_positive_value());
        x.iter_rows()
            .map(|r| sigmoid(self.decision(r) / scale))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(n: usize, d: usize, seed: u64) -> Matrix<f64> {
        let mut rng = random::rng(seed);
        Matrix::from_vec(
            n,
            d,
            (0..n * d)
                .map(|_| StandardNormal.sample(&mut rng))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn nu_property() {
        let x = gaussian(500, 2, 1);
        for nu in [0.1, 0.3, 0.5] {
            let m = fit_ocsvm(
                &x,
                &OcsvmParams {
                    nu,
                    ..OcsvmParams::default()
                },
            )
            .unwrap();
            let outliers = x.iter_rows().filter(|r| m.decision(r) < 0.0).count() as f64 / 500.0;
            assert!(outliers <= nu + 0.05, "nu {nu}: outliers {outliers}");
            assert!(
                m.support_fraction >= nu - 0.05,
                "nu {nu}: sv {}",
                m.support_fraction
            );
            assert!(m.converged);
            assert!((m.coef.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn duplicated_point_is_inlier() {
        let x = Matrix::from_vec(10, 2, [1.5, -2.0].repeat(10)).unwrap();
        let m = fit_ocsvm(&x, &OcsvmParams::default()).unwrap();
        assert!(m.decision(&[1.5, -2.0]) >= 0.0);
        assert!(m.scores(&x).iter().all(|&s| s >= 0.5));
        assert!(m.decision(&[9.0, 9.0]) < 0.0);
    }

    #[test]
    fn half_inside_at_default_nu() {
        let x = gaussian(300, 4, 2);
        let m = fit_ocsvm(&x, &OcsvmParams::default()).unwrap();
        let inside = m.scores(&x).iter().filter(|&&s| s >= 0.5).count() as f64 / 300.0;
        assert!((inside - 0.5).abs() < 0.06, "{inside}");
    }

    #[test]
    fn gamma_default_and_validation() {
        let x = gaussian(60, 3, 3);
        let a = fit_ocsvm(&x, &OcsvmParams::default()).unwrap();
        assert_eq!(a.gamma, 1.0 / 3.0);
        assert!(matches!(
            fit_ocsvm(&gaussian(1, 3, 0), &OcsvmParams::default()),
            Err(Error::Data(_))
        ));
        assert!(fit_ocsvm(
            &x,
            &OcsvmParams {
                nu: 0.0,
                ..OcsvmParams::default()
            }
        )
        .is_err());
    }
}
