//! Gaussian-copula model of the absence class: empirical marginals tied by a
//! normal-score correlation matrix, von Mises mixtures for directions and
//! frequency tables for discrete features.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::vonmises::{fit_von_mises_mixture, VonMisesMixture};
use crate::error::{Error, Result};
use crate::linalg::{psd_factor, repair_correlation};
use crate::matrix::Matrix;
use crate::random::{self, Rng};
use crate::scalar::Scalar;
use crate::schema::{FeatureKind, FeatureSchema};
use crate::stats::{midranks, normal_cdf, normal_quantile, pearson, total_cmp};

pub const MIN_COPULA_ROWS: usize = 30;
const MIXTURE_COMPONENTS: usize = 2;
const MIXTURE_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct EmpiricalMarginal<T> {
    pub feature: usize,
    /// Sorted observed values.
    pub sorted: Vec<T>,
    pub degenerate: bool,
}

impl<T: Scalar> EmpiricalMarginal<T> {
    fn fit(feature: usize, values: &[T]) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(total_cmp);
        let degenerate = sorted.first() == sorted.last();
        Self {
            feature,
            sorted,
            degenerate,
        }
    }

    pub fn min(&self) -> T {
        self.sorted[0]
    }

    pub fn max(&self) -> T {
        self.sorted[self.sorted.len() - 1]
    }

    /// Inverse CDF with linear interpolation between order statistics.
    pub fn quantile(&self, u: T) -> T {
        let n = self.sorted.len();
        let pos = u.max(T::zero()).min(T::one()) * T::of_usize(n - 1);
        let lo = pos.floor().to_usize().unwrap_or(0).min(n - 1);
        let hi = (lo + 1).min(n - 1);
        let frac = pos - T::of_usize(lo);
        self.sorted[lo] + frac * (self.sorted[hi] - self.sorted[lo])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct FrequencyTable<T> {
    pub feature: usize,
    /// Stored cell values (level index, or month number).
    pub values: Vec<T>,
    pub probabilities: Vec<T>,
}

impl<T: Scalar> FrequencyTable<T> {
    fn fit(feature: usize, column: &[T]) -> Self {
        let mut sorted = column.to_vec();
        sorted.sort_by(total_cmp);
        let mut values: Vec<T> = Vec::new();
        let mut counts: Vec<usize> = Vec::new();
        for v in sorted {
            if values.last() == Some(&v) {
                *counts.last_mut().expect("paired with values") += 1;
            } else {
                values.push(v);
                counts.push(1);
            }
        }
        let n = T::of_usize(column.len());
        let probabilities = counts.iter().map(|&c| T::of_usize(c) / n).collect();
        Self {
            feature,
            values,
            probabilities,
        }
    }

    fn draw(&self, rng: &mut Rng) -> T {
        let u = T::of(rng.random::<f64>());
        let mut acc = T::zero();
        for (v, &p) in self.values.iter().zip(&self.probabilities) {
            acc = acc + p;
            if u < acc {
                return *v;
            }
        }
        *self.values.last().expect("tables are non-empty")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CircularMarginal<T> {
    pub feature: usize,
    pub mixture: VonMisesMixture<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CopulaNegativeModel<T: Scalar> {
    pub schema: FeatureSchema,
    pub continuous: Vec<EmpiricalMarginal<T>>,
    pub circular: Vec<CircularMarginal<T>>,
    pub discrete: Vec<FrequencyTable<T>>,
    /// Normal-score correlation of the continuous features, in `continuous` order.
    pub correlation: Matrix<T>,
    factor: Matrix<T>,
}

/// Normal scores `Φ⁻¹(rank / (n + 1))` using midranks.
pub fn normal_scores<T: Scalar>(values: &[T]) -> Vec<T> {
    let n1 = T::of_usize(values.len() + 1);
    midranks(values)
        .into_iter()
        .map(|r| normal_quantile(r / n1))
        .collect()
}

/// Pearson correlation matrix of the given columns; undefined entries are 0.
pub(crate) fn correlation_of<T: Scalar>(columns: &[Vec<T>]) -> Matrix<T> {
    let m = columns.len();
    let mut c = Matrix::<T>::identity(m);
    for i in 0..m {
        for j in (i + 1)..m {
            let r = pearson(&columns[i], &columns[j]).unwrap_or(T::zero());
            c[(i, j)] = r;
            c[(j, i)] = r;
        }
    }
    c
}

/// Fits the copula model on every row of `negatives`.
pub fn fit_copula_negative_model<T: Scalar>(
    negatives: &crate::schema::Dataset<T>,
) -> Result<CopulaNegativeModel<T>> {
    if negatives.len() < MIN_COPULA_ROWS {
        return Err(Error::Data(format!(
            "the copula model needs at least {MIN_COPULA_ROWS} negative rows, got {}",
            negatives.len()
        )));
    }
    let schema = negatives.schema().clone();
    let mut continuous = Vec::new();
    let mut circular = Vec::new();
    let mut discrete = Vec::new();
    let mut scores = Vec::new();
    for (j, spec) in schema.features().iter().enumerate() {
        let column = negatives.column(j);
        match spec.kind {
            FeatureKind::Continuous => {
                let marginal = EmpiricalMarginal::fit(j, &column);
                scores.push(if marginal.degenerate {
                    vec![T::zero(); column.len()]
                } else {
                    normal_scores(&column)
                });
                continuous.push(marginal);
            }
            FeatureKind::CircularDegrees => {
                let fit = fit_von_mises_mixture(&column, MIXTURE_COMPONENTS, MIXTURE_SEED)?;
                circular.push(CircularMarginal {
                    feature: j,
                    mixture: fit.mixture,
                });
            }
            FeatureKind::Categorical | FeatureKind::Month => {
                discrete.push(FrequencyTable::fit(j, &column))
            }
        }
    }
    let correlation = repair_correlation(&correlation_of(&scores))?;
    let factor = psd_factor(&correlation)?;
    Ok(CopulaNegativeModel {
        schema,
        continuous,
        circular,
        discrete,
        correlation,
        factor,
    })
}

impl<T: Scalar> CopulaNegativeModel<T> {
    fn draw_row(&self, rng: &mut Rng) -> Vec<T> {
        let mut row = vec![T::zero(); self.schema.len()];
        let m = self.continuous.len();
        let e: Vec<T> = (0..m)
            .map(|_| T::of(rng.sample::<f64, _>(StandardNormal)))
            .collect();
        for (i, marginal) in self.continuous.iter().enumerate() {
            let z = (0..m).fold(T::zero(), |acc, k| acc + self.factor[(i, k)] * e[k]);
            row[marginal.feature] = marginal.quantile(normal_cdf(z));
        }
        for c in &self.circular {
            row[c.feature] = c.mixture.draw(rng);
        }
        for t in &self.discrete {
            row[t.feature] = t.draw(rng);
        }
        row
    }
}

/// Draws `n` rows in the model's schema order.
pub fn sample_synthetic_negatives<T: Scalar>(
    model: &CopulaNegativeModel<T>,
    n: usize,
    seed: u64,
) -> Vec<Vec<T>> {
    let mut rng = random::rng(seed);
    (0..n).map(|_| model.draw_row(&mut rng)).collect()
}
