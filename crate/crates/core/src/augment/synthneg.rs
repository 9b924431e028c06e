//! Synthetic Negative Approach: real presence rows plus an equal number of
//! generated absence rows.

use rand::seq::SliceRandom;

use super::copula::{sample_synthetic_negatives, CopulaNegativeModel};
use super::gan::TabularGan;
use crate::error::{Error, Result};
use crate::random;
use crate::scalar::Scalar;
use crate::schema::{Dataset, FeatureSchema, RowMeta};

/// A fitted model that can draw absence rows.
pub trait NegativeSampler<T: Scalar> {
    fn schema(&self) -> &FeatureSchema;
    fn sample(&self, n: usize, seed: u64) -> Vec<Vec<T>>;
}

impl<T: Scalar> NegativeSampler<T> for CopulaNegativeModel<T> {
    fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    fn sample(&self, n: usize, seed: u64) -> Vec<Vec<T>> {
        sample_synthetic_negatives(self, n, seed)
    }
}

impl<T: Scalar> NegativeSampler<T> for TabularGan<T> {
    fn schema(&self) -> &FeatureSchema {
        TabularGan::schema(self)
    }

    fn sample(&self, n: usize, seed: u64) -> Vec<Vec<T>> {
        self.generate(n, seed)
    }
}

/// Combines the presence rows of `positives` with as many generated absence
/// rows and shuffles. Real absence rows never appear in the output.
pub fn build_synthetic_negative_dataset<T: Scalar>(
    positives: &Dataset<T>,
    sampler: &dyn NegativeSampler<T>,
    seed: u64,
) -> Result<Dataset<T>> {
    if sampler.schema() != positives.schema() {
        return Err(Error::Contract(
            "negative sampler was fitted on a different schema".into(),
        ));
    }
    let positives = positives.with_label(1);
    if positives.is_empty() {
        return Err(Error::Data(
            "the synthetic-negative approach needs at least one presence row".into(),
        ));
    }
    let n = positives.len();
    let rows = sampler.sample(n, random::derive_seed(seed, 0));
    let negatives = Dataset::new(
        positives.schema().clone(),
        rows,
        vec![0; n],
        vec![RowMeta::synthetic(); n],
    )?;
    let combined = positives.concat(&negatives)?;
    let mut order: Vec<usize> = (0..combined.len()).collect();
    order.shuffle(&mut random::rng(random::derive_seed(seed, 1)));
    Ok(combined.select(&order))
}
