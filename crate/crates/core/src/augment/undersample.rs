//! Random undersampling of the majority class without replacement.

use rand::seq::{index, SliceRandom};

use crate::error::{Error, Result};
use crate::random;
use crate::scalar::Scalar;
use crate::schema::Dataset;

/// Keeps every minority row and an equal-sized simple random sample of the
/// majority rows, then shuffles the result.
pub fn random_undersample<T: Scalar>(train: &Dataset<T>, seed: u64) -> Result<Dataset<T>> {
    let (minority, count) = train.minority();
    if count == 0 {
        return Err(Error::Strategy(
            "undersampling needs both classes in the training data".into(),
        ));
    }
    let majority = train.indices_with_label(1 - minority);
    let mut rng = random::rng(seed);
    let mut idx = train.indices_with_label(minority);
    idx.extend(
        index::sample(&mut rng, majority.len(), count)
            .iter()
            .map(|k| majority[k]),
    );
    idx.shuffle(&mut rng);
    Ok(train.select(&idx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{FeatureKind, FeatureSchema, FeatureSpec};
    use std::collections::HashSet;

    fn data(pos: usize, neg: usize) -> Dataset<f64> {
        let schema =
            FeatureSchema::new(vec![FeatureSpec::new("id", FeatureKind::Continuous, "")]).unwrap();
        let rows = (0..pos + neg).map(|i| vec![i as f64]).collect();
        let labels = (0..pos + neg).map(|i| u8::from(i < pos)).collect();
        Dataset::from_rows(schema, rows, labels).unwrap()
    }

    #[test]
    fn balances_without_repeats() {
        let d = data(100, 1400);
        let out = random_undersample(&d, 5).unwrap();
        assert_eq!(out.count_label(1), 100);
        assert_eq!(out.count_label(0), 100);
        let ids: HashSet<u64> = out.rows().iter().map(|r| r[0] as u64).collect();
        assert_eq!(ids.len(), 200);
        assert!((0..100).all(|i| ids.contains(&i)));
    }

    #[test]
    fn seeded() {
        let d = data(30, 300);
        assert_eq!(
            random_undersample(&d, 1).unwrap(),
            random_undersample(&d, 1).unwrap()
        );
        assert_ne!(
            random_undersample(&d, 1).unwrap(),
            random_undersample(&d, 2).unwrap()
        );
    }

    #[test]
    fn single_class_fails() {
        assert!(matches!(
            random_undersample(&data(0, 10), 0),
            Err(Error::Strategy(_))
        ));
    }
}
