use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::random;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.6,
            seed: 0,
        }
    }
}

/// Seeded shuffled split; the train part holds `round(fraction * n)` rows.
pub fn split_train_test<T: Scalar>(
    dataset: &Dataset<T>,
    spec: &SplitSpec,
) -> Result<(Dataset<T>, Dataset<T>)> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::Parameter(format!(
            "train fraction {} must lie strictly between 0 and 1",
            spec.train_fraction
        )));
    }
    if dataset.is_empty() {
        return Err(Error::Data("cannot split an empty dataset".into()));
    }
    let n = dataset.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut random::rng(spec.seed));
    let n_train = ((spec.train_fraction * n as f64).round() as usize).min(n);
    let (train, test) = idx.split_at(n_train);
    Ok((dataset.select(train), dataset.select(test)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{FeatureKind, FeatureSchema, FeatureSpec};

    fn numbered(n: usize) -> Dataset<f64> {
        let schema =
            FeatureSchema::new(vec![FeatureSpec::new("id", FeatureKind::Continuous, "")]).unwrap();
        Dataset::from_rows(schema, (0..n).map(|i| vec![i as f64]).collect(), vec![0; n]).unwrap()
    }

    fn ids(d: &Dataset<f64>) -> Vec<usize> {
        d.rows().iter().map(|r| r[0] as usize).collect()
    }

    #[test]
    fn sizes_follow_rounding_rule() {
        let (tr, te) = split_train_test(
            &numbered(10),
            &SplitSpec {
                train_fraction: 0.6,
                seed: 1,
            },
        )
        .unwrap();
        assert_eq!((tr.len(), te.len()), (6, 4));
        let (tr, te) = split_train_test(
            &numbered(1483),
            &SplitSpec {
                train_fraction: 0.6,
                seed: 1,
            },
        )
        .unwrap();
        assert_eq!((tr.len(), te.len()), (890, 593));
    }

    #[test]
    fn same_seed_same_partition() {
        let d = numbered(50);
        let spec = SplitSpec {
            train_fraction: 0.6,
            seed: 9,
        };
        let a = split_train_test(&d, &spec).unwrap();
        let b = split_train_test(&d, &spec).unwrap();
        assert_eq!(ids(&a.0), ids(&b.0));
        assert_eq!(ids(&a.1), ids(&b.1));
    }

    #[test]
    fn invalid_fraction_and_empty_input() {
        assert!(split_train_test(
            &numbered(5),
            &SplitSpec {
                train_fraction: 1.0,
                seed: 0
            }
        )
        .is_err());
        assert!(split_train_test(&numbered(0), &SplitSpec::default()).is_err());
    }

    proptest::proptest! {
        #[test]
        fn partition_is_disjoint_and_exhaustive(n in 1usize..200, frac in 0.05f64..0.95, seed in 0u64..1000) {
            let (tr, te) = split_train_test(&numbered(n), &SplitSpec { train_fraction: frac, seed }).unwrap();
            let mut all: Vec<usize> = ids(&tr).into_iter().chain(ids(&te)).collect();
            all.sort_unstable();
            proptest::prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            proptest::prop_assert_eq!(tr.len(), (frac * n as f64).round() as usize);
        }
    }
}
