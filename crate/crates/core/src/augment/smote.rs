//! SMOTE-NC oversampling of the minority class to parity.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::random;
use crate::scalar::Scalar;
use crate::schema::{shorter_arc_delta, wrap_degrees, Dataset, FeatureKind, RowMeta};
use crate::stats::{mean, population_sd, total_cmp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmoteParams {
    pub k_neighbors: usize,
    pub seed: u64,
}

impl Default for SmoteParams {
    fn default() -> Self {
        Self {
            k_neighbors: 5,
            seed: 0,
        }
    }
}

/// Numeric embedding of the minority rows plus the categorical mismatch penalty.
struct Metric<T> {
    embedded: Vec<Vec<T>>,
    discrete: Vec<usize>,
    penalty: T,
}

impl<T: Scalar> Metric<T> {
    fn new(data: &Dataset<T>, rows: &[usize]) -> Self {
        let schema = data.schema();
        let mut columns: Vec<Vec<T>> = Vec::new();
        let mut discrete = Vec::new();
        for (j, spec) in schema.features().iter().enumerate() {
            let values: Vec<T> = rows.iter().map(|&i| data.rows()[i][j]).collect();
            match spec.kind {
                FeatureKind::Continuous => {
                    let (m, sd) = (mean(&values), population_sd(&values));
                    let sd = if sd > T::zero() { sd } else { T::one() };
                    columns.push(values.iter().map(|&v| (v - m) / sd).collect());
                }
                FeatureKind::CircularDegrees => {
                    columns.push(values.iter().map(|v| v.to_radians().sin()).collect());
                    columns.push(values.iter().map(|v| v.to_radians().cos()).collect());
                }
                FeatureKind::Categorical | FeatureKind::Month => discrete.push(j),
            }
        }
        let mut sds: Vec<T> = columns.iter().map(|c| population_sd(c)).collect();
        sds.sort_by(total_cmp);
        let median = match sds.len() {
            0 => T::one(),
            m if m % 2 == 1 => sds[m / 2],
            m => (sds[m / 2 - 1] + sds[m / 2]) / T::of(2.0),
        };
        let embedded = (0..rows.len())
            .map(|r| columns.iter().map(|c| c[r]).collect())
            .collect();
        Self {
            embedded,
            discrete,
            penalty: median * median,
        }
    }

    fn distance2(&self, data: &Dataset<T>, rows: &[usize], a: usize, b: usize) -> T {
        let (ea, eb) = (&self.embedded[a], &self.embedded[b]);
        let mut d = ea
            .iter()
            .zip(eb)
            .fold(T::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y));
        let (ra, rb) = (&data.rows()[rows[a]], &data.rows()[rows[b]]);
        for &j in &self.discrete {
            if ra[j] != rb[j] {
                d = d + self.penalty;
            }
        }
        d
    }
}

/// Positions (within `rows`) of the `k` nearest other rows, nearest first.
fn neighbours<T: Scalar>(
    data: &Dataset<T>,
    rows: &[usize],
    metric: &Metric<T>,
    k: usize,
) -> Vec<Vec<usize>> {
    (0..rows.len())
        .map(|a| {
            let mut d: Vec<(T, usize)> = (0..rows.len())
                .filter(|&b| b != a)
                .map(|b| (metric.distance2(data, rows, a, b), b))
                .collect();
            d.sort_by(|x, y| total_cmp(&x.0, &y.0).then(x.1.cmp(&y.1)));
            d.into_iter().take(k).map(|(_, b)| b).collect()
        })
        .collect()
}

/// Oversamples the minority class until both classes have equal counts.
/// Original rows come first, unchanged, followed by the synthetic rows.
pub fn smote_nc<T: Scalar>(train: &Dataset<T>, params: &SmoteParams) -> Result<Dataset<T>> {
    smote_nc_traced(train, params).map(|(data, _)| data)
}

/// [`smote_nc`] plus, for each synthetic row in order, the indices into
/// `train` of the row it started from and the neighbour it moved towards.
pub fn smote_nc_traced<T: Scalar>(
    train: &Dataset<T>,
    params: &SmoteParams,
) -> Result<(Dataset<T>, Vec<[usize; 2]>)> {
    let (minority, count) = train.minority();
    if count == 0 {
        return Err(Error::Strategy(
            "SMOTE-NC needs both classes in the training data".into(),
        ));
    }
    if params.k_neighbors == 0 || count <= params.k_neighbors {
        return Err(Error::Parameter(format!(
            "k_neighbors = {} must be at least 1 and below the minority count {count}",
            params.k_neighbors
        )));
    }
    let needed = train.len() - 2 * count;
    let rows = train.indices_with_label(minority);
    let metric = Metric::new(train, &rows);
    let nn = neighbours(train, &rows, &metric, params.k_neighbors);
    let schema = train.schema();
    let mut rng = random::rng(params.seed);

    let mut synthetic = Vec::with_capacity(needed);
    let mut parents = Vec::with_capacity(needed);
    for _ in 0..needed {
        let a = rng.random_range(0..rows.len());
        let b = nn[a][rng.random_range(0..nn[a].len())];
        parents.push([rows[a], rows[b]]);
        let lambda = T::of(rng.random::<f64>());
        let (x, y) = (&train.rows()[rows[a]], &train.rows()[rows[b]]);
        let mut out = x.clone();
        for (j, spec) in schema.features().iter().enumerate() {
            out[j] = match spec.kind {
                FeatureKind::Continuous => (x[j] + lambda * (y[j] - x[j]))
                    .max(x[j].min(y[j]))
                    .min(x[j].max(y[j])),
                FeatureKind::CircularDegrees => {
                    wrap_degrees(x[j] + lambda * shorter_arc_delta(x[j], y[j]))
                }
                FeatureKind::Categorical | FeatureKind::Month => {
                    let mut values: Vec<T> =
                        nn[a].iter().map(|&m| train.rows()[rows[m]][j]).collect();
                    values.sort_by(total_cmp);
                    let mut best = (values[0], 0usize);
                    let mut run = (values[0], 0usize);
                    for v in values {
                        if v == run.0 {
                            run.1 += 1;
                        } else {
                            run = (v, 1);
                        }
                        if run.1 > best.1 {
                            best = run;
                        }
                    }
                    best.0
                }
            };
        }
        synthetic.push(out);
    }
    let extra = Dataset::new(
        schema.clone(),
        synthetic,
        vec![minority; needed],
        vec![RowMeta::synthetic(); needed],
    )?;
    Ok((train.concat(&extra)?, parents))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{FeatureSchema, FeatureSpec, Origin};
    use proptest::prelude::*;

    fn schema() -> FeatureSchema {
        FeatureSchema::new(vec![
            FeatureSpec::new("x", FeatureKind::Continuous, ""),
            FeatureSpec::new("dir", FeatureKind::CircularDegrees, "deg"),
            FeatureSpec::categorical("c", vec!["a".into(), "b".into(), "c".into()]),
            FeatureSpec::new("month", FeatureKind::Month, ""),
        ])
        .unwrap()
    }

    fn data(n_pos: usize, n_neg: usize, seed: u64) -> Dataset<f64> {
        let mut rng = random::rng(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n_pos + n_neg {
            rows.push(vec![
                rng.random::<f64>() * 10.0,
                rng.random::<f64>() * 360.0,
                rng.random_range(0..3) as f64,
                rng.random_range(1..=12) as f64,
            ]);
            labels.push(u8::from(i < n_pos));
        }
        Dataset::from_rows(schema(), rows, labels).unwrap()
    }

    fn two_point(a: Vec<f64>, b: Vec<f64>) -> Dataset<f64> {
        let mut rows = vec![a, b];
        let mut labels = vec![1, 1];
        for _ in 0..4 {
            rows.push(vec![5.0, 0.0, 0.0, 1.0]);
            labels.push(0);
        }
        Dataset::from_rows(schema(), rows, labels).unwrap()
    }

    #[test]
    fn continuous_midpoint_and_circular_seam() {
        let d = two_point(vec![0.2, 350.0, 0.0, 1.0], vec![0.6, 10.0, 0.0, 1.0]);
        let out = smote_nc(
            &d,
            &SmoteParams {
                k_neighbors: 1,
                seed: 3,
            },
        )
        .unwrap();
        for r in &out.rows()[6..] {
            // the synthetic point sits at the same fraction along both segments
            let lambda = (r[0] - 0.2) / 0.4;
            let expect = wrap_degrees(350.0 + 20.0 * lambda);
            assert!(shorter_arc_delta(expect, r[1]).abs() < 1e-9, "{r:?}");
            assert!(r[1] >= 350.0 || r[1] <= 10.0);
        }
        assert!((0.2f64 + 0.5 * (0.6 - 0.2) - 0.4).abs() < 1e-15);
        assert!(wrap_degrees(350.0f64 + 0.5 * shorter_arc_delta(350.0, 10.0)).abs() < 1e-12);
    }

    #[test]
    fn reaches_parity_and_keeps_originals() {
        let d = data(30, 470, 1);
        let out = smote_nc(&d, &SmoteParams::default()).unwrap();
        assert_eq!(out.count_label(1), 470);
        assert_eq!(out.count_label(0), 470);
        assert_eq!(&out.rows()[..500], d.rows());
        assert!(out.meta()[500..]
            .iter()
            .all(|m| m.origin == Origin::Synthetic));
    }

    #[test]
    fn categorical_takes_neighbour_mode() {
        let mut rows = vec![vec![0.0, 0.0, 0.0, 1.0]];
        rows.extend((0..3).map(|i| vec![0.1 * (i + 1) as f64, 0.0, 2.0, 5.0]));
        rows.push(vec![0.4, 0.0, 1.0, 5.0]);
        let mut labels = vec![1; 5];
        rows.extend((0..10).map(|_| vec![9.0, 90.0, 0.0, 1.0]));
        labels.extend(vec![0; 10]);
        let d = Dataset::from_rows(schema(), rows, labels).unwrap();
        let out = smote_nc(
            &d,
            &SmoteParams {
                k_neighbors: 4,
                seed: 0,
            },
        )
        .unwrap();
        // every row's four neighbours are the other four minority rows
        for r in &out.rows()[15..] {
            assert_eq!(r[2], 2.0);
            assert_eq!(r[3], 5.0);
        }
    }

    #[test]
    fn ties_go_to_lowest_category() {
        // each minority row's two neighbours carry two different levels
        let mut rows = vec![
            vec![0.0, 0.0, 2.0, 3.0],
            vec![0.0, 0.0, 0.0, 1.0],
            vec![0.0, 0.0, 1.0, 2.0],
        ];
        rows.extend((0..10).map(|_| vec![9.0, 90.0, 0.0, 1.0]));
        let labels = [vec![1; 3], vec![0; 10]].concat();
        let d = Dataset::from_rows(schema(), rows, labels).unwrap();
        let out = smote_nc(
            &d,
            &SmoteParams {
                k_neighbors: 2,
                seed: 1,
            },
        )
        .unwrap();
        let cats: Vec<(f64, f64)> = out.rows()[13..].iter().map(|r| (r[2], r[3])).collect();
        assert!(
            cats.iter().all(|&c| c == (0.0, 1.0) || c == (1.0, 2.0)),
            "{cats:?}"
        );
    }

    #[test]
    fn errors() {
        let d = data(5, 20, 2);
        assert!(matches!(
            smote_nc(&d, &SmoteParams::default()),
            Err(Error::Parameter(_))
        ));
        let single =
            Dataset::from_rows(schema(), vec![vec![1.0, 0.0, 0.0, 1.0]; 8], vec![0; 8]).unwrap();
        assert!(matches!(
            smote_nc(&single, &SmoteParams::default()),
            Err(Error::Strategy(_))
        ));
    }

    #[test]
    fn deterministic() {
        let d = data(20, 100, 4);
        let p = SmoteParams {
            k_neighbors: 5,
            seed: 9,
        };
        assert_eq!(smote_nc(&d, &p).unwrap(), smote_nc(&d, &p).unwrap());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn synthetic_cells_lie_between_parents(seed in 0u64..1000, n_pos in 7usize..20) {
            let d = data(n_pos, 60, seed);
            let params = SmoteParams { k_neighbors: 5, seed };
            let out = smote_nc(&d, &params).unwrap();
            let minority: Vec<&Vec<f64>> = d.rows().iter().zip(d.labels()).filter(|(_, &l)| l == 1).map(|(r, _)| r).collect();
            for r in &out.rows()[d.len()..] {
                // some pair of parents brackets the synthetic continuous value and arc
                let ok = minority.iter().any(|a| minority.iter().any(|b| {
                    let lo = a[0].min(b[0]);
                    let hi = a[0].max(b[0]);
                    if !(lo <= r[0] && r[0] <= hi) { return false; }
                    let full = shorter_arc_delta(a[1], b[1]);
                    let part = shorter_arc_delta(a[1], r[1]);
                    part.abs() <= full.abs() + 1e-9 && (part == 0.0 || part.signum() == full.signum())
                }));
                prop_assert!(ok, "{:?}", r);
            }
        }
    }
}
