use serde::{Deserialize, Serialize};

use super::direction::bin_direction;
use super::discretize::{fit_discretization, DiscretizationRule, DEFAULT_BIN_LABELS};
use super::{Dataset, FeatureKind, FeatureSchema};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;
use crate::stats::{mean, population_sd};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    /// Standardised continuous values, (sin, cos) for directions, month indicators.
    #[default]
    Raw,
    /// Low..Very High indicators, compass-sector indicators, month indicators.
    Subgroups,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
enum Transform<T> {
    Standardize { mean: T, sd: T },
    SinCos,
    OneHot { n: usize, offset: usize },
    Bins(DiscretizationRule<T>),
    Compass,
}

impl<T: Scalar> Transform<T> {
    fn width(&self) -> usize {
        match self {
            Transform::Standardize { .. } => 1,
            Transform::SinCos => 2,
            Transform::OneHot { n, .. } => *n,
            Transform::Bins(r) => r.n_bins(),
            Transform::Compass => 8,
        }
    }

    fn write(&self, v: T, out: &mut [T]) {
        match self {
            Transform::Standardize { mean, sd } => out[0] = (v - *mean) / *sd,
            Transform::SinCos => {
                let r = v.to_radians();
                out[0] = r.sin();
                out[1] = r.cos();
            }
            Transform::OneHot { n, offset } => {
                out.iter_mut().for_each(|o| *o = T::zero());
                let k = (v.f64() as usize).saturating_sub(*offset).min(n - 1);
                out[k] = T::one();
            }
            Transform::Bins(rule) => {
                out.iter_mut().for_each(|o| *o = T::zero());
                out[rule.bin_index(v)] = T::one();
            }
            Transform::Compass => {
                out.iter_mut().for_each(|o| *o = T::zero());
                // cells are validated finite on construction
                out[bin_direction(v).map(|c| c.index()).unwrap_or(0)] = T::one();
            }
        }
    }
}

/// Fit-time mapping from dataset rows to the numeric model matrix.
///
/// Standardisation statistics come from the dataset the encoder is fitted on
/// (the training split); `encode` refuses rows with a different schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Encoder<T> {
    encoding: Encoding,
    schema: FeatureSchema,
    transforms: Vec<Transform<T>>,
    column_names: Vec<String>,
    column_source: Vec<usize>,
}

impl<T: Scalar> Encoder<T> {
    /// `rules` supplies pre-fitted bins for the subgroup encoding (fitted on
    /// the full dataset); continuous features without a rule get one fitted here.
    pub fn fit(
        dataset: &Dataset<T>,
        encoding: Encoding,
        rules: &[DiscretizationRule<T>],
    ) -> Result<Self> {
        let schema = dataset.schema().clone();
        let mut transforms = Vec::with_capacity(schema.len());
        let mut column_names = Vec::new();
        let mut column_source = Vec::new();
        for (j, f) in schema.features().iter().enumerate() {
            let t = match (f.kind, encoding) {
                (FeatureKind::Continuous, Encoding::Raw) => {
                    let col = dataset.column(j);
                    let sd = population_sd(&col);
                    Transform::Standardize {
                        mean: mean(&col),
                        sd: if sd > T::zero() { sd } else { T::one() },
                    }
                }
                (FeatureKind::Continuous, Encoding::Subgroups) => {
                    match rules.iter().find(|r| r.source == f.name) {
                        Some(r) => Transform::Bins(r.clone()),
                        None => Transform::Bins(fit_discretization(
                            &f.name,
                            &dataset.column(j),
                            DEFAULT_BIN_LABELS.len(),
                            &DEFAULT_BIN_LABELS,
                        )?),
                    }
                }
                (FeatureKind::CircularDegrees, Encoding::Raw) => Transform::SinCos,
                (FeatureKind::CircularDegrees, Encoding::Subgroups) => Transform::Compass,
                (FeatureKind::Month, _) => Transform::OneHot { n: 12, offset: 1 },
                (FeatureKind::Categorical, _) => Transform::OneHot {
                    n: f.levels.len().max(1),
                    offset: 0,
                },
            };
            let names: Vec<String> = match &t {
                Transform::Standardize { .. } => vec![f.name.clone()],
                Transform::SinCos => vec![format!("{}_sin", f.name), format!("{}_cos", f.name)],
                Transform::OneHot { n, offset: 1 } => {
                    (1..=*n).map(|m| format!("{}_{m}", f.name)).collect()
                }
                Transform::OneHot { .. } => {
                    f.levels.iter().map(|l| format!("{}_{l}", f.name)).collect()
                }
                Transform::Bins(r) => r.labels.iter().map(|l| format!("{}_{l}", f.name)).collect(),
                Transform::Compass => super::Compass::ALL
                    .iter()
                    .map(|c| format!("{}_{}", f.name, c.name()))
                    .collect(),
            };
            debug_assert_eq!(names.len(), t.width());
            column_source.extend(std::iter::repeat_n(j, names.len()));
            column_names.extend(names);
            transforms.push(t);
        }
        Ok(Encoder {
            encoding,
            schema,
            transforms,
            column_names,
            column_source,
        })
    }

    pub fn encoding(&self) -> Encoding {
        self.encoding
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn width(&self) -> usize {
        self.column_names.len()
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    /// Schema feature index each encoded column was derived from.
    pub fn column_source(&self) -> &[usize] {
        &self.column_source
    }

    pub fn encode_row(&self, row: &[T], out: &mut [T]) {
        let mut at = 0;
        for (t, &v) in self.transforms.iter().zip(row) {
            let w = t.width();
            t.write(v, &mut out[at..at + w]);
            at += w;
        }
    }

    pub fn encode(&self, dataset: &Dataset<T>) -> Result<Matrix<T>> {
        if dataset.schema() != &self.schema {
            return Err(Error::Contract(
                "rows do not match the feature schema the model was fitted with".into(),
            ));
        }
        let mut m = Matrix::zeros(dataset.len(), self.width());
        for (i, row) in dataset.rows().iter().enumerate() {
            self.encode_row(row, m.row_mut(i));
        }
        Ok(m)
    }

    /// Sums per-column scores back onto the schema features they came from.
    pub fn aggregate_to_features(&self, column_scores: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.schema.len()];
        for (&s, &src) in column_scores.iter().zip(&self.column_source) {
            out[src] = out[src] + s;
        }
        out
    }
}
