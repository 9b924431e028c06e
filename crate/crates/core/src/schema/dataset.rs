use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{FeatureKind, FeatureSchema};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    #[default]
    Real,
    Synthetic,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Real => "real",
            Origin::Synthetic => "synthetic",
        }
    }
}

/// Per-row bookkeeping that is not a model feature.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RowMeta {
    pub beach: Option<String>,
    pub date: Option<NaiveDate>,
    pub origin: Origin,
}

impl RowMeta {
    pub fn synthetic() -> Self {
        RowMeta {
            origin: Origin::Synthetic,
            ..RowMeta::default()
        }
    }
}

/// Observation table with binary labels (0 = absence, 1 = presence).
///
/// Cells are stored as scalars: continuous values as-is, circular values in
/// `[0, 360)`, categorical cells as level indices and months as 1..=12.
/// Construction validates these invariants; the table is immutable afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T: Scalar = f64> {
    schema: FeatureSchema,
    rows: Vec<Vec<T>>,
    labels: Vec<u8>,
    meta: Vec<RowMeta>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(
        schema: FeatureSchema,
        rows: Vec<Vec<T>>,
        labels: Vec<u8>,
        meta: Vec<RowMeta>,
    ) -> Result<Self> {
        if rows.len() != labels.len() || rows.len() != meta.len() {
            return Err(Error::Contract(format!(
                "{} rows, {} labels and {} metadata records",
                rows.len(),
                labels.len(),
                meta.len()
            )));
        }
        for (i, (row, &label)) in rows.iter().zip(&labels).enumerate() {
            if label > 1 {
                return Err(Error::Label {
                    row: i,
                    value: label.to_string(),
                });
            }
            check_row(&schema, row).map_err(|m| Error::Contract(format!("row {i}: {m}")))?;
        }
        Ok(Dataset {
            schema,
            rows,
            labels,
            meta,
        })
    }

    /// Rows without beach/date metadata, all marked as real observations.
    pub fn from_rows(schema: FeatureSchema, rows: Vec<Vec<T>>, labels: Vec<u8>) -> Result<Self> {
        let meta = vec![RowMeta::default(); rows.len()];
        Self::new(schema, rows, labels, meta)
    }

    pub fn empty(schema: FeatureSchema) -> Self {
        Dataset {
            schema,
            rows: Vec::new(),
            labels: Vec::new(),
            meta: Vec::new(),
        }
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.rows
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn meta(&self) -> &[RowMeta] {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn count_label(&self, label: u8) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    pub fn column(&self, feature: usize) -> Vec<T> {
        self.rows.iter().map(|r| r[feature]).collect()
    }

    pub fn column_by_name(&self, name: &str) -> Option<Vec<T>> {
        self.schema.index_of(name).map(|i| self.column(i))
    }

    pub fn select(&self, idx: &[usize]) -> Self {
        Dataset {
            schema: self.schema.clone(),
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            meta: idx.iter().map(|&i| self.meta[i].clone()).collect(),
        }
    }

    pub fn indices_with_label(&self, label: u8) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.labels[i] == label)
            .collect()
    }

    pub fn with_label(&self, label: u8) -> Self {
        self.select(&self.indices_with_label(label))
    }

    /// Same rows with one feature column replaced (used for permutation tests).
    pub fn with_column(&self, feature: usize, values: &[T]) -> Result<Self> {
        if values.len() != self.len() {
            return Err(Error::Contract(
                "replacement column has the wrong length".into(),
            ));
        }
        let mut rows = self.rows.clone();
        for (r, &v) in rows.iter_mut().zip(values) {
            r[feature] = v;
        }
        Dataset::new(
            self.schema.clone(),
            rows,
            self.labels.clone(),
            self.meta.clone(),
        )
    }

    pub fn concat(&self, other: &Dataset<T>) -> Result<Self> {
        if self.schema != other.schema {
            return Err(Error::Contract(
                "cannot concatenate datasets with different schemas".into(),
            ));
        }
        let mut out = self.clone();
        out.rows.extend(other.rows.iter().cloned());
        out.labels.extend_from_slice(&other.labels);
        out.meta.extend(other.meta.iter().cloned());
        Ok(out)
    }

    /// Label of the smaller class and its count; ties resolve to presence.
    pub fn minority(&self) -> (u8, usize) {
        let pos = self.count_label(1);
        let neg = self.count_label(0);
        if pos <= neg {
            (1, pos)
        } else {
            (0, neg)
        }
    }
}

fn check_row<T: Scalar>(schema: &FeatureSchema, row: &[T]) -> std::result::Result<(), String> {
    if row.len() != schema.len() {
        return Err(format!("{} cells for {} features", row.len(), schema.len()));
    }
    for (f, &v) in schema.features().iter().zip(row) {
        if !v.is_finite() {
            return Err(format!("non-finite value in `{}`", f.name));
        }
        match f.kind {
            FeatureKind::Continuous => {}
            FeatureKind::CircularDegrees => {
                if v < T::zero() || v >= T::of(360.0) {
                    return Err(format!("`{}` = {v} outside [0, 360)", f.name));
                }
            }
            FeatureKind::Month => {
                if v.fract() != T::zero() || v < T::one() || v > T::of(12.0) {
                    return Err(format!("`{}` = {v} is not a month 1..=12", f.name));
                }
            }
            FeatureKind::Categorical => {
                if v.fract() != T::zero() || v < T::zero() || v.f64() as usize >= f.levels.len() {
                    return Err(format!("`{}` = {v} is not a level index", f.name));
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{FeatureKind, FeatureSpec};

    fn schema() -> FeatureSchema {
        FeatureSchema::new(vec![
            FeatureSpec::new("x", FeatureKind::Continuous, ""),
            FeatureSpec::new("dir", FeatureKind::CircularDegrees, "degrees"),
            FeatureSpec::new("month", FeatureKind::Month, ""),
        ])
        .unwrap()
    }

    #[test]
    fn rejects_mismatched_lengths() {
        let r = Dataset::<f64>::from_rows(schema(), vec![vec![1.0, 2.0, 3.0]], vec![]);
        assert!(r.is_err());
    }

    #[test]
    fn rejects_bad_cells() {
        assert!(Dataset::<f64>::from_rows(schema(), vec![vec![1.0, 360.0, 3.0]], vec![0]).is_err());
        assert!(Dataset::<f64>::from_rows(schema(), vec![vec![1.0, 10.0, 13.0]], vec![0]).is_err());
        assert!(Dataset::<f64>::from_rows(schema(), vec![vec![1.0, 10.0, 3.0]], vec![2]).is_err());
    }

    #[test]
    fn minority_and_select() {
        let d = Dataset::<f32>::from_rows(
            schema(),
            vec![
                vec![1.0, 0.0, 1.0],
                vec![2.0, 90.0, 2.0],
                vec![3.0, 180.0, 3.0],
            ],
            vec![0, 1, 0],
        )
        .unwrap();
        assert_eq!(d.minority(), (1, 1));
        let s = d.select(&[2, 0]);
        assert_eq!(s.labels(), &[0, 0]);
        assert_eq!(s.rows()[0][0], 3.0);
    }
}
