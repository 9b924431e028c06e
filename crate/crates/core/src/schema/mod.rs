//! Feature schema, the immutable [`Dataset`] table and the preprocessing
//! steps that turn raw observation files into model inputs.

mod dataset;
mod direction;
mod discretize;
mod encode;
mod ingest;
mod split;
mod summary;

pub use dataset::{Dataset, Origin, RowMeta};
pub use direction::{bin_direction, expand_month, shorter_arc_delta, wrap_degrees, Compass};
pub use discretize::{
    apply_discretization, fit_discretization, DiscretizationRule, DEFAULT_BIN_LABELS,
};
pub use encode::{Encoder, Encoding};
pub use ingest::{
    load_observations, read_observations, write_dataset, LoadOptions, LABEL_COLUMN,
    LOCATION_COLUMNS,
};
pub use split::{split_train_test, SplitSpec};
pub use summary::{summarize, BeachSummary, DatasetSummary, FeatureStat};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Continuous,
    CircularDegrees,
    Categorical,
    /// Calendar month stored as 1..=12.
    Month,
}

impl FeatureKind {
    /// Continuous and circular features carry real-valued cells.
    pub fn is_numeric(self) -> bool {
        matches!(self, FeatureKind::Continuous | FeatureKind::CircularDegrees)
    }

    /// Categorical and month features carry integer codes.
    pub fn is_discrete(self) -> bool {
        !self.is_numeric()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
    #[serde(default)]
    pub units: String,
    /// Category names for `Categorical` features; cell value `i` means `levels[i]`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub levels: Vec<String>,
}

impl FeatureSpec {
    pub fn new(name: impl Into<String>, kind: FeatureKind, units: impl Into<String>) -> Self {
        FeatureSpec {
            name: name.into(),
            kind,
            units: units.into(),
            levels: Vec::new(),
        }
    }

    pub fn categorical(name: impl Into<String>, levels: Vec<String>) -> Self {
        FeatureSpec {
            name: name.into(),
            kind: FeatureKind::Categorical,
            units: String::new(),
            levels,
        }
    }

    /// Number of distinct codes a discrete feature can take.
    pub fn cardinality(&self) -> usize {
        match self.kind {
            FeatureKind::Month => 12,
            FeatureKind::Categorical => self.levels.len(),
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    features: Vec<FeatureSpec>,
}

impl FeatureSchema {
    pub fn new(features: Vec<FeatureSpec>) -> Result<Self> {
        for (i, f) in features.iter().enumerate() {
            if f.name.trim().is_empty() {
                return Err(Error::Schema(format!("feature {i} has an empty name")));
            }
            if features[..i].iter().any(|g| g.name == f.name) {
                return Err(Error::Schema(format!(
                    "duplicate feature name `{}`",
                    f.name
                )));
            }
        }
        Ok(FeatureSchema { features })
    }

    /// The six model features: SST, wind and current direction and speed, month.
    pub fn stinger() -> Self {
        use FeatureKind::*;
        FeatureSchema {
            features: vec![
                FeatureSpec::new("sst_c", Continuous, "°C"),
                FeatureSpec::new("wind_dir_deg", CircularDegrees, "degrees"),
                FeatureSpec::new("wind_speed_ms", Continuous, "m s⁻¹"),
                FeatureSpec::new("curr_dir_deg", CircularDegrees, "degrees"),
                FeatureSpec::new("curr_speed_ms", Continuous, "m s⁻¹"),
                FeatureSpec::new("month", Month, ""),
            ],
        }
    }

    pub fn features(&self) -> &[FeatureSpec] {
        &self.features
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn indices_of(&self, kind: FeatureKind) -> Vec<usize> {
        self.features
            .iter()
            .enumerate()
            .filter(|(_, f)| f.kind == kind)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn month_index(&self) -> Option<usize> {
        self.indices_of(FeatureKind::Month).first().copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_names_rejected() {
        let f = FeatureSpec::new("a", FeatureKind::Continuous, "");
        assert!(matches!(
            FeatureSchema::new(vec![f.clone(), f]),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn stinger_schema_has_six_features() {
        let s = FeatureSchema::stinger();
        assert_eq!(s.len(), 6);
        assert_eq!(s.indices_of(FeatureKind::CircularDegrees), vec![1, 3]);
        assert_eq!(s.month_index(), Some(5));
    }
}
