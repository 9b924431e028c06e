use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use super::{Dataset, FeatureKind};
use crate::scalar::Scalar;
use crate::stats::{mean, sample_sd};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureStat {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BeachSummary {
    pub beach: String,
    pub presence: usize,
    pub absence: usize,
    pub features: Vec<FeatureStat>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetSummary {
    pub beaches: Vec<BeachSummary>,
    pub overall: BeachSummary,
}

const UNKNOWN_BEACH: &str = "(unspecified)";

/// Per-beach class counts plus mean/SD of every continuous and circular
/// feature. Directions are summarised arithmetically, like the other columns.
pub fn summarize<T: Scalar>(dataset: &Dataset<T>) -> DatasetSummary {
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, m) in dataset.meta().iter().enumerate() {
        let key = m.beach.clone().unwrap_or_else(|| UNKNOWN_BEACH.to_string());
        groups.entry(key).or_default().push(i);
    }
    let beaches = groups
        .into_iter()
        .map(|(beach, idx)| summarize_rows(dataset, beach, &idx))
        .collect();
    let all: Vec<usize> = (0..dataset.len()).collect();
    DatasetSummary {
        beaches,
        overall: summarize_rows(dataset, "All".into(), &all),
    }
}

fn summarize_rows<T: Scalar>(d: &Dataset<T>, beach: String, idx: &[usize]) -> BeachSummary {
    let presence = idx.iter().filter(|&&i| d.labels()[i] == 1).count();
    let features = d
        .schema()
        .features()
        .iter()
        .enumerate()
        .filter(|(_, f)| {
            matches!(
                f.kind,
                FeatureKind::Continuous | FeatureKind::CircularDegrees
            )
        })
        .map(|(j, f)| {
            let xs: Vec<T> = idx.iter().map(|&i| d.rows()[i][j]).collect();
            FeatureStat {
                name: f.name.clone(),
                mean: mean(&xs).f64(),
                sd: sample_sd(&xs).f64(),
            }
        })
        .collect();
    BeachSummary {
        beach,
        presence,
        absence: idx.len() - presence,
        features,
    }
}

impl DatasetSummary {
    /// Fixed-width text table: one row per beach, `mean (SD)` per feature.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let names: Vec<&str> = self
            .overall
            .features
            .iter()
            .map(|f| f.name.as_str())
            .collect();
        let _ = write!(out, "{:<16}{:>10}{:>10}", "Beach", "Presence", "Absence");
        for n in &names {
            let _ = write!(out, "{:>22}", n);
        }
        out.push('\n');
        for b in self.beaches.iter().chain(std::iter::once(&self.overall)) {
            let _ = write!(out, "{:<16}{:>10}{:>10}", b.beach, b.presence, b.absence);
            for f in &b.features {
                let _ = write!(out, "{:>22}", format!("{:.3} ({:.3})", f.mean, f.sd));
            }
            out.push('\n');
        }
        out
    }
}
