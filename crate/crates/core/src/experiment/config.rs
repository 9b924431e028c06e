use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::FixtureSpec;
use crate::augment::{GanParams, Strategy};
use crate::classify::{BoostParams, ForestParams, MlpParams, ModelKind, ModelParams, OcsvmParams};
use crate::error::{Error, Result};
use crate::schema::Encoding;

pub const SEED_ENV: &str = "STINGER_SEED";

/// One experiment: `runs` seeded splits, each crossed with every strategy and model.
///
/// Relative paths are taken against the working directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Observation CSV; mutually exclusive with `fixture`.
    pub data: Option<PathBuf>,
    pub fixture: Option<FixtureSpec>,
    pub drop_incomplete_rows: bool,
    pub encoding: Encoding,
    pub train_fraction: f64,
    pub runs: usize,
    pub strategies: Vec<Strategy>,
    pub models: Vec<ModelKind>,
    pub smote_k: usize,
    pub gan: GanParams,
    pub mlp: MlpParams,
    pub forest: ForestParams,
    pub boost: BoostParams,
    pub ocsvm: OcsvmParams,
    pub output: PathBuf,
    pub master_seed: u64,
    /// Concurrent runs; 0 uses every core.
    pub jobs: usize,
    /// Write curve, importance and distribution exports under `plots/`.
    pub plots: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            data: None,
            fixture: None,
            drop_incomplete_rows: false,
            encoding: Encoding::Raw,
            train_fraction: 0.6,
            runs: 30,
            strategies: Strategy::ALL.to_vec(),
            models: ModelKind::ALL.to_vec(),
            smote_k: 5,
            gan: GanParams::default(),
            mlp: MlpParams::default(),
            forest: ForestParams::default(),
            boost: BoostParams::default(),
            ocsvm: OcsvmParams::default(),
            output: PathBuf::from("out"),
            master_seed: 0,
            jobs: 0,
            plots: true,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn model_params(&self) -> ModelParams {
        ModelParams {
            mlp: self.mlp.clone(),
            forest: self.forest.clone(),
            boost: self.boost.clone(),
            ocsvm: self.ocsvm.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::Config("run count must be at least 1".into()));
        }
        if self.strategies.is_empty() || self.models.is_empty() {
            return Err(Error::Config(
                "strategies and models must be non-empty".into(),
            ));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train_fraction {} must lie strictly between 0 and 1",
                self.train_fraction
            )));
        }
        if self.smote_k == 0 {
            return Err(Error::Config("smote_k must be positive".into()));
        }
        match (&self.data, &self.fixture) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "set either `data` or `fixture`, not both".into(),
                ))
            }
            (None, None) => {
                return Err(Error::Config(
                    "one of `data` or `fixture` is required".into(),
                ))
            }
            (Some(p), None) if !p.is_file() => {
                return Err(Error::Config(format!(
                    "data file {} does not exist",
                    p.display()
                )))
            }
            (None, Some(f)) => f.validate()?,
            _ => {}
        }
        self.gan.validate()?;
        self.mlp.validate()?;
        self.forest.validate()?;
        self.boost.validate()?;
        self.ocsvm.validate()?;
        Ok(())
    }
}
