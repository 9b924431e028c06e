//! The four classifiers behind one train/predict/importance contract.

pub mod boost;
pub mod forest;
pub mod mlp;
pub mod ocsvm;
pub mod tree;

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

pub use boost::{fit_boost, BoostParams, Booster};
pub use forest::{fit_forest, Forest, ForestParams};
pub use mlp::{fit_mlp, Mlp, MlpParams};
pub use ocsvm::{fit_ocsvm, OcsvmParams, OneClassSvm};
pub use tree::{DecisionTree, TreeParams};

use crate::error::{Error, Result};
use crate::eval::{accuracy, confusion_matrix, roc_auc};
use crate::random;
use crate::scalar::Scalar;
use crate::schema::{Dataset, DiscretizationRule, Encoder, Encoding};

pub const MODEL_FORMAT: &str = "stinger-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Mlp,
    Forest,
    Boost,
    Ocsvm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Mlp,
        ModelKind::Forest,
        ModelKind::Boost,
        ModelKind::Ocsvm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Mlp => "mlp",
            ModelKind::Forest => "forest",
            ModelKind::Boost => "boost",
            ModelKind::Ocsvm => "ocsvm",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown model `{s}` (expected mlp, forest, boost or ocsvm)"
                ))
            })
    }
}

/// Per-model hyperparameters; the seed fields are overwritten by run seeds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelParams {
    pub mlp: MlpParams,
    pub forest: ForestParams,
    pub boost: BoostParams,
    pub ocsvm: OcsvmParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", bound = "T: Scalar")]
pub enum Fitted<T: Scalar> {
    Mlp(Mlp<T>),
    Forest(Forest<T>),
    Boost(Booster<T>),
    Ocsvm(OneClassSvm<T>),
}

/// A fitted model together with the encoding its inputs must go through.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TrainedModel<T: Scalar> {
    pub format: String,
    pub version: u32,
    pub encoder: Encoder<T>,
    pub model: Fitted<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Predictions<T: Scalar> {
    /// Presence score in `[0, 1]` per row.
    pub scores: Vec<T>,
    pub labels: Vec<u8>,
}

fn require_both_classes<T: Scalar>(train: &Dataset<T>, what: &str) -> Result<()> {
    if train.count_label(0) == 0 || train.count_label(1) == 0 {
        return Err(Error::Input(format!(
            "{what} needs both classes in the training data"
        )));
    }
    Ok(())
}

/// Fits `kind` on `train` (OCSVM: on its presence rows only). `seed`
/// replaces the seed in `params`.
pub fn train_model<T: Scalar>(
    kind: ModelKind,
    train: &Dataset<T>,
    encoding: Encoding,
    rules: &[DiscretizationRule<T>],
    params: &ModelParams,
    seed: u64,
) -> Result<TrainedModel<T>> {
    let fitted_on = match kind {
        ModelKind::Ocsvm => train.with_label(1),
        _ => {
            require_both_classes(train, kind.name())?;
            train.clone()
        }
    };
    if kind == ModelKind::Ocsvm && fitted_on.len() < 2 {
        return Err(Error::Input(format!(
            "one-class SVM needs at least 2 presence rows, got {}",
            fitted_on.len()
        )));
    }
    let encoder = Encoder::fit(&fitted_on, encoding, rules)?;
    let x = encoder.encode(&fitted_on)?;
    let y = fitted_on.labels();
    let model = match kind {
        ModelKind::Mlp => Fitted::Mlp(fit_mlp(
            &x,
            y,
            &MlpParams {
                seed,
                ..params.mlp.clone()
            },
        )?),
        ModelKind::Forest => Fitted::Forest(fit_forest(
            &x,
            y,
            &ForestParams {
                seed,
                ..params.forest.clone()
            },
        )?),
        ModelKind::Boost => Fitted::Boost(fit_boost(
            &x,
            y,
            &BoostParams {
                seed,
                ..params.boost.clone()
            },
        )?),
        ModelKind::Ocsvm => Fitted::Ocsvm(fit_ocsvm(&x, &params.ocsvm)?),
    };
    Ok(TrainedModel {
        format: MODEL_FORMAT.to_string(),
        version: MODEL_VERSION,
        encoder,
        model,
    })
}

pub fn train_mlp<T: Scalar>(train: &Dataset<T>, params: &MlpParams) -> Result<TrainedModel<T>> {
    let p = ModelParams {
        mlp: params.clone(),
        ..ModelParams::default()
    };
    train_model(ModelKind::Mlp, train, Encoding::Raw, &[], &p, params.seed)
}

pub fn train_forest<T: Scalar>(
    train: &Dataset<T>,
    params: &ForestParams,
) -> Result<TrainedModel<T>> {
    let p = ModelParams {
        forest: params.clone(),
        ..ModelParams::default()
    };
    train_model(
        ModelKind::Forest,
        train,
        Encoding::Raw,
        &[],
        &p,
        params.seed,
    )
}

pub fn train_boost<T: Scalar>(train: &Dataset<T>, params: &BoostParams) -> Result<TrainedModel<T>> {
    let p = ModelParams {
        boost: params.clone(),
        ..ModelParams::default()
    };
    train_model(ModelKind::Boost, train, Encoding::Raw, &[], &p, params.seed)
}

pub fn train_ocsvm<T: Scalar>(
    positives: &Dataset<T>,
    params: &OcsvmParams,
) -> Result<TrainedModel<T>> {
    let p = ModelParams {
        ocsvm: params.clone(),
        ..ModelParams::default()
    };
    train_model(ModelKind::Ocsvm, positives, Encoding::Raw, &[], &p, 0)
}

const PERMUTATION_REPEATS: usize = 5;

impl<T: Scalar> TrainedModel<T> {
    pub fn kind(&self) -> ModelKind {
        match self.model {
            Fitted::Mlp(_) => ModelKind::Mlp,
            Fitted::Forest(_) => ModelKind::Forest,
            Fitted::Boost(_) => ModelKind::Boost,
            Fitted::Ocsvm(_) => ModelKind::Ocsvm,
        }
    }

    pub fn predict(&self, data: &Dataset<T>) -> Result<Predictions<T>> {
        let x = self.encoder.encode(data)?;
        let scores = match &self.model {
            Fitted::Mlp(m) => m.scores(&x),
            Fitted::Forest(f) => f.scores(&x),
            Fitted::Boost(b) => b.scores(&x),
            Fitted::Ocsvm(o) => o.scores(&x),
        };
        let labels = match &self.model {
            Fitted::Forest(f) => f.labels(&x),
            _ => scores.iter().map(|&s| u8::from(s >= T::of(0.5))).collect(),
        };
        Ok(Predictions { scores, labels })
    }

    /// Per-feature importance in schema order, summing to 1 unless every
    /// score is zero. Forest and boosting use their internal estimates;
    /// MLP and OCSVM need `validation` for permutation importance.
    pub fn feature_importance(&self, validation: Option<&Dataset<T>>, seed: u64) -> Result<Vec<T>> {
        let columns = match &self.model {
            Fitted::Forest(f) => Some(f.importance()),
            Fitted::Boost(b) => Some(b.importance()),
            _ => None,
        };
        let raw = match columns {
            Some(c) => self.encoder.aggregate_to_features(&c),
            None => {
                let data = validation.ok_or_else(|| {
                    Error::Input(format!("{} importance needs a validation set", self.kind()))
                })?;
                self.permutation_importance(data, seed)?
            }
        };
        let total = raw.iter().fold(T::zero(), |a, &v| a + v);
        Ok(if total > T::zero() {
            raw.into_iter().map(|v| v / total).collect()
        } else {
            raw
        })
    }

    /// Mean drop in AUC (accuracy when AUC is undefined) when one feature
    /// column is shuffled; negative drops count as zero.
    fn permutation_importance(&self, data: &Dataset<T>, seed: u64) -> Result<Vec<T>> {
        let quality = |d: &Dataset<T>| -> Result<f64> {
            let p = self.predict(d)?;
            Ok(match roc_auc(d.labels(), &p.scores) {
                Some(a) => a,
                None => accuracy(&confusion_matrix(d.labels(), &p.labels)?),
            })
        };
        let base = quality(data)?;
        let mut rng = random::rng(seed);
        let mut out = Vec::with_capacity(data.schema().len());
        for j in 0..data.schema().len() {
            let mut drop = 0.0;
            for _ in 0..PERMUTATION_REPEATS {
                let mut col = data.column(j);
                col.shuffle(&mut rng);
                drop += base - quality(&data.with_column(j, &col)?)?;
            }
            out.push(T::of((drop / PERMUTATION_REPEATS as f64).max(0.0)));
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(text)?;
        if model.format != MODEL_FORMAT || model.version != MODEL_VERSION {
            return Err(Error::Input(format!(
                "unsupported model file: format `{}` version {} (expected `{MODEL_FORMAT}` version {MODEL_VERSION})",
                model.format, model.version
            )));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_json(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{FeatureKind, FeatureSchema, FeatureSpec};
    use rand::Rng as _;

    fn data(n: usize, seed: u64) -> Dataset<f64> {
        let schema = FeatureSchema::new(vec![
            FeatureSpec::new("noise", FeatureKind::Continuous, ""),
            FeatureSpec::new("dir", FeatureKind::CircularDegrees, "deg"),
            FeatureSpec::new("signal", FeatureKind::Continuous, ""),
            FeatureSpec::new("month", FeatureKind::Month, ""),
        ])
        .unwrap();
        let mut rng = random::rng(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..n {
            let s: f64 = rng.random_range(-1.0..1.0);
            rows.push(vec![
                rng.random_range(-1.0..1.0),
                rng.random_range(0.0..360.0),
                s,
                rng.random_range(1..=12) as f64,
            ]);
            labels.push(u8::from(s > 0.0));
        }
        Dataset::from_rows(schema, rows, labels).unwrap()
    }

    fn fast() -> ModelParams {
        ModelParams {
            mlp: MlpParams {
                max_epochs: 30,
                ..MlpParams::default()
            },
            forest: ForestParams {
                n_trees: 20,
                ..ForestParams::default()
            },
            ..ModelParams::default()
        }
    }

    #[test]
    fn every_model_scores_in_unit_interval() {
        let train = data(200, 1);
        let test = data(80, 2);
        for kind in ModelKind::ALL {
            let m = train_model(kind, &train, Encoding::Raw, &[], &fast(), 3).unwrap();
            let p = m.predict(&test).unwrap();
            assert_eq!(p.scores.len(), 80);
            assert!(p.scores.iter().all(|s| (0.0..=1.0).contains(s)), "{kind}");
            let empty = m.predict(&test.select(&[])).unwrap();
            assert!(empty.scores.is_empty() && empty.labels.is_empty());
        }
    }

    #[test]
    fn planted_signal_ranks_first() {
        let train = data(300, 4);
        let valid = data(150, 5);
        for kind in ModelKind::ALL {
            if kind == ModelKind::Ocsvm {
                continue;
            }
            let m = train_model(kind, &train, Encoding::Raw, &[], &fast(), 6).unwrap();
            let imp = m.feature_importance(Some(&valid), 7).unwrap();
            let top = (0..4)
                .max_by(|&a, &b| imp[a].partial_cmp(&imp[b]).unwrap())
                .unwrap();
            assert_eq!(top, 2, "{kind}: {imp:?}");
            assert!((imp.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn schema_mismatch_is_a_contract_error() {
        let m = train_model(
            ModelKind::Boost,
            &data(100, 1),
            Encoding::Raw,
            &[],
            &fast(),
            0,
        )
        .unwrap();
        let other = Dataset::from_rows(
            FeatureSchema::new(vec![FeatureSpec::new("z", FeatureKind::Continuous, "")]).unwrap(),
            vec![vec![1.0]],
            vec![0],
        )
        .unwrap();
        assert!(matches!(m.predict(&other), Err(Error::Contract(_))));
        assert!(matches!(m.feature_importance(None, 0), Ok(_)));
        let mlp =
            train_model(ModelKind::Mlp, &data(50, 1), Encoding::Raw, &[], &fast(), 0).unwrap();
        assert!(mlp.feature_importance(None, 0).is_err());
    }

    #[test]
    fn json_round_trip() {
        let d = data(120, 8);
        for kind in ModelKind::ALL {
            let m = train_model(kind, &d, Encoding::Raw, &[], &fast(), 1).unwrap();
            let back = TrainedModel::<f64>::from_json(&m.to_json().unwrap()).unwrap();
            assert_eq!(back.predict(&d).unwrap(), m.predict(&d).unwrap(), "{kind}");
        }
        let bad = r#"{"format":"other","version":1}"#;
        assert!(TrainedModel::<f64>::from_json(bad).is_err());
    }

    #[test]
    fn single_class_rejected() {
        let d = data(50, 1).with_label(1);
        assert!(matches!(
            train_model(ModelKind::Forest, &d, Encoding::Raw, &[], &fast(), 0),
            Err(Error::Input(_))
        ));
        assert!(train_model(ModelKind::Ocsvm, &d, Encoding::Raw, &[], &fast(), 0).is_ok());
    }
}
