//! Class-rebalancing strategies applied to training splits.

pub mod copula;
pub mod gan;
pub mod smote;
pub mod synthneg;
pub mod undersample;
pub mod vonmises;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use copula::{
    fit_copula_negative_model, normal_scores, sample_synthetic_negatives, CopulaNegativeModel,
};
pub use gan::{train_tabular_gan, GanParams, TabularGan};
pub use smote::{smote_nc, smote_nc_traced, SmoteParams};
pub use synthneg::{build_synthetic_negative_dataset, NegativeSampler};
pub use undersample::random_undersample;
pub use vonmises::{
    circular_mean, fit_von_mises_mixture, mean_resultant_length, sample_von_mises, MixtureFit,
    VonMisesComponent, VonMisesMixture,
};

use crate::error::{Error, Result};
use crate::random::derive_seed;
use crate::scalar::Scalar;
use crate::schema::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NegativeBackend {
    Copula,
    Gan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Strategy {
    None,
    SmoteNc,
    Undersample,
    SyntheticNegative(NegativeBackend),
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::None,
        Strategy::SmoteNc,
        Strategy::Undersample,
        Strategy::SyntheticNegative(NegativeBackend::Copula),
        Strategy::SyntheticNegative(NegativeBackend::Gan),
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::None => "none",
            Strategy::SmoteNc => "smote-nc",
            Strategy::Undersample => "undersample",
            Strategy::SyntheticNegative(NegativeBackend::Copula) => "synthneg-copula",
            Strategy::SyntheticNegative(NegativeBackend::Gan) => "synthneg-gan",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        // `smote` is accepted as shorthand
        let s = if s == "smote" { "smote-nc" } else { s };
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Strategy::ALL.iter().map(|s| s.name()).collect();
                Error::Config(format!(
                    "unknown strategy `{s}` (expected one of {})",
                    names.join(", ")
                ))
            })
    }
}

impl From<Strategy> for String {
    fn from(s: Strategy) -> String {
        s.name().to_string()
    }
}

impl TryFrom<String> for Strategy {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// A strategy with its parameters and seed.
#[derive(Debug, Clone, PartialEq)]
pub struct ResamplePlan {
    pub strategy: Strategy,
    pub k_neighbors: usize,
    pub gan: GanParams,
    pub seed: u64,
}

impl ResamplePlan {
    pub fn new(strategy: Strategy, seed: u64) -> Self {
        Self {
            strategy,
            k_neighbors: SmoteParams::default().k_neighbors,
            gan: GanParams::default(),
            seed,
        }
    }

    /// Rebalances a training split. Generators for the synthetic-negative
    /// strategies are fitted on the split's own absence rows.
    pub fn apply<T: Scalar>(&self, train: &Dataset<T>) -> Result<Dataset<T>> {
        match self.strategy {
            Strategy::None => Ok(train.clone()),
            Strategy::SmoteNc => smote_nc(
                train,
                &SmoteParams {
                    k_neighbors: self.k_neighbors,
                    seed: self.seed,
                },
            ),
            Strategy::Undersample => random_undersample(train, self.seed),
            Strategy::SyntheticNegative(backend) => {
                let negatives = train.with_label(0);
                let sampler: Box<dyn NegativeSampler<T>> = match backend {
                    NegativeBackend::Copula => Box::new(fit_copula_negative_model(&negatives)?),
                    NegativeBackend::Gan => {
                        let params = GanParams {
                            seed: derive_seed(self.seed, 1),
                            ..self.gan.clone()
                        };
                        Box::new(train_tabular_gan(&negatives, &params)?)
                    }
                };
                build_synthetic_negative_dataset(train, sampler.as_ref(), derive_seed(self.seed, 2))
            }
        }
    }
}
