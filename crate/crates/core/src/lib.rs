//! Presence/absence modelling for marine-stinger beaching under heavy class
//! imbalance: feature ingestion, resampling and synthetic-negative
//! generation, four native classifiers, evaluation and repeated-run
//! experiments. Numeric code is generic over [`Scalar`] (`f32` or `f64`);
//! the aliases below fix the width.

pub mod analysis;
pub mod augment;
pub mod classify;
pub mod cli;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod linalg;
pub mod matrix;
pub mod nn;
pub mod random;
pub mod scalar;
pub mod schema;
pub mod stats;

pub use augment::{NegativeBackend, ResamplePlan, Strategy};
pub use classify::{train_model, ModelKind, ModelParams, TrainedModel};
pub use error::{Error, Result};
pub use eval::{evaluate, ConfusionMatrix, EvalReport};
pub use experiment::{generate_fixture, run_experiment, ExperimentConfig, FixtureSpec};
pub use matrix::Matrix;
pub use scalar::Scalar;
pub use schema::{Dataset, Encoding, FeatureKind, FeatureSchema, FeatureSpec};

pub type Dataset64 = Dataset<f64>;
pub type Dataset32 = Dataset<f32>;
pub type Matrix64 = Matrix<f64>;
pub type Matrix32 = Matrix<f32>;
pub type TrainedModel64 = TrainedModel<f64>;
pub type TrainedModel32 = TrainedModel<f32>;
