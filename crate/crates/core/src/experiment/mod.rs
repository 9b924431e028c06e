//! Seeded repeated-run experiments over (strategy, model) and the synthetic fixture.

pub mod config;
pub mod fixture;
pub mod runner;
pub mod tables;

pub use config::{ExperimentConfig, SEED_ENV};
pub use fixture::{generate_fixture, FixtureSpec};
pub use runner::{
    fit_subgroup_rules, load_experiment_data, run_experiment, run_seed, Aggregate, BestRun,
    ExperimentOutcome, RunFailure, RunReport,
};
