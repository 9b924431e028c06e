use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::fixture::generate_fixture;
use super::tables;
use crate::analysis::{
    circular_histogram, export, linear_histogram, pca_fit, pca_transform, pearson_matrix,
    DEFAULT_CIRCULAR_BINS, DEFAULT_LINEAR_BINS,
};
use crate::augment::{ResamplePlan, Strategy};
use crate::classify::{train_model, ModelKind, ModelParams};
use crate::error::{Error, Result};
use crate::eval::{aggregate_runs, evaluate, EvalReport, RunAggregate, Summary};
use crate::random::derive_seed;
use crate::scalar::Scalar;
use crate::schema::{
    fit_discretization, load_observations, split_train_test, Dataset, DiscretizationRule, Encoder,
    Encoding, FeatureKind, FeatureSchema, LoadOptions, SplitSpec, DEFAULT_BIN_LABELS,
};

/// Outcome of one (run, strategy, model) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub run: usize,
    pub seed: u64,
    pub strategy: Strategy,
    pub model: ModelKind,
    /// Rows the model was fitted on, after resampling.
    pub train_rows: usize,
    pub train_positives: usize,
    pub train: EvalReport,
    pub test: EvalReport,
    /// Normalised importance per schema feature.
    pub importance: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub run: usize,
    pub seed: u64,
    pub strategy: Strategy,
    pub model: ModelKind,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestRun {
    pub run: usize,
    pub train: EvalReport,
    pub test: EvalReport,
}

/// Mean/SD over the completed runs of one (strategy, model) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub strategy: Strategy,
    pub model: ModelKind,
    pub completed_runs: Vec<usize>,
    pub failed_runs: Vec<usize>,
    pub train: Option<RunAggregate>,
    pub test: Option<RunAggregate>,
    pub importance: BTreeMap<String, Option<Summary>>,
    /// Highest test presence F1, earliest run on ties.
    pub best: Option<BestRun>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub output: PathBuf,
    pub aggregates: Vec<Aggregate>,
    pub failures: Vec<RunFailure>,
}

impl ExperimentOutcome {
    pub fn aggregate(&self, strategy: Strategy, model: ModelKind) -> Option<&Aggregate> {
        self.aggregates
            .iter()
            .find(|a| a.strategy == strategy && a.model == model)
    }
}

pub fn run_seed(master_seed: u64, run: usize) -> u64 {
    master_seed.wrapping_add(run as u64)
}

/// The observation table an experiment works on.
pub fn load_experiment_data<T: Scalar>(config: &ExperimentConfig) -> Result<Dataset<T>> {
    match (&config.data, &config.fixture) {
        (Some(path), _) => load_observations(
            path,
            &FeatureSchema::stinger(),
            LoadOptions {
                drop_incomplete_rows: config.drop_incomplete_rows,
            },
        ),
        (None, Some(spec)) => generate_fixture(spec),
        (None, None) => Err(Error::Config(
            "one of `data` or `fixture` is required".into(),
        )),
    }
}

/// Equal-width bins for every continuous feature, fitted on the whole table.
pub fn fit_subgroup_rules<T: Scalar>(data: &Dataset<T>) -> Result<Vec<DiscretizationRule<T>>> {
    data.schema()
        .features()
        .iter()
        .enumerate()
        .filter(|(_, f)| f.kind == FeatureKind::Continuous)
        .map(|(j, f)| {
            fit_discretization(
                &f.name,
                &data.column(j),
                DEFAULT_BIN_LABELS.len(),
                &DEFAULT_BIN_LABELS,
            )
        })
        .collect()
}

fn strategy_stream(s: Strategy) -> u64 {
    10 + Strategy::ALL.iter().position(|&x| x == s).unwrap_or(0) as u64
}

fn model_stream(m: ModelKind) -> u64 {
    100 + ModelKind::ALL.iter().position(|&x| x == m).unwrap_or(0) as u64
}

struct Shared<'a, T: Scalar> {
    config: &'a ExperimentConfig,
    data: &'a Dataset<T>,
    rules: &'a [DiscretizationRule<T>],
    params: ModelParams,
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn cell_path(out: &Path, strategy: Strategy, model: ModelKind, run: usize) -> PathBuf {
    out.join(strategy.name())
        .join(model.name())
        .join(format!("run_{run}.json"))
}

fn fit_and_score<T: Scalar>(
    shared: &Shared<'_, T>,
    model: ModelKind,
    train: &Dataset<T>,
    test: &Dataset<T>,
    seed: u64,
) -> Result<(EvalReport, EvalReport, Vec<T>, usize, usize)> {
    let trained = train_model(
        model,
        train,
        shared.config.encoding,
        shared.rules,
        &shared.params,
        derive_seed(seed, model_stream(model)),
    )?;
    let fitted_on = match model {
        ModelKind::Ocsvm => train.with_label(1),
        _ => train.clone(),
    };
    let p = trained.predict(&fitted_on)?;
    let train_report = evaluate(fitted_on.labels(), &p.scores, &p.labels)?;
    let p = trained.predict(test)?;
    let test_report = evaluate(test.labels(), &p.scores, &p.labels)?;
    let importance =
        trained.feature_importance(Some(test), derive_seed(seed, 200 + model_stream(model)))?;
    Ok((
        train_report,
        test_report,
        importance,
        fitted_on.len(),
        fitted_on.count_label(1),
    ))
}

fn export_training_distributions<T: Scalar>(
    plots: &Path,
    strategy: Strategy,
    train: &Dataset<T>,
) -> Result<()> {
    for (j, f) in train.schema().features().iter().enumerate() {
        let col = train.column(j);
        match f.kind {
            FeatureKind::Continuous => {
                let name = export::plot_file_name(
                    &format!("density_{}", f.name),
                    strategy.name(),
                    "train",
                );
                export::write_density(
                    &plots.join(name),
                    &linear_histogram(&col, DEFAULT_LINEAR_BINS)?,
                )?;
            }
            FeatureKind::CircularDegrees => {
                let name = export::plot_file_name(
                    &format!("circular_{}", f.name),
                    strategy.name(),
                    "train",
                );
                export::write_circular(
                    &plots.join(name),
                    &circular_histogram(&col, DEFAULT_CIRCULAR_BINS)?,
                )?;
            }
            _ => {}
        }
    }
    Ok(())
}

/// One split and one strategy, crossed with every model. Per-run files are
/// written here; the returned cells feed the aggregation.
fn run_cell<T: Scalar>(
    shared: &Shared<'_, T>,
    run: usize,
    strategy: Strategy,
) -> Vec<std::result::Result<RunReport, RunFailure>> {
    let config = shared.config;
    let seed = run_seed(config.master_seed, run);
    let fail = |model: ModelKind, e: &Error| RunFailure {
        run,
        seed,
        strategy,
        model,
        error: e.to_string(),
    };
    let prepared = split_train_test(
        shared.data,
        &SplitSpec {
            train_fraction: config.train_fraction,
            seed,
        },
    )
    .and_then(|(train, test)| {
        let plan = ResamplePlan {
            strategy,
            k_neighbors: config.smote_k,
            gan: config.gan.clone(),
            seed: derive_seed(seed, strategy_stream(strategy)),
        };
        Ok((plan.apply(&train)?, test))
    });
    let (train, test) = match prepared {
        Ok(v) => v,
        Err(e) => {
            warn!("run {run} {strategy} failed before fitting: {e}");
            return config
                .models
                .iter()
                .map(|&m| {
                    let f = fail(m, &e);
                    let path = cell_path(&config.output, strategy, m, run);
                    if let Err(w) = write_json(&path, &f) {
                        warn!("cannot record failure in {}: {w}", path.display());
                    }
                    Err(f)
                })
                .collect();
        }
    };
    if run == 1 && config.plots {
        if let Err(e) =
            export_training_distributions(&config.output.join("plots"), strategy, &train)
        {
            warn!("distribution export for {strategy} failed: {e}");
        }
    }
    let names: Vec<String> = shared
        .data
        .schema()
        .features()
        .iter()
        .map(|f| f.name.clone())
        .collect();
    config
        .models
        .iter()
        .map(|&model| {
            let path = cell_path(&config.output, strategy, model, run);
            let outcome = fit_and_score(shared, model, &train, &test, seed).map(
                |(tr, te, imp, rows, pos)| RunReport {
                    run,
                    seed,
                    strategy,
                    model,
                    train_rows: rows,
                    train_positives: pos,
                    train: tr,
                    test: te,
                    importance: names
                        .iter()
                        .cloned()
                        .zip(imp.iter().map(|v| v.f64()))
                        .collect(),
                },
            );
            let written = match &outcome {
                Ok(r) => write_json(&path, r),
                Err(e) => write_json(&path, &fail(model, e)),
            };
            match (outcome, written) {
                (Ok(r), Ok(())) => Ok(r),
                (Err(e), _) | (Ok(_), Err(e)) => {
                    warn!("run {run} {strategy}/{model} failed: {e}");
                    Err(fail(model, &e))
                }
            }
        })
        .collect()
}

fn aggregate_pair(
    strategy: Strategy,
    model: ModelKind,
    reports: &[&RunReport],
    failures: &[&RunFailure],
) -> Result<Aggregate> {
    let (train, test) = if reports.is_empty() {
        (None, None)
    } else {
        let tr: Vec<&EvalReport> = reports.iter().map(|r| &r.train).collect();
        let te: Vec<&EvalReport> = reports.iter().map(|r| &r.test).collect();
        (Some(aggregate_runs(&tr)?), Some(aggregate_runs(&te)?))
    };
    let mut importance = BTreeMap::new();
    if let Some(first) = reports.first() {
        for name in first.importance.keys() {
            let values: Vec<f64> = reports
                .iter()
                .filter_map(|r| r.importance.get(name).copied())
                .collect();
            importance.insert(name.clone(), Summary::of(&values));
        }
    }
    let best = reports
        .iter()
        .copied()
        .reduce(|best, r| {
            if r.test.presence.f1 > best.test.presence.f1 {
                r
            } else {
                best
            }
        })
        .map(|r| BestRun {
            run: r.run,
            train: r.train.clone(),
            test: r.test.clone(),
        });
    Ok(Aggregate {
        strategy,
        model,
        completed_runs: reports.iter().map(|r| r.run).collect(),
        failed_runs: failures.iter().map(|f| f.run).collect(),
        train,
        test,
        importance,
        best,
    })
}

fn export_dataset_views<T: Scalar>(plots: &Path, data: &Dataset<T>) -> Result<()> {
    let encoder = Encoder::fit(data, Encoding::Raw, &[])?;
    let x = encoder.encode(data)?;
    let pca = pca_fit(&x, 2.min(x.cols()))?;
    export::write_scatter(
        &plots.join(export::plot_file_name("pca", "data", "all")),
        &pca_transform(&pca, &x)?,
        data.labels(),
    )?;
    let names: Vec<String> = data
        .schema()
        .features()
        .iter()
        .map(|f| f.name.clone())
        .collect();
    let columns: Vec<Vec<T>> = (0..names.len()).map(|j| data.column(j)).collect();
    export::write_correlation(
        &plots.join(export::plot_file_name("correlation", "data", "all")),
        &names,
        &pearson_matrix(&columns),
    )
}

fn export_pair_views(plots: &Path, agg: &Aggregate) -> Result<()> {
    let (s, m) = (agg.strategy.name(), agg.model.name());
    if let Some(best) = &agg.best {
        if !best.test.roc.is_empty() {
            export::write_curve(
                &plots.join(export::plot_file_name("roc", s, m)),
                "fpr",
                "tpr",
                &best.test.roc,
            )?;
            export::write_curve(
                &plots.join(export::plot_file_name("pr", s, m)),
                "recall",
                "precision",
                &best.test.pr,
            )?;
        }
    }
    let (names, scores): (Vec<String>, Vec<f64>) = agg
        .importance
        .iter()
        .map(|(n, v)| (n.clone(), v.map_or(f64::NAN, |s| s.mean)))
        .unzip();
    if !names.is_empty() {
        export::write_importance(
            &plots.join(export::plot_file_name("importance", s, m)),
            &names,
            &scores,
        )?;
    }
    Ok(())
}

/// Runs `config.runs` seeded repetitions of split, resample, fit and
/// evaluate for every (strategy, model), then writes aggregates, tables and
/// plot data under `config.output`. Failed cells are recorded and skipped.
pub fn run_experiment<T: Scalar>(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    config.validate()?;
    let data: Dataset<T> = load_experiment_data(config)?;
    if data.count_label(0) == 0 || data.count_label(1) == 0 {
        return Err(Error::Data(
            "the experiment needs both presence and absence rows".into(),
        ));
    }
    let rules = match config.encoding {
        Encoding::Subgroups => fit_subgroup_rules(&data)?,
        Encoding::Raw => Vec::new(),
    };
    let out = &config.output;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write_json(&out.join("config.json"), config)?;
    info!(
        "{} rows ({} presence), {} runs x {} strategies x {} models",
        data.len(),
        data.count_label(1),
        config.runs,
        config.strategies.len(),
        config.models.len()
    );

    let shared = Shared {
        config,
        data: &data,
        rules: &rules,
        params: config.model_params(),
    };
    let cells: Vec<(usize, Strategy)> = (1..=config.runs)
        .flat_map(|r| config.strategies.iter().map(move |&s| (r, s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {} worker threads: {e}", config.jobs)))?;
    let mut results: Vec<std::result::Result<RunReport, RunFailure>> = pool.install(|| {
        cells
            .par_iter()
            .flat_map_iter(|&(r, s)| run_cell(&shared, r, s))
            .collect()
    });
    let key = |x: &std::result::Result<RunReport, RunFailure>| match x {
        Ok(r) => (r.strategy, r.model, r.run),
        Err(f) => (f.strategy, f.model, f.run),
    };
    results.sort_by_key(key);

    let mut aggregates = Vec::new();
    for &strategy in &config.strategies {
        for &model in &config.models {
            let (ok, bad): (Vec<_>, Vec<_>) = results
                .iter()
                .filter(|x| {
                    let k = key(x);
                    k.0 == strategy && k.1 == model
                })
                .partition(|x| x.is_ok());
            let reports: Vec<&RunReport> = ok.into_iter().filter_map(|x| x.as_ref().ok()).collect();
            let failures: Vec<&RunFailure> =
                bad.into_iter().filter_map(|x| x.as_ref().err()).collect();
            let agg = aggregate_pair(strategy, model, &reports, &failures)?;
            write_json(
                &out.join(strategy.name())
                    .join(model.name())
                    .join("aggregate.json"),
                &agg,
            )?;
            aggregates.push(agg);
        }
    }
    tables::write_tables(&out.join("tables"), &aggregates)?;
    if config.plots {
        let plots = out.join("plots");
        export_dataset_views(&plots, &data)?;
        for agg in &aggregates {
            export_pair_views(&plots, agg)?;
        }
    }
    let failures: Vec<RunFailure> = results.into_iter().filter_map(|x| x.err()).collect();
    Ok(ExperimentOutcome {
        output: out.clone(),
        aggregates,
        failures,
    })
}
