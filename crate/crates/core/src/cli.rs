//! Command-line front end. `run` returns the process exit status: 0 on
//! success, 1 for invalid input or usage, 2 when a computation fails.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;
use serde::Serialize;

use crate::analysis::{
    circular_histogram, export, linear_histogram, monthly_presence_counts, pca_fit, pca_transform,
    pearson_matrix, point_biserial, MonthlyCounts, DEFAULT_CIRCULAR_BINS, DEFAULT_LINEAR_BINS,
};
use crate::augment::{GanParams, ResamplePlan, Strategy};
use crate::classify::{train_model, ModelKind, ModelParams, TrainedModel};
use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalReport};
use crate::experiment::{
    fit_subgroup_rules, generate_fixture, run_experiment, ExperimentConfig, FixtureSpec, SEED_ENV,
};
use crate::schema::{
    load_observations, summarize, write_dataset, Dataset, Encoder, Encoding, FeatureKind,
    FeatureSchema, LoadOptions,
};

#[derive(Debug, Parser)]
#[command(
    name = "stinger",
    version,
    about = "Presence/absence modelling under class imbalance"
)]
pub struct Cli {
    /// Log progress (-v info, -vv debug); RUST_LOG takes precedence.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a raw observation CSV and write it in normalised form.
    Ingest(IngestArgs),
    /// Per-beach class counts and feature means/SDs.
    Summarize(SummarizeArgs),
    /// Rebalance a training table with one resampling strategy.
    Augment(AugmentArgs),
    /// Fit one classifier and save it as JSON.
    Train(TrainArgs),
    /// Score a table with a saved model.
    Predict(PredictArgs),
    /// Metrics for a prediction file against the true labels.
    Evaluate(EvaluateArgs),
    /// Repeated seeded runs over strategies and models from a JSON config.
    Experiment(ExperimentArgs),
    /// PCA, correlations, histograms and monthly counts as plot-ready CSV.
    Analyze(AnalyzeArgs),
    /// Write a synthetic observation table with controllable class overlap.
    Fixture(FixtureArgs),
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Observation CSV with the six feature columns and `presence`.
    #[arg(long = "in", value_name = "CSV")]
    input: PathBuf,
    /// Skip rows with empty cells instead of failing.
    #[arg(long, visible_alias = "drop-incomplete-rows")]
    drop_incomplete: bool,
}

/// Missing inputs are usage errors rather than I/O failures.
fn existing(path: &Path) -> Result<&Path> {
    if path.is_file() {
        Ok(path)
    } else {
        Err(Error::Input(format!(
            "input file {} does not exist",
            path.display()
        )))
    }
}

/// Prints to stdout; a closed pipe (`stinger ... | head`) is not an error.
fn emit(text: &str) -> Result<()> {
    use std::io::Write;
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::io("<stdout>", e)),
        _ => Ok(()),
    }
}

impl InputArgs {
    fn load(&self) -> Result<Dataset<f64>> {
        load_observations(
            existing(&self.input)?,
            &FeatureSchema::stinger(),
            LoadOptions {
                drop_incomplete_rows: self.drop_incomplete,
            },
        )
    }
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Normalised output CSV.
    #[arg(long, value_name = "CSV")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SummarizeArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Also write the summary as JSON.
    #[arg(long, value_name = "JSON")]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AugmentArgs {
    #[command(flatten)]
    input: InputArgs,
    /// none, smote-nc (or smote), undersample, synthneg-copula or synthneg-gan.
    #[arg(long)]
    strategy: Strategy,
    #[arg(long, value_name = "CSV")]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// SMOTE-NC neighbour count.
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// GAN training epochs.
    #[arg(long, default_value_t = GanParams::default().epochs)]
    gan_epochs: usize,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    input: InputArgs,
    /// mlp, forest, boost or ocsvm.
    #[arg(long)]
    model: ModelKind,
    /// Saved model JSON.
    #[arg(long, value_name = "JSON")]
    out: PathBuf,
    /// raw (standardised, sin/cos, one-hot) or subgroups (binned, compass, one-hot).
    #[arg(long, default_value = "raw", value_parser = parse_encoding)]
    encoding: Encoding,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON with optional `mlp`, `forest`, `boost` and `ocsvm` sections.
    #[arg(long, value_name = "JSON")]
    params: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Model JSON written by `train`.
    #[arg(long, value_name = "JSON")]
    model: PathBuf,
    /// Output CSV with `score` and `label` columns.
    #[arg(long, value_name = "CSV")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// CSV with `score` and `label` columns, as written by `predict`.
    #[arg(long, value_name = "CSV")]
    pred: PathBuf,
    /// CSV with a `presence` (or `label`) column, row-aligned with `--pred`.
    #[arg(long, value_name = "CSV")]
    truth: PathBuf,
    /// Metrics JSON; printed to stdout when omitted.
    #[arg(long, value_name = "JSON")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// Experiment JSON.
    #[arg(long, value_name = "JSON")]
    config: PathBuf,
    /// Master seed; overrides the config value.
    #[arg(long, env = SEED_ENV)]
    seed: Option<u64>,
    /// Concurrent runs (0 = all cores); overrides the config value.
    #[arg(long)]
    jobs: Option<usize>,
    /// Report directory; overrides the config value.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Run count; overrides the config value.
    #[arg(long)]
    runs: Option<usize>,
    /// Observation CSV to use instead of the configured data or fixture.
    #[arg(long, value_name = "CSV")]
    data: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Bins for linear histograms.
    #[arg(long, default_value_t = DEFAULT_LINEAR_BINS)]
    bins: usize,
    /// Sectors for direction histograms.
    #[arg(long, default_value_t = DEFAULT_CIRCULAR_BINS)]
    circular_bins: usize,
}

#[derive(Debug, Args)]
struct FixtureArgs {
    #[arg(long, default_value_t = FixtureSpec::default().n)]
    n: usize,
    /// Fraction of presence rows, in (0, 1).
    #[arg(long, default_value_t = FixtureSpec::default().prevalence)]
    prevalence: f64,
    /// Class separation in [0, 1]; 1 makes the classes identical.
    #[arg(long, default_value_t = FixtureSpec::default().overlap)]
    overlap: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_name = "CSV")]
    out: PathBuf,
}

fn parse_encoding(s: &str) -> std::result::Result<Encoding, String> {
    match s {
        "raw" => Ok(Encoding::Raw),
        "subgroups" => Ok(Encoding::Subgroups),
        _ => Err(format!(
            "unknown encoding `{s}` (expected raw or subgroups)"
        )),
    }
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn ingest(a: &IngestArgs) -> Result<()> {
    let data = a.input.load()?;
    write_dataset(&a.out, &data)?;
    println!(
        "{} rows ({} presence, {} absence) -> {}",
        data.len(),
        data.count_label(1),
        data.count_label(0),
        a.out.display()
    );
    Ok(())
}

fn summarize_cmd(a: &SummarizeArgs) -> Result<()> {
    let summary = summarize(&a.input.load()?);
    emit(&summary.render())?;
    if let Some(path) = &a.report {
        write_json(path, &summary)?;
    }
    Ok(())
}

fn augment(a: &AugmentArgs) -> Result<()> {
    let data = a.input.load()?;
    let plan = ResamplePlan {
        strategy: a.strategy,
        k_neighbors: a.k,
        gan: GanParams {
            epochs: a.gan_epochs,
            ..GanParams::default()
        },
        seed: a.seed,
    };
    let out = plan.apply(&data)?;
    write_dataset(&a.out, &out)?;
    println!(
        "{}: {} rows ({} presence, {} absence) -> {}",
        a.strategy,
        out.len(),
        out.count_label(1),
        out.count_label(0),
        a.out.display()
    );
    Ok(())
}

fn train(a: &TrainArgs) -> Result<()> {
    let data = a.input.load()?;
    let params: ModelParams = match &a.params {
        Some(p) => {
            let text = std::fs::read_to_string(existing(p)?).map_err(|e| Error::io(p, e))?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
        }
        None => ModelParams::default(),
    };
    let rules = match a.encoding {
        Encoding::Subgroups => fit_subgroup_rules(&data)?,
        Encoding::Raw => Vec::new(),
    };
    let model = train_model(a.model, &data, a.encoding, &rules, &params, a.seed)?;
    model.save(&a.out)?;
    println!(
        "{} trained on {} rows -> {}",
        a.model,
        data.len(),
        a.out.display()
    );
    Ok(())
}

fn predict(a: &PredictArgs) -> Result<()> {
    let model = TrainedModel::<f64>::load(existing(&a.model)?)?;
    let data = a.input.load()?;
    let p = model.predict(&data)?;
    let mut w = csv::Writer::from_path(&a.out)?;
    w.write_record(["score", "label"])?;
    for (s, l) in p.scores.iter().zip(&p.labels) {
        w.write_record([s.to_string(), l.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(&a.out, e))?;
    Ok(())
}

fn read_column(path: &Path, names: &[&str]) -> Result<Vec<String>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers = rdr.headers()?.clone();
    let idx = names
        .iter()
        .find_map(|n| headers.iter().position(|h| h == *n))
        .ok_or_else(|| {
            Error::Schema(format!(
                "{} has no `{}` column",
                path.display(),
                names.join("` or `")
            ))
        })?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        out.push(rec?.get(idx).unwrap_or("").to_string());
    }
    Ok(out)
}

fn parse_labels(path: &Path, column: &str, cells: &[String]) -> Result<Vec<u8>> {
    cells
        .iter()
        .enumerate()
        .map(|(i, c)| match c.as_str() {
            "0" => Ok(0),
            "1" => Ok(1),
            _ => Err(Error::Parse {
                row: i + 1,
                column: column.to_string(),
                message: format!("{}: `{c}` is not 0 or 1", path.display()),
            }),
        })
        .collect()
}

/// Reads a prediction/truth pair and scores it.
pub fn evaluate_files(pred: &Path, truth: &Path) -> Result<EvalReport> {
    let (pred, truth) = (existing(pred)?, existing(truth)?);
    let actual = parse_labels(
        truth,
        "presence",
        &read_column(truth, &["presence", "label"])?,
    )?;
    let predicted = parse_labels(pred, "label", &read_column(pred, &["label"])?)?;
    let scores: Vec<f64> = read_column(pred, &["score"])?
        .iter()
        .enumerate()
        .map(|(i, c)| {
            c.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    row: i + 1,
                    column: "score".into(),
                    message: format!("`{c}` is not a finite number"),
                })
        })
        .collect::<Result<_>>()?;
    if actual.len() != predicted.len() {
        return Err(Error::Input(format!(
            "{} predictions for {} truth rows",
            predicted.len(),
            actual.len()
        )));
    }
    evaluate(&actual, &scores, &predicted)
}

fn evaluate_cmd(a: &EvaluateArgs) -> Result<()> {
    let report = evaluate_files(&a.pred, &a.truth)?;
    match &a.out {
        Some(path) => write_json(path, &report),
        None => emit(&format!("{}\n", serde_json::to_string_pretty(&report)?)),
    }
}

fn experiment(a: &ExperimentArgs) -> Result<()> {
    let mut config = ExperimentConfig::load(existing(&a.config)?)?;
    if let Some(seed) = a.seed {
        config.master_seed = seed;
    }
    if let Some(jobs) = a.jobs {
        config.jobs = jobs;
    }
    if let Some(out) = &a.out {
        config.output = out.clone();
    }
    if let Some(runs) = a.runs {
        config.runs = runs;
    }
    if let Some(data) = &a.data {
        config.data = Some(existing(data)?.to_path_buf());
        config.fixture = None;
    }
    let outcome = run_experiment::<f64>(&config)?;
    for agg in &outcome.aggregates {
        let cell = |block: &Option<crate::eval::RunAggregate>, m: &str| {
            crate::eval::format_summary(block.as_ref().and_then(|b| b.get(m)))
        };
        println!(
            "{:<16} {:<7} test accuracy {} f1 {} auc {}",
            agg.strategy.name(),
            agg.model.name(),
            cell(&agg.test, "accuracy"),
            cell(&agg.test, "f1"),
            cell(&agg.test, "auc"),
        );
    }
    println!("reports in {}", outcome.output.display());
    if outcome.failures.is_empty() {
        Ok(())
    } else {
        for f in &outcome.failures {
            eprintln!(
                "run {} {}/{} failed: {}",
                f.run, f.strategy, f.model, f.error
            );
        }
        Err(Error::Data(format!(
            "{} run(s) failed",
            outcome.failures.len()
        )))
    }
}

#[derive(Serialize)]
struct AnalysisReport {
    rows: usize,
    presence: usize,
    pca_columns: Vec<String>,
    explained_variance_ratio: Vec<f64>,
    /// Loadings of the first two components, per encoded column.
    pca_axes: Vec<Vec<f64>>,
    point_biserial: BTreeMap<String, Option<f64>>,
    monthly: MonthlyCounts,
}

fn analyze(a: &AnalyzeArgs) -> Result<()> {
    let data = a.input.load()?;
    let out = &a.out;
    let file = |artifact: &str| out.join(export::plot_file_name(artifact, "data", "all"));

    let encoder = Encoder::fit(&data, Encoding::Raw, &[])?;
    let x = encoder.encode(&data)?;
    let pca = pca_fit(&x, 2.min(x.cols()))?;
    export::write_scatter(&file("pca"), &pca_transform(&pca, &x)?, data.labels())?;

    let features = data.schema().features();
    let names: Vec<String> = features.iter().map(|f| f.name.clone()).collect();
    let columns: Vec<Vec<f64>> = (0..names.len()).map(|j| data.column(j)).collect();
    export::write_correlation(&file("correlation"), &names, &pearson_matrix(&columns))?;
    export::write_pairs(&file("pairs"), &names, &columns, data.labels())?;

    let mut biserial = BTreeMap::new();
    for (j, f) in features.iter().enumerate() {
        match f.kind {
            FeatureKind::Continuous => {
                biserial.insert(f.name.clone(), point_biserial(data.labels(), &columns[j]));
                for (class, label) in [("absence", 0u8), ("presence", 1)] {
                    let part = data.with_label(label).column(j);
                    if part.is_empty() {
                        continue;
                    }
                    export::write_density(
                        &out.join(export::plot_file_name(
                            &format!("density_{}", f.name),
                            class,
                            "all",
                        )),
                        &linear_histogram(&part, a.bins)?,
                    )?;
                }
            }
            FeatureKind::CircularDegrees => {
                for (suffix, g) in [("sin", f64::sin as fn(f64) -> f64), ("cos", f64::cos)] {
                    let v: Vec<f64> = columns[j].iter().map(|d| g(d.to_radians())).collect();
                    biserial.insert(
                        format!("{}_{suffix}", f.name),
                        point_biserial(data.labels(), &v),
                    );
                }
                for (class, label) in [("absence", 0u8), ("presence", 1)] {
                    let part = data.with_label(label).column(j);
                    if part.is_empty() {
                        continue;
                    }
                    export::write_circular(
                        &out.join(export::plot_file_name(
                            &format!("circular_{}", f.name),
                            class,
                            "all",
                        )),
                        &circular_histogram(&part, a.circular_bins)?,
                    )?;
                }
            }
            _ => {}
        }
    }
    let report = AnalysisReport {
        rows: data.len(),
        presence: data.count_label(1),
        pca_columns: encoder.column_names().to_vec(),
        explained_variance_ratio: pca.explained_ratio(),
        pca_axes: pca.axes.iter_rows().map(|r| r.to_vec()).collect(),
        point_biserial: biserial,
        monthly: monthly_presence_counts(&data)?,
    };
    write_json(&out.join("analysis.json"), &report)?;
    println!("analysis of {} rows -> {}", data.len(), out.display());
    Ok(())
}

fn fixture(a: &FixtureArgs) -> Result<()> {
    let spec = FixtureSpec {
        n: a.n,
        prevalence: a.prevalence,
        overlap: a.overlap,
        seed: a.seed,
    };
    let data: Dataset<f64> = generate_fixture(&spec)?;
    write_dataset(&a.out, &data)?;
    println!(
        "{} rows ({} presence) -> {}",
        data.len(),
        data.count_label(1),
        a.out.display()
    );
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Summarize(a) => summarize_cmd(a),
        Command::Augment(a) => augment(a),
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Experiment(a) => experiment(a),
        Command::Analyze(a) => analyze(a),
        Command::Fixture(a) => fixture(a),
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_validation() {
        1
    } else {
        2
    }
}

/// Parses `argv` (program name first), runs the command and returns the exit status.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .try_init();
    match dispatch(&cli) {
        Ok(()) => {
            info!("done");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
