//! Summary tables: mean(sd) per (strategy, model) and per-class figures for the best run.

use std::path::Path;

use super::runner::Aggregate;
use crate::augment::Strategy;
use crate::error::{Error, Result};
use crate::eval::{format_summary, ClassMetrics, EvalReport, RunAggregate};

const SUMMARY_HEADER: [&str; 8] = [
    "strategy",
    "model",
    "train_accuracy",
    "train_f1",
    "train_auc",
    "test_accuracy",
    "test_f1",
    "test_auc",
];

const CLASS_HEADER: [&str; 9] = [
    "strategy",
    "model",
    "run",
    "block",
    "class",
    "precision",
    "recall",
    "f1",
    "support",
];

fn cells(agg: Option<&RunAggregate>) -> [String; 3] {
    ["accuracy", "f1", "auc"].map(|m| format_summary(agg.and_then(|a| a.get(m))))
}

fn summary_row(a: &Aggregate) -> Vec<String> {
    let mut row = vec![a.strategy.name().to_string(), a.model.name().to_string()];
    row.extend(cells(a.train.as_ref()));
    row.extend(cells(a.test.as_ref()));
    row
}

fn class_row(a: &Aggregate, run: usize, block: &str, class: &str, m: &ClassMetrics) -> Vec<String> {
    vec![
        a.strategy.name().to_string(),
        a.model.name().to_string(),
        run.to_string(),
        block.to_string(),
        class.to_string(),
        format!("{:.3}", m.precision),
        format!("{:.3}", m.recall),
        format!("{:.3}", m.f1),
        m.support.to_string(),
    ]
}

fn write(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn class_rows(aggs: &[&Aggregate]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for a in aggs {
        let Some(best) = &a.best else { continue };
        for (block, report) in [("train", &best.train), ("test", &best.test)] {
            rows.push(class_row(a, best.run, block, "absence", &report.absence));
            rows.push(class_row(a, best.run, block, "presence", &report.presence));
        }
    }
    rows
}

fn confusion_rows(aggs: &[Aggregate]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for a in aggs {
        let Some(best) = &a.best else { continue };
        let blocks: [(&str, &EvalReport); 2] = [("train", &best.train), ("test", &best.test)];
        for (block, r) in blocks {
            let c = &r.confusion;
            rows.push(vec![
                a.strategy.name().to_string(),
                a.model.name().to_string(),
                best.run.to_string(),
                block.to_string(),
                c.tn.to_string(),
                c.fp.to_string(),
                c.fn_.to_string(),
                c.tp.to_string(),
            ]);
        }
    }
    rows
}

/// `table4`/`table5` cover the unaugmented baseline, `table6`/`table7` every
/// other strategy; `confusion.csv` holds the best runs' counts.
pub fn write_tables(dir: &Path, aggregates: &[Aggregate]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (base, augmented): (Vec<&Aggregate>, Vec<&Aggregate>) = aggregates
        .iter()
        .partition(|a| a.strategy == Strategy::None);
    write(
        &dir.join("table4.csv"),
        &SUMMARY_HEADER,
        base.iter().map(|a| summary_row(a)),
    )?;
    write(
        &dir.join("table6.csv"),
        &SUMMARY_HEADER,
        augmented.iter().map(|a| summary_row(a)),
    )?;
    write(
        &dir.join("table5.csv"),
        &CLASS_HEADER,
        class_rows(&base).into_iter(),
    )?;
    write(
        &dir.join("table7.csv"),
        &CLASS_HEADER,
        class_rows(&augmented).into_iter(),
    )?;
    write(
        &dir.join("confusion.csv"),
        &["strategy", "model", "run", "block", "tn", "fp", "fn", "tp"],
        confusion_rows(aggregates).into_iter(),
    )
}
