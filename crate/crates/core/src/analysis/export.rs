//! Delimited plot-data files, one header line each.

use std::path::Path;

use crate::error::Result;
use crate::eval::CurvePoint;
use crate::matrix::Matrix;
use crate::scalar::Scalar;

use super::describe::Histogram;

/// `<artifact>__<strategy>__<model>.csv`
pub fn plot_file_name(artifact: &str, strategy: &str, model: &str) -> String {
    format!("{artifact}__{strategy}__{model}.csv")
}

fn fmt_opt<T: Scalar>(v: Option<T>) -> String {
    v.map_or_else(|| "nan".to_string(), |x| x.to_string())
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| crate::error::Error::io(dir, e))?;
    }
    Ok(csv::Writer::from_path(path)?)
}

/// Linear histogram as (bin_center, density).
pub fn write_density<T: Scalar>(path: &Path, hist: &Histogram<T>) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["bin_center", "density"])?;
    for (c, d) in hist.centers().iter().zip(hist.density()) {
        w.write_record([c.to_string(), d.to_string()])?;
    }
    Ok(w.flush().map_err(|e| crate::error::Error::io(path, e))?)
}

/// Circular histogram as (bin_center_deg, count).
pub fn write_circular<T: Scalar>(path: &Path, hist: &Histogram<T>) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["bin_center_deg", "count"])?;
    for (c, n) in hist.centers().iter().zip(&hist.counts) {
        w.write_record([c.to_string(), n.to_string()])?;
    }
    Ok(w.flush().map_err(|e| crate::error::Error::io(path, e))?)
}

/// PCA scores as (pc1, pc2, class).
pub fn write_scatter<T: Scalar>(path: &Path, scores: &Matrix<T>, labels: &[u8]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["pc1", "pc2", "class"])?;
    for (r, l) in scores.iter_rows().zip(labels) {
        w.write_record([
            r[0].to_string(),
            r.get(1).copied().unwrap_or_default().to_string(),
            l.to_string(),
        ])?;
    }
    Ok(w.flush().map_err(|e| crate::error::Error::io(path, e))?)
}

/// ROC (`fpr`, `tpr`) or PR (`recall`, `precision`) points.
pub fn write_curve(path: &Path, x_name: &str, y_name: &str, points: &[CurvePoint]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record([x_name, y_name, "threshold"])?;
    for p in points {
        w.write_record([p.x.to_string(), p.y.to_string(), p.threshold.to_string()])?;
    }
    Ok(w.flush().map_err(|e| crate::error::Error::io(path, e))?)
}

pub fn write_importance<T: Scalar>(path: &Path, names: &[String], scores: &[T]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["feature", "score"])?;
    for (n, s) in names.iter().zip(scores) {
        w.write_record([n.clone(), s.to_string()])?;
    }
    Ok(w.flush().map_err(|e| crate::error::Error::io(path, e))?)
}

/// Square correlation table; undefined entries are written as `nan`.
pub fn write_correlation<T: Scalar>(
    path: &Path,
    names: &[String],
    matrix: &[Vec<Option<T>>],
) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["feature".to_string()];
    header.extend(names.iter().cloned());
    w.write_record(&header)?;
    for (n, row) in names.iter().zip(matrix) {
        let mut rec = vec![n.clone()];
        rec.extend(row.iter().map(|&v| fmt_opt(v)));
        w.write_record(&rec)?;
    }
    Ok(w.flush().map_err(|e| crate::error::Error::io(path, e))?)
}

/// Raw feature columns plus class, for pair plots.
pub fn write_pairs<T: Scalar>(
    path: &Path,
    names: &[String],
    columns: &[Vec<T>],
    labels: &[u8],
) -> Result<()> {
    let mut w = writer(path)?;
    let mut header: Vec<String> = names.to_vec();
    header.push("class".into());
    w.write_record(&header)?;
    for (i, l) in labels.iter().enumerate() {
        let mut rec: Vec<String> = columns.iter().map(|c| c[i].to_string()).collect();
        rec.push(l.to_string());
        w.write_record(&rec)?;
    }
    Ok(w.flush().map_err(|e| crate::error::Error::io(path, e))?)
}
