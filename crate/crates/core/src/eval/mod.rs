//! Confusion matrices, per-class metrics, ROC/PR curves and run aggregation.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::stats::{midranks, sample_sd, total_cmp};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    /// The same counts with absence treated as the positive class.
    pub fn swapped(&self) -> Self {
        Self {
            tp: self.tn,
            tn: self.tp,
            fp: self.fn_,
            fn_: self.fp,
        }
    }
}

fn check_labels(actual: &[u8], n: usize) -> Result<()> {
    if actual.len() != n {
        return Err(Error::Input(format!(
            "{} labels but {n} predictions",
            actual.len()
        )));
    }
    if let Some(bad) = actual.iter().find(|&&v| v > 1) {
        return Err(Error::Input(format!("label {bad} is not 0 or 1")));
    }
    Ok(())
}

pub fn confusion_matrix(actual: &[u8], predicted: &[u8]) -> Result<ConfusionMatrix> {
    check_labels(actual, predicted.len())?;
    check_labels(predicted, actual.len())?;
    let mut cm = ConfusionMatrix::default();
    for (&a, &p) in actual.iter().zip(predicted) {
        match (a, p) {
            (1, 1) => cm.tp += 1,
            (0, 0) => cm.tn += 1,
            (0, 1) => cm.fp += 1,
            _ => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn precision(cm: &ConfusionMatrix) -> f64 {
    ratio(cm.tp, cm.tp + cm.fp)
}

pub fn recall(cm: &ConfusionMatrix) -> f64 {
    ratio(cm.tp, cm.tp + cm.fn_)
}

pub fn f1(cm: &ConfusionMatrix) -> f64 {
    let (p, r) = (precision(cm), recall(cm));
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn accuracy(cm: &ConfusionMatrix) -> f64 {
    ratio(cm.tp + cm.tn, cm.total())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

impl ClassMetrics {
    /// Metrics for the class counted as positive in `cm`.
    pub fn from_confusion(cm: &ConfusionMatrix) -> Self {
        Self {
            precision: precision(cm),
            recall: recall(cm),
            f1: f1(cm),
            support: cm.tp + cm.fn_,
        }
    }
}

fn class_counts(actual: &[u8]) -> (usize, usize) {
    let pos = actual.iter().filter(|&&v| v == 1).count();
    (pos, actual.len() - pos)
}

/// Area under the ROC curve from the Mann–Whitney statistic with midranks;
/// `None` when either class is missing.
pub fn roc_auc<T: Scalar>(actual: &[u8], scores: &[T]) -> Option<f64> {
    if actual.len() != scores.len() {
        return None;
    }
    let (pos, neg) = class_counts(actual);
    if pos == 0 || neg == 0 {
        return None;
    }
    let scores: Vec<f64> = scores.iter().map(|s| s.f64()).collect();
    let ranks = midranks(&scores);
    let rank_sum: f64 = ranks
        .iter()
        .zip(actual)
        .filter(|(_, &a)| a == 1)
        .map(|(r, _)| r)
        .sum();
    let u = rank_sum - (pos * (pos + 1)) as f64 / 2.0;
    Some(u / (pos as f64 * neg as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: f64,
    pub y: f64,
    /// `+inf` for the origin point of a ROC curve; written as the string `"inf"`.
    #[serde(with = "extended_float")]
    pub threshold: f64,
}

/// JSON has no infinities, so non-finite values travel as strings.
mod extended_float {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&v.to_string())
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Number(v) => Ok(v),
            Repr::Text(t) => t
                .parse()
                .map_err(|_| de::Error::custom(format!("`{t}` is not a number"))),
        }
    }
}

/// Cumulative (tp, fp) counts after admitting every score `>=` each distinct
/// threshold, from the highest score down.
fn sweep<T: Scalar>(
    actual: &[u8],
    scores: &[T],
) -> Result<(usize, usize, Vec<(f64, usize, usize)>)> {
    check_labels(actual, scores.len())?;
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Input("scores must be finite".into()));
    }
    let (pos, neg) = class_counts(actual);
    if pos == 0 || neg == 0 {
        return Err(Error::Curve(
            "curves need both classes in the evaluated set".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| total_cmp(&scores[b], &scores[a]));
    let (mut tp, mut fp) = (0, 0);
    let mut out = Vec::new();
    for (k, &i) in order.iter().enumerate() {
        if actual[i] == 1 {
            tp += 1;
        } else {
            fp += 1;
        }
        let last = k + 1 == order.len() || scores[order[k + 1]] != scores[i];
        if last {
            out.push((scores[i].f64(), tp, fp));
        }
    }
    Ok((pos, neg, out))
}

/// ROC points `(fpr, tpr)` from `(0, 0)` to `(1, 1)`.
pub fn roc_curve<T: Scalar>(actual: &[u8], scores: &[T]) -> Result<Vec<CurvePoint>> {
    let (pos, neg, steps) = sweep(actual, scores)?;
    let mut out = vec![CurvePoint {
        x: 0.0,
        y: 0.0,
        threshold: f64::INFINITY,
    }];
    out.extend(steps.into_iter().map(|(t, tp, fp)| CurvePoint {
        x: fp as f64 / neg as f64,
        y: tp as f64 / pos as f64,
        threshold: t,
    }));
    Ok(out)
}

/// Precision–recall points `(recall, precision)`, one per distinct threshold,
/// recall ascending and ending at the first threshold reaching full recall.
pub fn pr_curve<T: Scalar>(actual: &[u8], scores: &[T]) -> Result<Vec<CurvePoint>> {
    let (pos, _, steps) = sweep(actual, scores)?;
    let mut out = Vec::new();
    for (t, tp, fp) in steps {
        out.push(CurvePoint {
            x: tp as f64 / pos as f64,
            y: tp as f64 / (tp + fp) as f64,
            threshold: t,
        });
        if tp == pos {
            break;
        }
    }
    Ok(out)
}

/// Step-wise average precision: sum of precision weighted by recall increments.
pub fn average_precision<T: Scalar>(actual: &[u8], scores: &[T]) -> Result<f64> {
    let mut prev = 0.0;
    let mut ap = 0.0;
    for p in pr_curve(actual, scores)? {
        ap += (p.x - prev) * p.y;
        prev = p.x;
    }
    Ok(ap)
}

/// Everything reported for one model on one evaluated set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    pub presence: ClassMetrics,
    pub absence: ClassMetrics,
    pub auc: Option<f64>,
    pub average_precision: Option<f64>,
    pub roc: Vec<CurvePoint>,
    pub pr: Vec<CurvePoint>,
}

pub fn evaluate<T: Scalar>(actual: &[u8], scores: &[T], predicted: &[u8]) -> Result<EvalReport> {
    let cm = confusion_matrix(actual, predicted)?;
    check_labels(actual, scores.len())?;
    let two_class = {
        let (p, n) = class_counts(actual);
        p > 0 && n > 0
    };
    let (roc, pr, ap) = if two_class {
        (
            roc_curve(actual, scores)?,
            pr_curve(actual, scores)?,
            Some(average_precision(actual, scores)?),
        )
    } else {
        (Vec::new(), Vec::new(), None)
    };
    Ok(EvalReport {
        n: actual.len(),
        confusion: cm,
        accuracy: accuracy(&cm),
        presence: ClassMetrics::from_confusion(&cm),
        absence: ClassMetrics::from_confusion(&cm.swapped()),
        auc: roc_auc(actual, scores),
        average_precision: ap,
        roc,
        pr,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
    /// Runs contributing (AUC may be undefined in some).
    pub count: usize,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        Some(Self {
            mean: values.iter().sum::<f64>() / values.len() as f64,
            sd: sample_sd(values),
            count: values.len(),
        })
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3}({:.3})", self.mean, self.sd)
    }
}

/// `mean(sd)` with three decimals, or `nan(nan)` when undefined.
pub fn format_summary(s: Option<&Summary>) -> String {
    s.map_or_else(|| "nan(nan)".to_string(), Summary::to_string)
}

pub const METRIC_NAMES: [&str; 9] = [
    "accuracy",
    "f1",
    "auc",
    "presence_precision",
    "presence_recall",
    "presence_f1",
    "absence_precision",
    "absence_recall",
    "absence_f1",
];

fn metric(report: &EvalReport, name: &str) -> Option<f64> {
    Some(match name {
        "accuracy" => report.accuracy,
        "f1" | "presence_f1" => report.presence.f1,
        "auc" => return report.auc,
        "presence_precision" => report.presence.precision,
        "presence_recall" => report.presence.recall,
        "absence_precision" => report.absence.precision,
        "absence_recall" => report.absence.recall,
        "absence_f1" => report.absence.f1,
        _ => return None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunAggregate {
    pub runs: usize,
    /// Metric name to mean/SD; `None` when undefined in every run.
    pub metrics: BTreeMap<String, Option<Summary>>,
}

impl RunAggregate {
    pub fn get(&self, name: &str) -> Option<&Summary> {
        self.metrics.get(name).and_then(Option::as_ref)
    }
}

/// Mean and sample SD of every metric; `f1` is the presence-class F1.
pub fn aggregate_runs(reports: &[&EvalReport]) -> Result<RunAggregate> {
    if reports.is_empty() {
        return Err(Error::Input("cannot aggregate zero runs".into()));
    }
    let metrics = METRIC_NAMES
        .iter()
        .map(|&name| {
            let values: Vec<f64> = reports.iter().filter_map(|r| metric(r, name)).collect();
            (name.to_string(), Summary::of(&values))
        })
        .collect();
    Ok(RunAggregate {
        runs: reports.len(),
        metrics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reported_forest_counts() {
        let cm = ConfusionMatrix {
            tp: 8,
            tn: 1268,
            fp: 89,
            fn_: 39,
        };
        assert!((accuracy(&cm) - 0.9088).abs() < 1e-4);
        assert!((recall(&cm) - 0.1702).abs() < 1e-4);
        assert!((precision(&cm) - 0.0825).abs() < 1e-4);
        assert_eq!(
            precision(&ConfusionMatrix {
                tn: 5,
                fn_: 3,
                ..Default::default()
            }),
            0.0
        );
    }

    #[test]
    fn confusion_counts() {
        let cm = confusion_matrix(&[1, 0, 1, 1, 0], &[1, 1, 0, 1, 0]).unwrap();
        assert_eq!((cm.tp, cm.tn, cm.fp, cm.fn_), (2, 1, 1, 1));
        assert!(confusion_matrix(&[1, 0], &[1]).is_err());
        let cm = confusion_matrix(
            &[1, 0, 1, 0, 1, 0, 1, 0, 1, 0],
            &[1, 0, 1, 0, 1, 0, 1, 0, 1, 0],
        )
        .unwrap();
        assert_eq!((cm.fp, cm.fn_, cm.tp + cm.tn), (0, 0, 10));
    }

    #[test]
    fn auc_examples() {
        assert_eq!(roc_auc(&[1, 0, 1, 0], &[0.9, 0.8, 0.7, 0.1]), Some(0.75));
        assert_eq!(roc_auc(&[1, 1, 0], &[0.9, 0.8, 0.1]), Some(1.0));
        assert_eq!(roc_auc(&[1, 1], &[0.9, 0.8]), None);
        assert_eq!(roc_auc(&[1, 0], &[0.5, 0.5]), Some(0.5));
    }

    #[test]
    fn pr_curve_edges() {
        let perfect = pr_curve(&[1, 1, 0, 0], &[0.9, 0.8, 0.2, 0.1]).unwrap();
        assert!(perfect.iter().all(|p| p.y == 1.0));
        assert_eq!(perfect.last().unwrap().x, 1.0);
        let flat = pr_curve(&[1, 0, 0, 0], &[0.5; 4]).unwrap();
        assert_eq!(flat.len(), 1);
        assert_eq!((flat[0].x, flat[0].y), (1.0, 0.25));
        assert!(matches!(
            pr_curve(&[0, 0], &[0.1, 0.2]),
            Err(Error::Curve(_))
        ));
        let roc = roc_curve(&[1, 0, 1, 0], &[0.9, 0.8, 0.7, 0.1]).unwrap();
        assert_eq!((roc[0].x, roc[0].y), (0.0, 0.0));
        assert_eq!((roc.last().unwrap().x, roc.last().unwrap().y), (1.0, 1.0));
    }

    #[test]
    fn aggregation() {
        let mk = |acc: f64| EvalReport {
            n: 1,
            confusion: ConfusionMatrix::default(),
            accuracy: acc,
            presence: ClassMetrics::from_confusion(&ConfusionMatrix::default()),
            absence: ClassMetrics::from_confusion(&ConfusionMatrix::default()),
            auc: None,
            average_precision: None,
            roc: vec![],
            pr: vec![],
        };
        let (a, b) = (mk(0.7), mk(0.9));
        let agg = aggregate_runs(&[&a, &b]).unwrap();
        let s = agg.get("accuracy").unwrap();
        assert!((s.mean - 0.8).abs() < 1e-12);
        assert!((s.sd - 0.1414).abs() < 1e-4);
        assert!(agg.get("auc").is_none());
        assert_eq!(format_summary(agg.get("auc")), "nan(nan)");
        assert_eq!(format_summary(Some(s)), "0.800(0.141)");
        let same = aggregate_runs(&[&a, &a]).unwrap();
        assert_eq!(same.get("accuracy").unwrap().sd, 0.0);
        assert!(aggregate_runs(&[]).is_err());
    }
}
