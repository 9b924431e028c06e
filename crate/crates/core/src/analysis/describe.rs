use std::collections::BTreeMap;

use chrono::Datelike;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::schema::{wrap_degrees, Dataset};
use crate::stats::pearson;

pub const DEFAULT_LINEAR_BINS: usize = 30;
pub const DEFAULT_CIRCULAR_BINS: usize = 16;

/// Pairwise Pearson correlations; `None` where a column has zero variance.
pub fn pearson_matrix<T: Scalar>(columns: &[Vec<T>]) -> Vec<Vec<Option<T>>> {
    let m = columns.len();
    let mut out = vec![vec![None; m]; m];
    for i in 0..m {
        for j in i..m {
            let r = if i == j {
                pearson(&columns[i], &columns[i]).map(|_| T::one())
            } else {
                pearson(&columns[i], &columns[j])
            };
            out[i][j] = r;
            out[j][i] = r;
        }
    }
    out
}

/// Point-biserial correlation `(m1 - m0) / s * sqrt(p q)` with the population SD.
pub fn point_biserial<T: Scalar>(binary: &[u8], values: &[T]) -> Option<T> {
    if binary.len() != values.len() || values.is_empty() {
        return None;
    }
    let n = T::of_usize(values.len());
    let (mut s1, mut n1, mut s0, mut n0) = (T::zero(), 0usize, T::zero(), 0usize);
    for (&b, &v) in binary.iter().zip(values) {
        if b == 1 {
            s1 = s1 + v;
            n1 += 1;
        } else {
            s0 = s0 + v;
            n0 += 1;
        }
    }
    if n1 == 0 || n0 == 0 {
        return None;
    }
    let mean = (s1 + s0) / n;
    let var = values
        .iter()
        .fold(T::zero(), |a, &v| a + (v - mean) * (v - mean))
        / n;
    if var <= T::zero() {
        return None;
    }
    let (p, q) = (T::of_usize(n1) / n, T::of_usize(n0) / n);
    Some((s1 / T::of_usize(n1) - s0 / T::of_usize(n0)) / var.sqrt() * (p * q).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Histogram<T: Scalar> {
    pub edges: Vec<T>,
    pub counts: Vec<usize>,
}

impl<T: Scalar> Histogram<T> {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn centers(&self) -> Vec<T> {
        self.edges
            .windows(2)
            .map(|w| (w[0] + w[1]) / T::of(2.0))
            .collect()
    }

    /// Count / (total * width), so that density times width sums to 1.
    pub fn density(&self) -> Vec<T> {
        let n = T::of_usize(self.total().max(1));
        self.counts
            .iter()
            .zip(self.edges.windows(2))
            .map(|(&c, w)| T::of_usize(c) / (n * (w[1] - w[0])))
            .collect()
    }
}

/// Equal-width histogram over the data range; the last bin is closed.
pub fn linear_histogram<T: Scalar>(values: &[T], bins: usize) -> Result<Histogram<T>> {
    if bins == 0 {
        return Err(Error::Parameter("histograms need at least one bin".into()));
    }
    let (mut lo, mut hi) = values
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    if values.is_empty() {
        lo = T::zero();
        hi = T::one();
    } else if lo == hi {
        lo = lo - T::of(0.5);
        hi = hi + T::of(0.5);
    }
    let width = (hi - lo) / T::of_usize(bins);
    let mut edges: Vec<T> = (0..bins).map(|k| lo + width * T::of_usize(k)).collect();
    edges.push(hi);
    let mut counts = vec![0; bins];
    for &v in values {
        let k = ((v - lo) / width)
            .floor()
            .to_usize()
            .unwrap_or(0)
            .min(bins - 1);
        counts[k] += 1;
    }
    Ok(Histogram { edges, counts })
}

/// Counts per equal angular bin, starting at 0 degrees.
pub fn circular_histogram<T: Scalar>(angles: &[T], bins: usize) -> Result<Histogram<T>> {
    if bins == 0 {
        return Err(Error::Parameter("histograms need at least one bin".into()));
    }
    let width = T::of(360.0) / T::of_usize(bins);
    let edges = (0..=bins).map(|k| width * T::of_usize(k)).collect();
    let mut counts = vec![0; bins];
    for &a in angles {
        let k = (wrap_degrees(a) / width)
            .floor()
            .to_usize()
            .unwrap_or(0)
            .min(bins - 1);
        counts[k] += 1;
    }
    Ok(Histogram { edges, counts })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonthlyCounts {
    /// Presence rows per calendar month, January first.
    pub months: [usize; 12],
    /// Presence rows per (beach, year) for rows carrying both.
    pub by_beach_year: BTreeMap<String, BTreeMap<i32, usize>>,
}

pub fn monthly_presence_counts<T: Scalar>(data: &Dataset<T>) -> Result<MonthlyCounts> {
    let month = data
        .schema()
        .month_index()
        .ok_or_else(|| Error::Input("dataset has no month feature".into()))?;
    let mut months = [0; 12];
    let mut by_beach_year: BTreeMap<String, BTreeMap<i32, usize>> = BTreeMap::new();
    for ((row, &label), meta) in data.rows().iter().zip(data.labels()).zip(data.meta()) {
        if label != 1 {
            continue;
        }
        let m = row[month].to_usize().unwrap_or(1).clamp(1, 12);
        months[m - 1] += 1;
        if let (Some(beach), Some(date)) = (&meta.beach, meta.date) {
            *by_beach_year
                .entry(beach.clone())
                .or_default()
                .entry(date.year())
                .or_default() += 1;
        }
    }
    Ok(MonthlyCounts {
        months,
        by_beach_year,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use rand::Rng as _;

    #[test]
    fn pearson_matrix_basics() {
        let x = vec![1.0, 2.0, 4.0, 3.0];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let m = pearson_matrix(&[x, neg, vec![2.0; 4]]);
        assert_eq!(m[0][0], Some(1.0));
        assert!((m[0][1].unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(m[0][2], None);
        assert_eq!(m[2][2], None);

        let mut rng = random::rng(3);
        let a: Vec<f64> = (0..5000).map(|_| rng.random()).collect();
        let b: Vec<f64> = (0..5000).map(|_| rng.random()).collect();
        assert!(pearson_matrix(&[a, b])[0][1].unwrap().abs() < 0.05);
    }

    #[test]
    fn point_biserial_is_pearson() {
        let mut rng = random::rng(4);
        let bin: Vec<u8> = (0..200).map(|_| rng.random_range(0..2)).collect();
        let x: Vec<f64> = bin
            .iter()
            .map(|&b| b as f64 + rng.random::<f64>() * 3.0)
            .collect();
        let coded: Vec<f64> = bin.iter().map(|&b| b as f64).collect();
        let r = point_biserial(&bin, &x).unwrap();
        assert!((r - pearson(&coded, &x).unwrap()).abs() < 1e-12);
        assert_eq!(
            point_biserial(&[1, 0, 1, 0], &[0.0, 0.0, 1.0, 1.0]),
            Some(0.0)
        );
        assert!(
            (point_biserial(&[1, 1, 0, 0], &[1.0f64, 1.0, 0.0, 0.0]).unwrap() - 1.0).abs() < 1e-12
        );
        assert_eq!(point_biserial(&[1, 1], &[1.0, 2.0]), None);
    }

    #[test]
    fn circular_bins() {
        let h = circular_histogram(&[0.0f64; 7], 16).unwrap();
        assert_eq!(h.counts[0], 7);
        let grid: Vec<f64> = (0..360).map(|a| a as f64).collect();
        let h = circular_histogram(&grid, 16).unwrap();
        assert!(h.counts.iter().all(|&c| c == 22 || c == 23));
        assert_eq!(h.total(), 360);
    }

    #[test]
    fn february_only() {
        use crate::schema::{FeatureKind, FeatureSchema, FeatureSpec, RowMeta};
        let schema =
            FeatureSchema::new(vec![FeatureSpec::new("month", FeatureKind::Month, "")]).unwrap();
        let date = chrono::NaiveDate::from_ymd_opt(2019, 2, 3);
        let meta = |b: &str| RowMeta {
            beach: Some(b.to_string()),
            date,
            origin: crate::schema::Origin::Real,
        };
        let d = Dataset::new(
            schema,
            vec![vec![2.0], vec![2.0], vec![7.0], vec![2.0]],
            vec![1, 1, 0, 1],
            vec![meta("A"), meta("B"), meta("A"), meta("A")],
        )
        .unwrap();
        let c = monthly_presence_counts(&d).unwrap();
        assert_eq!(c.months.iter().sum::<usize>(), 3);
        assert_eq!(c.months[1], 3);
        assert_eq!(c.by_beach_year["A"][&2019], 2);
    }

    #[test]
    fn density_integrates_to_one() {
        let mut rng = random::rng(5);
        let v: Vec<f64> = (0..999).map(|_| rng.random::<f64>() * 7.0 - 2.0).collect();
        let h = linear_histogram(&v, DEFAULT_LINEAR_BINS).unwrap();
        assert_eq!(h.total(), 999);
        let area: f64 = h
            .density()
            .iter()
            .zip(h.edges.windows(2))
            .map(|(d, w)| d * (w[1] - w[0]))
            .sum();
        assert!((area - 1.0).abs() < 1e-6);
        assert_eq!(linear_histogram(&[3.0f64; 4], 5).unwrap().total(), 4);
    }
}
