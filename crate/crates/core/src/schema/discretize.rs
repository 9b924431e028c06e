use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_BIN_LABELS: [&str; 4] = ["Low", "Medium", "High", "Very High"];

/// Equal-width binning of one continuous feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct DiscretizationRule<T> {
    pub source: String,
    pub labels: Vec<String>,
    /// `labels.len() + 1` strictly ascending break values.
    pub edges: Vec<T>,
}

impl<T: Scalar> DiscretizationRule<T> {
    pub fn n_bins(&self) -> usize {
        self.labels.len()
    }

    /// Bin index of `value`; out-of-range values clamp into the outer bins.
    pub fn bin_index(&self, value: T) -> usize {
        let last = self.n_bins() - 1;
        (0..last)
            .find(|&i| value < self.edges[i + 1])
            .unwrap_or(last)
    }

    pub fn label(&self, value: T) -> &str {
        &self.labels[self.bin_index(value)]
    }
}

pub fn fit_discretization<T: Scalar>(
    source: &str,
    values: &[T],
    n_bins: usize,
    labels: &[&str],
) -> Result<DiscretizationRule<T>> {
    if n_bins == 0 || labels.len() != n_bins {
        return Err(Error::Parameter(format!(
            "{n_bins} bins need {n_bins} labels, got {}",
            labels.len()
        )));
    }
    if values.is_empty() {
        return Err(Error::Data(format!("no values to discretize `{source}`")));
    }
    let lo = values.iter().copied().fold(T::infinity(), T::min);
    let hi = values.iter().copied().fold(T::neg_infinity(), T::max);
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::Data(format!("non-finite values in `{source}`")));
    }
    if hi <= lo {
        return Err(Error::Data(format!(
            "`{source}` has a degenerate range (all values {lo})"
        )));
    }
    let width = (hi - lo) / T::of_usize(n_bins);
    let mut edges: Vec<T> = (0..n_bins).map(|i| lo + width * T::of_usize(i)).collect();
    edges.push(hi);
    Ok(DiscretizationRule {
        source: source.to_string(),
        labels: labels.iter().map(|s| s.to_string()).collect(),
        edges,
    })
}

pub fn apply_discretization<T: Scalar>(value: T, rule: &DiscretizationRule<T>) -> &str {
    rule.label(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sst_rule() -> DiscretizationRule<f64> {
        fit_discretization(
            "sst_c",
            &[13.638, 20.0, 26.180, 18.2],
            4,
            &DEFAULT_BIN_LABELS,
        )
        .unwrap()
    }

    #[test]
    fn sst_edges_match_reported_ranges() {
        let r = sst_rule();
        let expected = [13.638, 16.773, 19.909, 23.045, 26.180];
        for (e, x) in r.edges.iter().zip(expected) {
            assert!((e - x).abs() < 1e-3, "{e} vs {x}");
        }
    }

    #[test]
    fn sst_labels() {
        let r = sst_rule();
        assert_eq!(apply_discretization(15.0, &r), "Low");
        assert_eq!(apply_discretization(20.0, &r), "High");
        assert_eq!(apply_discretization(26.180, &r), "Very High");
        assert_eq!(apply_discretization(10.0, &r), "Low");
        assert_eq!(apply_discretization(30.0, &r), "Very High");
    }

    #[test]
    fn uniform_values() {
        let r =
            fit_discretization("x", &[0.0, 1.0, 2.0, 3.0, 4.0], 4, &DEFAULT_BIN_LABELS).unwrap();
        assert_eq!(r.edges, vec![0.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(r.bin_index(1.0), 1);
    }

    #[test]
    fn current_speed_endpoints() {
        let r = fit_discretization(
            "curr_speed_ms",
            &[0.007f32, 0.2, 0.493],
            4,
            &DEFAULT_BIN_LABELS,
        )
        .unwrap();
        assert_eq!(r.edges[0], 0.007);
        assert_eq!(r.edges[4], 0.493);
    }

    #[test]
    fn degenerate_range_rejected() {
        let r = fit_discretization("x", &[2.0, 2.0, 2.0], 4, &DEFAULT_BIN_LABELS);
        assert!(matches!(r, Err(Error::Data(_))));
        assert!(fit_discretization("x", &[1.0, 2.0], 3, &DEFAULT_BIN_LABELS).is_err());
    }

    proptest::proptest! {
        #[test]
        fn bins_partition_and_are_monotone(
            mut xs in proptest::collection::vec(-100.0f64..100.0, 2..50),
        ) {
            xs.push(xs[0] + 1.0);
            let r = fit_discretization("x", &xs, 4, &DEFAULT_BIN_LABELS).unwrap();
            for w in r.edges.windows(2) {
                proptest::prop_assert!(w[0] < w[1]);
            }
            let mut sorted = xs.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let bins: Vec<usize> = sorted.iter().map(|&x| r.bin_index(x)).collect();
            for w in bins.windows(2) {
                proptest::prop_assert!(w[0] <= w[1]);
            }
            for (&x, &b) in sorted.iter().zip(&bins) {
                proptest::prop_assert!(x >= r.edges[b] || b == 0);
                proptest::prop_assert!(x < r.edges[b + 1] || b == 3);
            }
        }
    }
}
