//! Property tests for cross-module invariants.

use proptest::prelude::*;
use stinger::analysis::{circular_histogram, linear_histogram, pca_fit, point_biserial};
use stinger::augment::{
    fit_copula_negative_model, random_undersample, sample_synthetic_negatives, smote_nc,
    SmoteParams,
};
use stinger::classify::{fit_boost, fit_forest, BoostParams, ForestParams};
use stinger::eval::{accuracy, confusion_matrix, f1, precision, recall, roc_auc};
use stinger::experiment::run_seed;
use stinger::schema::summarize;
use stinger::stats::pearson;
use stinger::{generate_fixture, Dataset64, FixtureSpec, Matrix};

fn fixture(n: usize, prevalence: f64, seed: u64) -> Dataset64 {
    generate_fixture(&FixtureSpec {
        n,
        prevalence,
        overlap: 0.5,
        seed,
    })
    .unwrap()
}

fn labelled_scores() -> impl Strategy<Value = (Vec<u8>, Vec<f64>, Vec<u8>)> {
    (2usize..120).prop_flat_map(|n| {
        (
            proptest::collection::vec(0u8..2, n),
            // few distinct values so ties are common
            proptest::collection::vec((0u8..12).prop_map(|v| v as f64 / 11.0), n),
            proptest::collection::vec(0u8..2, n),
        )
    })
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix<f64>> {
    proptest::collection::vec(-5.0f64..5.0, rows * cols)
        .prop_map(move |v| Matrix::from_vec(rows, cols, v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn metrics_match_recount((actual, _, predicted) in labelled_scores()) {
        let cm = confusion_matrix(&actual, &predicted).unwrap();
        let count = |a: u8, p: u8| actual.iter().zip(&predicted).filter(|(&x, &y)| x == a && y == p).count();
        let (tp, tn, fp, fn_) = (count(1, 1), count(0, 0), count(0, 1), count(1, 0));
        prop_assert_eq!((cm.tp, cm.tn, cm.fp, cm.fn_), (tp, tn, fp, fn_));
        let div = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        prop_assert_eq!(accuracy(&cm), (tp + tn) as f64 / actual.len() as f64);
        prop_assert_eq!(precision(&cm), div(tp, tp + fp));
        prop_assert_eq!(recall(&cm), div(tp, tp + fn_));
        let (p, r) = (precision(&cm), recall(&cm));
        let f = f1(&cm);
        if p > 0.0 && r > 0.0 {
            prop_assert!(f <= 2.0 * p.min(r) + 1e-15);
            prop_assert!(f >= p.min(r) - 1e-15 && f <= p.max(r) + 1e-15);
        }
    }

    #[test]
    fn auc_is_normalised_mann_whitney((actual, scores, _) in labelled_scores()) {
        let pos: Vec<f64> = scores.iter().zip(&actual).filter(|(_, &a)| a == 1).map(|(s, _)| *s).collect();
        let neg: Vec<f64> = scores.iter().zip(&actual).filter(|(_, &a)| a == 0).map(|(s, _)| *s).collect();
        let got = roc_auc(&actual, &scores);
        if pos.is_empty() || neg.is_empty() {
            prop_assert!(got.is_none());
        } else {
            let mut u = 0.0;
            for p in &pos {
                for n in &neg {
                    u += if p > n { 1.0 } else if p == n { 0.5 } else { 0.0 };
                }
            }
            let oracle = u / (pos.len() * neg.len()) as f64;
            prop_assert!((got.unwrap() - oracle).abs() < 1e-9);
        }
    }

    #[test]
    fn summary_counts_add_up(seed in 0u64..1000, n in 20usize..300) {
        let data = fixture(n, 0.2, seed);
        let s = summarize(&data);
        let mut total = 0;
        for b in &s.beaches {
            let rows = data.meta().iter().filter(|m| m.beach.as_deref() == Some(b.beach.as_str())).count();
            prop_assert_eq!(b.presence + b.absence, rows);
            total += rows;
        }
        prop_assert_eq!(total, data.len());
        prop_assert_eq!(s.overall.presence + s.overall.absence, data.len());
    }

    #[test]
    fn undersampling_keeps_minority_without_repeats(seed in 0u64..10_000, n in 30usize..300) {
        let data = fixture(n, 0.15, seed ^ 0xabc);
        let out = random_undersample(&data, seed).unwrap();
        let minority = data.count_label(1);
        prop_assert_eq!(out.count_label(1), minority);
        prop_assert_eq!(out.count_label(0), minority);
        let mut originals = data.with_label(1).rows().to_vec();
        let mut kept = out.with_label(1).rows().to_vec();
        originals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        kept.sort_by(|a, b| a.partial_cmp(b).unwrap());
        prop_assert_eq!(originals, kept);
        // continuous draws make rows unique, so a repeated row means a repeated index
        let mut neg = out.with_label(0).rows().to_vec();
        neg.sort_by(|a, b| a.partial_cmp(b).unwrap());
        neg.dedup();
        prop_assert_eq!(neg.len(), minority);
    }

    #[test]
    fn augmentation_is_pure(seed in 0u64..1000) {
        let data = fixture(200, 0.2, 7);
        let params = SmoteParams { k_neighbors: 5, seed };
        prop_assert_eq!(smote_nc(&data, &params).unwrap(), smote_nc(&data, &params).unwrap());
        prop_assert_eq!(random_undersample(&data, seed).unwrap(), random_undersample(&data, seed).unwrap());
        let model = fit_copula_negative_model(&data.with_label(0)).unwrap();
        prop_assert_eq!(sample_synthetic_negatives(&model, 50, seed), sample_synthetic_negatives(&model, 50, seed));
    }

    #[test]
    fn training_is_seed_deterministic(seed in 0u64..1000, x in matrix(60, 3)) {
        let y: Vec<u8> = x.iter_rows().map(|r| u8::from(r[0] + r[1] > 0.0)).collect();
        prop_assume!(y.contains(&0) && y.contains(&1));
        let fp = ForestParams { n_trees: 5, seed, ..ForestParams::default() };
        prop_assert_eq!(fit_forest(&x, &y, &fp).unwrap(), fit_forest(&x, &y, &fp).unwrap());
        let bp = BoostParams { n_rounds: 10, seed, ..BoostParams::default() };
        let a = fit_boost(&x, &y, &bp).unwrap();
        prop_assert_eq!(&a, &fit_boost(&x, &y, &bp).unwrap());
    }

    #[test]
    fn boosting_loss_never_increases(x in matrix(50, 2), flips in proptest::collection::vec(0u8..2, 50)) {
        let y: Vec<u8> = x.iter_rows().zip(&flips).map(|(r, f)| u8::from(r[0] > 0.0) ^ (f & u8::from(r[1] > 3.0))).collect();
        prop_assume!(y.contains(&0) && y.contains(&1));
        let b = fit_boost(&x, &y, &BoostParams::default()).unwrap();
        for w in b.loss_history.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn pca_axes_orthonormal_and_sorted(x in matrix(25, 4)) {
        let m = pca_fit(&x, 4).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let dot: f64 = m.axes.row(i).iter().zip(m.axes.row(j)).map(|(a, b)| a * b).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                prop_assert!((dot - expect).abs() < 1e-9);
            }
        }
        for w in m.explained_variance.windows(2) {
            prop_assert!(w[0] >= w[1]);
        }
        let explained: f64 = m.explained_variance.iter().sum();
        prop_assert!(explained <= m.total_variance + 1e-8);
        prop_assert_eq!(m.clone(), pca_fit(&x, 4).unwrap());
    }

    #[test]
    fn point_biserial_is_pearson(labels in proptest::collection::vec(0u8..2, 3..80), seed in 0u64..100) {
        let values: Vec<f64> = labels.iter().enumerate().map(|(i, &l)| ((i as u64 * 7919 + seed) % 101) as f64 + l as f64).collect();
        let as_float: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
        match (point_biserial(&labels, &values), pearson(&as_float, &values)) {
            (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-12),
            (a, b) => prop_assert_eq!(a.is_none(), b.is_none()),
        }
    }

    #[test]
    fn histograms_conserve_counts(values in proptest::collection::vec(-1e3f64..1e3, 1..200), bins in 1usize..40) {
        prop_assert_eq!(linear_histogram(&values, bins).unwrap().total(), values.len());
        prop_assert_eq!(circular_histogram(&values, bins).unwrap().total(), values.len());
    }

    #[test]
    fn run_seeds_are_pure(master in any::<u64>(), run in 1usize..1000) {
        prop_assert_eq!(run_seed(master, run), run_seed(master, run));
        prop_assert_eq!(run_seed(master, run), master.wrapping_add(run as u64));
    }
}
