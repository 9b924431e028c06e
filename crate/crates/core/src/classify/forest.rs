//! Random forest of pruned CART trees grown on the full training set.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{DecisionTree, TreeParams};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::random;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    pub bootstrap: bool,
    pub max_depth: usize,
    pub min_samples_split: usize,
    /// Features per split; `None` means `ceil(log2 d)`.
    pub max_features: Option<usize>,
    pub min_samples_leaf: usize,
    pub max_leaf_nodes: Option<usize>,
    pub ccp_alpha: f64,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 150,
            bootstrap: false,
            max_depth: 7,
            min_samples_split: 10,
            max_features: None,
            min_samples_leaf: 2,
            max_leaf_nodes: Some(20),
            ccp_alpha: 0.01,
            seed: 0,
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 || self.max_depth == 0 {
            return Err(Error::Parameter(
                "forest needs at least one tree of depth >= 1".into(),
            ));
        }
        if self.min_samples_leaf == 0 || self.min_samples_leaf > self.min_samples_split {
            return Err(Error::Parameter(
                "min_samples_leaf must be in 1..=min_samples_split".into(),
            ));
        }
        if self.bootstrap {
            return Err(Error::Parameter(
                "bootstrap sampling is not supported".into(),
            ));
        }
        if !(self.ccp_alpha >= 0.0) {
            return Err(Error::Parameter("ccp_alpha must be >= 0".into()));
        }
        Ok(())
    }

    pub fn tree_params(&self, d: usize) -> TreeParams {
        let log2 = (d.max(1) as f64).log2().ceil().max(1.0) as usize;
        TreeParams {
            max_depth: self.max_depth,
            min_samples_split: self.min_samples_split,
            min_samples_leaf: self.min_samples_leaf,
            max_leaf_nodes: self.max_leaf_nodes,
            max_features: Some(self.max_features.unwrap_or(log2).min(d.max(1))),
            ccp_alpha: self.ccp_alpha,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Forest<T> {
    pub trees: Vec<DecisionTree<T>>,
    n_features: usize,
}

pub fn fit_forest<T: Scalar>(x: &Matrix<T>, y: &[u8], params: &ForestParams) -> Result<Forest<T>> {
    params.validate()?;
    let tp = params.tree_params(x.cols());
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            DecisionTree::fit(
                x,
                y,
                &tp,
                &mut random::rng(random::derive_seed(params.seed, t as u64)),
            )
        })
        .collect();
    Ok(Forest {
        trees,
        n_features: x.cols(),
    })
}

impl<T: Scalar> Forest<T> {
    /// Mean of per-tree leaf presence frequencies.
    pub fn scores(&self, x: &Matrix<T>) -> Vec<T> {
        let n = T::of_usize(self.trees.len());
        x.iter_rows()
            .map(|r| {
                self.trees
                    .iter()
                    .fold(T::zero(), |a, t| a + t.leaf(r).presence())
                    / n
            })
            .collect()
    }

    /// Majority vote of per-tree labels; a tied vote goes to presence.
    pub fn labels(&self, x: &Matrix<T>) -> Vec<u8> {
        x.iter_rows()
            .map(|r| {
                let votes = self
                    .trees
                    .iter()
                    .filter(|t| t.leaf(r).presence() >= T::of(0.5))
                    .count();
                u8::from(2 * votes >= self.trees.len())
            })
            .collect()
    }

    /// Gini importance per encoded column: normalised within each tree, then averaged.
    pub fn importance(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.n_features];
        for t in &self.trees {
            let dec = t.impurity_decrease(self.n_features);
            let total = dec.iter().fold(T::zero(), |a, &v| a + v);
            if total > T::zero() {
                for (o, v) in out.iter_mut().zip(dec) {
                    *o = *o + v / total;
                }
            }
        }
        let total = out.iter().fold(T::zero(), |a, &v| a + v);
        if total > T::zero() {
            out.iter_mut().for_each(|v| *v = *v / total);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    fn planted(n: usize, d: usize, signal: usize, seed: u64) -> (Matrix<f64>, Vec<u8>) {
        let mut rng = random::rng(seed);
        let x = Matrix::from_vec(
            n,
            d,
            (0..n * d).map(|_| rng.random_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let y = (0..n).map(|i| u8::from(x[(i, signal)] > 0.0)).collect();
        (x, y)
    }

    #[test]
    fn single_full_tree_equals_cart() {
        let (x, y) = planted(300, 4, 2, 1);
        let params = ForestParams {
            n_trees: 1,
            max_features: Some(4),
            ccp_alpha: 0.0,
            seed: 9,
            ..ForestParams::default()
        };
        let forest = fit_forest(&x, &y, &params).unwrap();
        let cart = DecisionTree::fit(&x, &y, &params.tree_params(4), &mut random::rng(12345));
        for r in x.iter_rows() {
            assert_eq!(forest.trees[0].leaf(r).presence(), cart.leaf(r).presence());
        }
    }

    #[test]
    fn infinite_alpha_gives_prior() {
        let (x, y) = planted(100, 3, 0, 2);
        let params = ForestParams {
            n_trees: 5,
            ccp_alpha: f64::INFINITY,
            ..ForestParams::default()
        };
        let f = fit_forest(&x, &y, &params).unwrap();
        let prior = y.iter().filter(|&&v| v == 1).count() as f64 / 100.0;
        assert!(f.scores(&x).iter().all(|&s| (s - prior).abs() < 1e-12));
    }

    #[test]
    fn planted_feature_ranks_first() {
        let (x, y) = planted(400, 5, 3, 3);
        let f = fit_forest(
            &x,
            &y,
            &ForestParams {
                n_trees: 30,
                ..ForestParams::default()
            },
        )
        .unwrap();
        let imp = f.importance();
        let top = (0..5)
            .max_by(|&a, &b| imp[a].partial_cmp(&imp[b]).unwrap())
            .unwrap();
        assert_eq!(top, 3);
        assert!((imp.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn constant_column_has_no_importance() {
        let (mut x, y) = planted(200, 3, 1, 4);
        for i in 0..200 {
            x[(i, 0)] = 1.0;
        }
        let f = fit_forest(
            &x,
            &y,
            &ForestParams {
                n_trees: 20,
                ..ForestParams::default()
            },
        )
        .unwrap();
        assert_eq!(f.importance()[0], 0.0);
    }

    #[test]
    fn seeded() {
        let (x, y) = planted(150, 4, 0, 5);
        let p = ForestParams {
            n_trees: 10,
            seed: 3,
            ..ForestParams::default()
        };
        assert_eq!(
            fit_forest(&x, &y, &p).unwrap(),
            fit_forest(&x, &y, &p).unwrap()
        );
    }

    #[test]
    fn parameter_checks() {
        let bad = ForestParams {
            min_samples_leaf: 20,
            ..ForestParams::default()
        };
        assert!(bad.validate().is_err());
        assert_eq!(
            ForestParams::default().tree_params(19).max_features,
            Some(5)
        );
    }
}
