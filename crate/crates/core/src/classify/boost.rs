//! Second-order gradient boosting of shallow regression trees on the log-odds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;
use crate::stats::{sigmoid, total_cmp};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoostParams {
    pub learning_rate: f64,
    pub n_rounds: usize,
    pub max_depth: usize,
    pub scale_pos_weight: f64,
    /// L2 penalty on leaf weights.
    pub lambda: f64,
    pub min_child_weight: f64,
    pub seed: u64,
}

impl Default for BoostParams {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            n_rounds: 100,
            max_depth: 2,
            scale_pos_weight: 3.0,
            lambda: 1.0,
            min_child_weight: 1.0,
            seed: 0,
        }
    }
}

impl BoostParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_rounds == 0 || self.max_depth == 0 {
            return Err(Error::Parameter(
                "boosting needs n_rounds >= 1 and max_depth >= 1".into(),
            ));
        }
        if !(self.scale_pos_weight > 0.0) || !(self.learning_rate > 0.0) || !(self.lambda >= 0.0) {
            return Err(Error::Parameter(
                "scale_pos_weight and learning_rate must be positive, lambda non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub enum RegNode<T> {
    Leaf {
        value: T,
    },
    Split {
        feature: usize,
        threshold: T,
        left: usize,
        right: usize,
        gain: T,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RegTree<T> {
    pub nodes: Vec<RegNode<T>>,
}

impl<T: Scalar> RegTree<T> {
    pub fn predict(&self, row: &[T]) -> T {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                RegNode::Leaf { value } => return *value,
                RegNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    id = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Booster<T> {
    pub base_score: T,
    pub learning_rate: T,
    pub trees: Vec<RegTree<T>>,
    /// Weighted mean log-loss before the first round and after every round.
    pub loss_history: Vec<T>,
    n_features: usize,
}

struct Ctx<'a, T> {
    x: &'a Matrix<T>,
    g: &'a [T],
    h: &'a [T],
    lambda: T,
    min_child_weight: T,
    max_depth: usize,
}

impl<T: Scalar> Ctx<'_, T> {
    fn score(&self, g: T, h: T) -> T {
        g * g / (h + self.lambda)
    }

    fn grow(&self, rows: &[usize], depth: usize, nodes: &mut Vec<RegNode<T>>) -> usize {
        let (gs, hs) = rows.iter().fold((T::zero(), T::zero()), |(a, b), &i| {
            (a + self.g[i], b + self.h[i])
        });
        let id = nodes.len();
        nodes.push(RegNode::Leaf {
            value: -gs / (hs + self.lambda),
        });
        if depth >= self.max_depth || rows.len() < 2 {
            return id;
        }
        let parent = self.score(gs, hs);
        let mut best: Option<(T, usize, T)> = None;
        let mut sorted: Vec<usize> = rows.to_vec();
        for f in 0..self.x.cols() {
            sorted.sort_by(|&a, &b| total_cmp(&self.x[(a, f)], &self.x[(b, f)]));
            let (mut gl, mut hl) = (T::zero(), T::zero());
            for k in 0..sorted.len() - 1 {
                let i = sorted[k];
                gl = gl + self.g[i];
                hl = hl + self.h[i];
                let (v, next) = (self.x[(i, f)], self.x[(sorted[k + 1], f)]);
                if v == next {
                    continue;
                }
                let (gr, hr) = (gs - gl, hs - hl);
                if hl < self.min_child_weight || hr < self.min_child_weight {
                    continue;
                }
                let gain = (self.score(gl, hl) + self.score(gr, hr) - parent) / T::of(2.0);
                if gain > T::zero() && best.as_ref().is_none_or(|b| gain > b.0) {
                    let mut threshold = (v + next) / T::of(2.0);
                    if threshold >= next {
                        threshold = v;
                    }
                    best = Some((gain, f, threshold));
                }
            }
        }
        if let Some((gain, feature, threshold)) = best {
            let (l_rows, r_rows): (Vec<usize>, Vec<usize>) = rows
                .iter()
                .partition(|&&i| self.x[(i, feature)] <= threshold);
            let left = self.grow(&l_rows, depth + 1, nodes);
            let right = self.grow(&r_rows, depth + 1, nodes);
            nodes[id] = RegNode::Split {
                feature,
                threshold,
                left,
                right,
                gain,
            };
        }
        id
    }
}

fn weighted_log_loss<T: Scalar>(f: &[T], y: &[u8], w: &[T]) -> T {
    let (mut num, mut den) = (T::zero(), T::zero());
    for ((&fi, &yi), &wi) in f.iter().zip(y).zip(w) {
        // log(1 + e^f) - y f, computed stably
        let softplus = fi.max(T::zero()) + (-fi.abs()).exp().ln_1p();
        let yf = if yi == 1 { fi } else { T::zero() };
        num = num + wi * (softplus - yf);
        den = den + wi;
    }
    num / den
}

pub fn fit_boost<T: Scalar>(x: &Matrix<T>, y: &[u8], params: &BoostParams) -> Result<Booster<T>> {
    params.validate()?;
    let spw = T::of(params.scale_pos_weight);
    let w: Vec<T> = y
        .iter()
        .map(|&v| if v == 1 { spw } else { T::one() })
        .collect();
    let pos = y
        .iter()
        .zip(&w)
        .filter(|(&v, _)| v == 1)
        .fold(T::zero(), |a, (_, &wi)| a + wi);
    let neg = y
        .iter()
        .zip(&w)
        .filter(|(&v, _)| v == 0)
        .fold(T::zero(), |a, (_, &wi)| a + wi);
    if pos <= T::zero() || neg <= T::zero() {
        return Err(Error::Strategy(
            "boosting needs both classes in the training data".into(),
        ));
    }
    let base_score = (pos / neg).ln();
    let lr = T::of(params.learning_rate);
    let mut f = vec![base_score; x.rows()];
    let mut loss_history = vec![weighted_log_loss(&f, y, &w)];
    let mut trees = Vec::with_capacity(params.n_rounds);
    let rows: Vec<usize> = (0..x.rows()).collect();
    let mut g = vec![T::zero(); x.rows()];
    let mut h = vec![T::zero(); x.rows()];
    for _ in 0..params.n_rounds {
        for i in 0..x.rows() {
            let p = sigmoid(f[i]);
            let yi = T::of(y[i] as f64);
            g[i] = w[i] * (p - yi);
            h[i] = w[i] * p * (T::one() - p);
        }
        let ctx = Ctx {
            x,
            g: &g,
            h: &h,
            lambda: T::of(params.lambda),
            min_child_weight: T::of(params.min_child_weight),
            max_depth: params.max_depth,
        };
        let mut nodes = Vec::new();
        ctx.grow(&rows, 0, &mut nodes);
        let tree = RegTree { nodes };
        for (fi, r) in f.iter_mut().zip(x.iter_rows()) {
            *fi = *fi + lr * tree.predict(r);
        }
        loss_history.push(weighted_log_loss(&f, y, &w));
        trees.push(tree);
    }
    Ok(Booster {
        base_score,
        learning_rate: lr,
        trees,
        loss_history,
        n_features: x.cols(),
    })
}

impl<T: Scalar> Booster<T> {
    pub fn margin(&self, row: &[T]) -> T {
        self.trees.iter().fold(self.base_score, |a, t| {
            a + self.learning_rate * t.predict(row)
        })
    }

    pub fn scores(&self, x: &Matrix<T>) -> Vec<T> {
        x.iter_rows().map(|r| sigmoid(self.margin(r))).collect()
    }

    /// Total split gain per encoded column, normalised to sum to 1.
    pub fn importance(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.n_features];
        for t in &self.trees {
            for n in &t.nodes {
                if let RegNode::Split { feature, gain, .. } = n {
                    out[*feature] = out[*feature] + *gain;
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
