//! CART classification tree: Gini splits, best-first growth under a leaf
//! budget, minimal cost-complexity pruning.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;
use crate::random::Rng;
use crate::scalar::Scalar;
use crate::stats::total_cmp;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_leaf_nodes: Option<usize>,
    /// Features examined per split; `None` means all.
    pub max_features: Option<usize>,
    pub ccp_alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Split<T> {
    pub feature: usize,
    pub threshold: T,
    pub left: usize,
    pub right: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Node<T> {
    pub counts: [usize; 2],
    pub impurity: T,
    pub depth: usize,
    pub split: Option<Split<T>>,
}

impl<T: Scalar> Node<T> {
    pub fn n(&self) -> usize {
        self.counts[0] + self.counts[1]
    }

    /// Fraction of presence rows in the node.
    pub fn presence(&self) -> T {
        T::of_usize(self.counts[1]) / T::of_usize(self.n().max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct DecisionTree<T> {
    pub nodes: Vec<Node<T>>,
    /// Rows the tree was grown on.
    pub n_train: usize,
}

fn gini<T: Scalar>(counts: [usize; 2]) -> T {
    let n = counts[0] + counts[1];
    if n == 0 {
        return T::zero();
    }
    let p = T::of_usize(counts[1]) / T::of_usize(n);
    T::of(2.0) * p * (T::one() - p)
}

struct Candidate<T> {
    feature: usize,
    threshold: T,
    /// `n_l * gini_l + n_r * gini_r`; smaller is better.
    score: T,
}

fn best_split<T: Scalar>(
    x: &Matrix<T>,
    y: &[u8],
    rows: &[usize],
    params: &TreeParams,
    rng: &mut Rng,
) -> Option<Candidate<T>> {
    let d = x.cols();
    let mut features: Vec<usize> = (0..d).collect();
    features.shuffle(rng);
    let budget = params.max_features.unwrap_or(d).clamp(1, d);
    let total = [
        rows.iter().filter(|&&i| y[i] == 0).count(),
        rows.iter().filter(|&&i| y[i] == 1).count(),
    ];
    let leaf = params.min_samples_leaf.max(1);
    let mut best: Option<Candidate<T>> = None;
    let mut tried = 0;
    let mut sorted: Vec<(T, u8)> = Vec::with_capacity(rows.len());
    for f in features {
        if tried >= budget {
            break;
        }
        sorted.clear();
        sorted.extend(rows.iter().map(|&i| (x[(i, f)], y[i])));
        sorted.sort_by(|a, b| total_cmp(&a.0, &b.0));
        if sorted[0].0 == sorted[sorted.len() - 1].0 {
            continue;
        }
        tried += 1;
        let mut left = [0usize; 2];
        for k in 0..sorted.len() - 1 {
            left[sorted[k].1 as usize] += 1;
            if sorted[k].0 == sorted[k + 1].0 {
                continue;
            }
            let nl = k + 1;
            let nr = sorted.len() - nl;
            if nl < leaf || nr < leaf {
                continue;
            }
            let right = [total[0] - left[0], total[1] - left[1]];
            let score = T::of_usize(nl) * gini::<T>(left) + T::of_usize(nr) * gini::<T>(right);
            let better = match &best {
                None => true,
                Some(b) => score < b.score || (score == b.score && f < b.feature),
            };
            if better {
                let mut threshold = (sorted[k].0 + sorted[k + 1].0) / T::of(2.0);
                if threshold >= sorted[k + 1].0 {
                    threshold = sorted[k].0;
                }
                best = Some(Candidate {
                    feature: f,
                    threshold,
                    score,
                });
            }
        }
    }
    best
}

impl<T: Scalar> DecisionTree<T> {
    pub fn fit(x: &Matrix<T>, y: &[u8], params: &TreeParams, rng: &mut Rng) -> Self {
        let all: Vec<usize> = (0..x.rows()).collect();
        let counts = |rows: &[usize]| {
            let ones = rows.iter().filter(|&&i| y[i] == 1).count();
            [rows.len() - ones, ones]
        };
        let mut nodes = vec![Node {
            counts: counts(&all),
            impurity: gini(counts(&all)),
            depth: 0,
            split: None,
        }];
        // (node, rows, candidate, weighted impurity decrease)
        let mut frontier: Vec<(usize, Vec<usize>, Candidate<T>, T)> = Vec::new();
        let expand = |node: &Node<T>, rows: &[usize], rng: &mut Rng| -> Option<(Candidate<T>, T)> {
            if node.depth >= params.max_depth
                || rows.len() < params.min_samples_split
                || node.impurity <= T::zero()
            {
                return None;
            }
            best_split(x, y, rows, params, rng).map(|c| {
                let gain = T::of_usize(rows.len()) * node.impurity - c.score;
                (c, gain)
            })
        };
        if let Some((c, g)) = expand(&nodes[0], &all, rng) {
            frontier.push((0, all, c, g));
        }
        let mut leaves = 1;
        let budget = params.max_leaf_nodes.unwrap_or(usize::MAX).max(2);
        while leaves < budget && !frontier.is_empty() {
            let pick = (0..frontier.len())
                .reduce(|a, b| {
                    let (fa, fb) = (&frontier[a], &frontier[b]);
                    if fb.3 > fa.3 || (fb.3 == fa.3 && fb.0 < fa.0) {
                        b
                    } else {
                        a
                    }
                })
                .expect("frontier is non-empty");
            let (id, rows, cand, _) = frontier.swap_remove(pick);
            let (l_rows, r_rows): (Vec<usize>, Vec<usize>) = rows
                .iter()
                .partition(|&&i| x[(i, cand.feature)] <= cand.threshold);
            let depth = nodes[id].depth + 1;
            let (l, r) = (nodes.len(), nodes.len() + 1);
            for part in [&l_rows, &r_rows] {
                let c = counts(part);
                nodes.push(Node {
                    counts: c,
                    impurity: gini(c),
                    depth,
                    split: None,
                });
            }
            nodes[id].split = Some(Split {
                feature: cand.feature,
                threshold: cand.threshold,
                left: l,
                right: r,
            });
            leaves += 1;
            for (child, part) in [(l, l_rows), (r, r_rows)] {
                if let Some((c, g)) = expand(&nodes[child], &part, rng) {
                    frontier.push((child, part, c, g));
                }
            }
        }
        let mut tree = DecisionTree {
            nodes,
            n_train: x.rows(),
        };
        if params.ccp_alpha > 0.0 {
            tree.prune(T::of(params.ccp_alpha));
        }
        tree
    }

    /// Weighted node risk `n_t / N * gini(t)`.
    fn risk(&self, id: usize) -> T {
        let node = &self.nodes[id];
        T::of_usize(node.n()) / T::of_usize(self.n_train.max(1)) * node.impurity
    }

    /// (subtree risk, leaf count) of the subtree rooted at `id`.
    fn subtree(&self, id: usize) -> (T, usize) {
        match &self.nodes[id].split {
            None => (self.risk(id), 1),
            Some(s) => {
                let (a, la) = self.subtree(s.left);
                let (b, lb) = self.subtree(s.right);
                (a + b, la + lb)
            }
        }
    }

    /// Minimal cost-complexity pruning: repeatedly collapses the weakest link
    /// while its effective alpha does not exceed `alpha`.
    pub fn prune(&mut self, alpha: T) {
        loop {
            let mut weakest: Option<(T, usize)> = None;
            for id in 0..self.nodes.len() {
                if self.nodes[id].split.is_none() || !self.reachable(id) {
                    continue;
                }
                let (r_sub, leaves) = self.subtree(id);
                let eff = (self.risk(id) - r_sub) / T::of_usize(leaves - 1);
                if weakest.as_ref().is_none_or(|w| eff < w.0) {
                    weakest = Some((eff, id));
                }
            }
            match weakest {
                Some((eff, id)) if eff <= alpha => self.nodes[id].split = None,
                _ => break,
            }
        }
        self.compact();
    }

    fn reachable(&self, target: usize) -> bool {
        let mut stack = vec![0];
        while let Some(id) = stack.pop() {
            if id == target {
                return true;
            }
            if let Some(s) = &self.nodes[id].split {
                stack.push(s.left);
                stack.push(s.right);
            }
        }
        false
    }

    /// Drops nodes cut off by pruning, keeping pre-order numbering.
    fn compact(&mut self) {
        let mut out = Vec::new();
        fn walk<T: Scalar>(nodes: &[Node<T>], id: usize, out: &mut Vec<Node<T>>) -> usize {
            let at = out.len();
            out.push(nodes[id].clone());
            if let Some(s) = &nodes[id].split {
                let l = walk(nodes, s.left, out);
                let r = walk(nodes, s.right, out);
                let split = out[at].split.as_mut().expect("copied with split");
                split.left = l;
                split.right = r;
            }
            at
        }
        walk(&self.nodes, 0, &mut out);
        self.nodes = out;
    }

    pub fn leaf(&self, row: &[T]) -> &Node<T> {
        let mut id = 0;
        while let Some(s) = &self.nodes[id].split {
            id = if row[s.feature] <= s.threshold {
                s.left
            } else {
                s.right
            };
        }
        &self.nodes[id]
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.split.is_none()).count()
    }

    /// Weighted Gini decrease per encoded column.
    pub fn impurity_decrease(&self, n_features: usize) -> Vec<T> {
        let mut out = vec![T::zero(); n_features];
        for (id, node) in self.nodes.iter().enumerate() {
            if let Some(s) = &node.split {
                let dec = self.risk(id) - self.risk(s.left) - self.risk(s.right);
                out[s.feature] = out[s.feature] + dec;
            }
        }
        out
    }
}
