use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{encode, Encoded};
use crate::data::TwStage;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    InfoGain,
    GainRatio,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    pub criterion: Criterion,
    /// Smallest number of instances allowed in a child.
    pub min_leaf: usize,
    pub max_depth: Option<usize>,
    /// Features sampled per split; all features when `None`.
    pub max_features: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            criterion: Criterion::GainRatio,
            min_leaf: 2,
            max_depth: None,
            max_features: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        scores: Vec<f64>,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Binary decision tree on numeric features; `x <= threshold` goes left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub classes: Vec<TwStage>,
    pub n_features: usize,
    pub nodes: Vec<Node>,
}

fn entropy(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / t;
            -p * p.log2()
        })
        .sum()
}

pub(crate) struct Grower<'a, R: Rng> {
    pub x: &'a [Vec<f64>],
    pub y: &'a [usize],
    pub n_classes: usize,
    pub params: TreeParams,
    pub rng: Option<&'a mut R>,
    pub nodes: Vec<Node>,
}

struct BestSplit {
    score: f64,
    feature: usize,
    threshold: f64,
}

impl<R: Rng> Grower<'_, R> {
    pub fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let mut counts = vec![0usize; self.n_classes];
        for &r in &rows {
            counts[self.y[r]] += 1;
        }
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_done = self.params.max_depth.is_some_and(|d| depth >= d);
        let split = if pure || depth_done || rows.len() < 2 * self.params.min_leaf.max(1) {
            None
        } else {
            self.best_split(&rows, &counts)
        };
        let id = self.nodes.len();
        match split {
            None => {
                let n = rows.len() as f64;
                self.nodes.push(Node::Leaf {
                    scores: counts.iter().map(|&c| c as f64 / n).collect(),
                });
            }
            Some(s) => {
                self.nodes.push(Node::Leaf { scores: Vec::new() });
                let (l, r): (Vec<usize>, Vec<usize>) = rows
                    .iter()
                    .partition(|&&i| self.x[i][s.feature] <= s.threshold);
                let left = self.grow(l, depth + 1);
                let right = self.grow(r, depth + 1);
                self.nodes[id] = Node::Split {
                    feature: s.feature,
                    threshold: s.threshold,
                    left,
                    right,
                };
            }
        }
        id
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let m = self.x[0].len();
        match (self.params.max_features, self.rng.as_deref_mut()) {
            (Some(f), Some(rng)) if f < m => {
                let mut v = sample(rng, m, f).into_vec();
                v.sort_unstable();
                v
            }
            _ => (0..m).collect(),
        }
    }

    /// Highest-scoring split; zero-gain splits are accepted so that impure
    /// nodes keep splitting while any threshold separates their rows.
    fn best_split(&mut self, rows: &[usize], counts: &[usize]) -> Option<BestSplit> {
        let n = rows.len();
        let parent = entropy(counts, n);
        let min_leaf = self.params.min_leaf.max(1);
        let mut best: Option<BestSplit> = None;
        for f in self.candidate_features() {
            let mut order = rows.to_vec();
            order.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]).then(a.cmp(&b)));
            let mut left = vec![0usize; self.n_classes];
            let mut right = counts.to_vec();
            for p in 0..n - 1 {
                let c = self.y[order[p]];
                left[c] += 1;
                right[c] -= 1;
                let nl = p + 1;
                let (a, b) = (self.x[order[p]][f], self.x[order[p + 1]][f]);
                if a == b || nl < min_leaf || n - nl < min_leaf {
                    continue;
                }
                let (wl, wr) = (nl as f64 / n as f64, (n - nl) as f64 / n as f64);
                let gain =
                    (parent - wl * entropy(&left, nl) - wr * entropy(&right, n - nl)).max(0.0);
                let score = match self.params.criterion {
                    Criterion::InfoGain => gain,
                    Criterion::GainRatio => gain / -(wl * wl.log2() + wr * wr.log2()),
                };
                if best.as_ref().is_none_or(|bs| score > bs.score) {
                    let mid = 0.5 * (a + b);
                    let threshold = if mid < b { mid } else { a };
                    best = Some(BestSplit {
                        score,
                        feature: f,
                        threshold,
                    });
                }
            }
        }
        best
    }
}

impl DecisionTree {
    pub fn fit(x: &[Vec<f64>], y: &[TwStage], params: &TreeParams) -> Result<Self> {
        if params.min_leaf == 0 {
            return Err(Error::InvalidParameter(
                "min_leaf must be at least 1".into(),
            ));
        }
        let Encoded {
            classes,
            y,
            n_features,
        } = encode(x, y)?;
        let mut g: Grower<'_, rand_chacha::ChaCha8Rng> = Grower {
            x,
            y: &y,
            n_classes: classes.len(),
            params: *params,
            rng: None,
            nodes: Vec::new(),
        };
        g.grow((0..x.len()).collect(), 0);
        Ok(Self {
            classes,
            n_features,
            nodes: g.nodes,
        })
    }

    pub fn scores(&self, row: &[f64]) -> Vec<f64> {
        leaf_scores(&self.nodes, row).to_vec()
    }

    pub fn depth(&self) -> usize {
        fn d(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + d(nodes, *left).max(d(nodes, *right)),
            }
        }
        d(&self.nodes, 0)
    }
}

pub(crate) fn leaf_scores<'a>(nodes: &'a [Node], row: &[f64]) -> &'a [f64] {
    let mut i = 0;
    loop {
        match &nodes[i] {
            Node::Leaf { scores } => return scores,
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                i = if row[*feature] <= *threshold {
                    *left
                } else {
                    *right
                };
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashMap;

    fn accuracy(t: &DecisionTree, x: &[Vec<f64>], y: &[TwStage]) -> f64 {
        let hits = x
            .iter()
            .zip(y)
            .filter(|(r, l)| t.classes[crate::learners::argmax(&t.scores(r))] == **l)
            .count();
        hits as f64 / y.len() as f64
    }

    #[test]
    fn xor_needs_zero_gain_root() {
        let x = vec![
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
        ];
        let y = [TwStage::C, TwStage::D, TwStage::D, TwStage::C];
        let p = TreeParams {
            min_leaf: 1,
            ..Default::default()
        };
        let t = DecisionTree::fit(&x, &y, &p).unwrap();
        assert_eq!(accuracy(&t, &x, &y), 1.0);
        assert_eq!(t.depth(), 2);
    }

    #[test]
    fn min_leaf_limits_growth() {
        let x: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64]).collect();
        let y = [TwStage::B, TwStage::C, TwStage::B, TwStage::C, TwStage::B];
        let t = DecisionTree::fit(&x, &y, &TreeParams::default()).unwrap();
        for n in &t.nodes {
            if let Node::Leaf { scores } = n {
                assert!((scores.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
        assert!(accuracy(&t, &x, &y) < 1.0);
    }

    #[test]
    fn gain_ratio_prefers_balanced_informative_split() {
        // Feature 0 separates perfectly; feature 1 is noise.
        let x = vec![
            vec![0.0, 3.0],
            vec![1.0, 1.0],
            vec![2.0, 2.0],
            vec![10.0, 0.0],
            vec![11.0, 5.0],
            vec![12.0, 4.0],
        ];
        let y = [
            TwStage::E,
            TwStage::E,
            TwStage::E,
            TwStage::G,
            TwStage::G,
            TwStage::G,
        ];
        let t = DecisionTree::fit(&x, &y, &TreeParams::default()).unwrap();
        match &t.nodes[0] {
            Node::Split {
                feature, threshold, ..
            } => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, 6.0);
            }
            n => panic!("root is {n:?}"),
        }
    }

    proptest! {
        #[test]
        fn consistent_data_is_memorised(rows in prop::collection::vec((0i32..6, 0i32..6, 0usize..3), 2..40)) {
            let mut seen = HashMap::new();
            let mut x = Vec::new();
            let mut y = Vec::new();
            for (a, b, c) in rows {
                let label = *seen.entry((a, b)).or_insert(TwStage::ALL[c]);
                x.push(vec![a as f64, b as f64]);
                y.push(label);
            }
            prop_assume!(y.iter().any(|l| *l != y[0]));
            let t = DecisionTree::fit(&x, &y, &TreeParams { min_leaf: 1, ..Default::default() }).unwrap();
            prop_assert_eq!(accuracy(&t, &x, &y), 1.0);
        }
    }
}
