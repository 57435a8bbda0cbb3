use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{leaf_scores, Criterion, Grower, Node, TreeParams};
use super::{encode, Encoded};
use crate::data::TwStage;
use crate::error::{Error, Result};

/// Bagged information-gain trees with `⌈√m⌉` features tried per split.
/// Tree `t` draws its bootstrap sample and feature subsets from seed `seed + t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub classes: Vec<TwStage>,
    pub n_features: usize,
    pub seed: u64,
    pub trees: Vec<Vec<Node>>,
}

impl RandomForest {
    pub fn fit(x: &[Vec<f64>], y: &[TwStage], n_trees: usize, seed: u64) -> Result<Self> {
        if n_trees == 0 {
            return Err(Error::InvalidParameter(
                "a forest needs at least one tree".into(),
            ));
        }
        let Encoded {
            classes,
            y,
            n_features,
        } = encode(x, y)?;
        let params = TreeParams {
            criterion: Criterion::InfoGain,
            min_leaf: 1,
            max_depth: None,
            max_features: Some((n_features as f64).sqrt().ceil() as usize),
        };
        let n = x.len();
        let trees = (0..n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(t as u64));
                let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                let mut g = Grower {
                    x,
                    y: &y,
                    n_classes: classes.len(),
                    params,
                    rng: Some(&mut rng),
                    nodes: Vec::new(),
                };
                g.grow(rows, 0);
                g.nodes
            })
            .collect();
        Ok(Self {
            classes,
            n_features,
            seed,
            trees,
        })
    }

    /// Mean of the trees' leaf class distributions.
    pub fn scores(&self, row: &[f64]) -> Vec<f64> {
        let mut acc = vec![0.0; self.classes.len()];
        for t in &self.trees {
            for (a, s) in acc.iter_mut().zip(leaf_scores(t, row)) {
                *a += s;
            }
        }
        let total: f64 = acc.iter().sum();
        acc.iter().map(|a| a / total).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{fit, ClassifierKind};

    fn toy() -> (Vec<Vec<f64>>, Vec<TwStage>) {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..60 {
            let a = (i * 37 % 60) as f64 / 6.0;
            let b = (i * 11 % 60) as f64 / 6.0;
            x.push(vec![a, b, (i % 7) as f64]);
            y.push(if a + b < 10.0 {
                TwStage::D
            } else if a < 5.0 {
                TwStage::E
            } else {
                TwStage::F
            });
        }
        (x, y)
    }

    #[test]
    fn memorises_separable_toy() {
        let (x, y) = toy();
        let c = fit(ClassifierKind::RandomForest, &x, &y, 7).unwrap();
        let pred = c.predict(&x).unwrap();
        let acc = pred.iter().zip(&y).filter(|(p, t)| p == t).count() as f64 / y.len() as f64;
        assert!(acc >= 0.95, "{acc}");
        for s in c.predict_scores(&x).unwrap() {
            assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let (x, y) = toy();
        let a = RandomForest::fit(&x, &y, 20, 3).unwrap();
        let b = RandomForest::fit(&x, &y, 20, 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, RandomForest::fit(&x, &y, 20, 4).unwrap());
        assert_eq!(a.trees.len(), 20);
    }
}
