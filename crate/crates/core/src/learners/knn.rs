use serde::{Deserialize, Serialize};

use super::{encode, Encoded};
use crate::data::TwStage;
use crate::error::Result;
use crate::evalkit::stratified_kfold;

/// k-nearest-neighbour classifier on min-max scaled features, with `k`
/// chosen by stratified 10-fold cross-validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    pub k: usize,
    pub classes: Vec<TwStage>,
    min: Vec<f64>,
    range: Vec<f64>,
    train_x: Vec<Vec<f64>>,
    train_y: Vec<usize>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Training indices sorted by distance to `q`, ties by index.
fn neighbours(q: &[f64], x: &[Vec<f64>], candidates: &[usize]) -> Vec<usize> {
    let mut d: Vec<(f64, usize)> = candidates.iter().map(|&j| (sq_dist(q, &x[j]), j)).collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    d.into_iter().map(|(_, j)| j).collect()
}

fn vote(order: &[usize], y: &[usize], k: usize, n_classes: usize) -> Vec<f64> {
    let mut counts = vec![0.0; n_classes];
    let k = k.min(order.len());
    for &j in &order[..k] {
        counts[y[j]] += 1.0;
    }
    counts.iter().map(|c| c / k as f64).collect()
}

impl Knn {
    pub fn fit(x: &[Vec<f64>], y: &[TwStage], seed: u64) -> Result<Self> {
        let Encoded {
            classes,
            y,
            n_features,
        } = encode(x, y)?;
        let mut min = vec![f64::INFINITY; n_features];
        let mut max = vec![f64::NEG_INFINITY; n_features];
        for row in x {
            for (j, &v) in row.iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        let range: Vec<f64> = min
            .iter()
            .zip(&max)
            .map(|(a, b)| if b > a { b - a } else { 1.0 })
            .collect();
        let scaled: Vec<Vec<f64>> = x.iter().map(|r| scale(r, &min, &range)).collect();

        let n = x.len();
        let k_max = 50.min(n - 1).max(1);
        let folds = stratified_kfold(&y, 10.min(n), seed)?;
        let mut correct = vec![0usize; k_max + 1];
        for i in 0..n {
            let others: Vec<usize> = (0..n).filter(|&j| folds[j] != folds[i]).collect();
            let order = neighbours(&scaled[i], &scaled, &others);
            for (k, c) in correct.iter_mut().enumerate().skip(1) {
                let scores = vote(&order, &y, k, classes.len());
                if super::argmax(&scores) == y[i] {
                    *c += 1;
                }
            }
        }
        let k = (1..=k_max).fold(
            1,
            |best, k| if correct[k] > correct[best] { k } else { best },
        );
        Ok(Self {
            k,
            classes,
            min,
            range,
            train_x: scaled,
            train_y: y,
        })
    }

    pub fn n_features(&self) -> usize {
        self.min.len()
    }

    pub fn scores(&self, row: &[f64]) -> Vec<f64> {
        let q = scale(row, &self.min, &self.range);
        let all: Vec<usize> = (0..self.train_x.len()).collect();
        vote(
            &neighbours(&q, &self.train_x, &all),
            &self.train_y,
            self.k,
            self.classes.len(),
        )
    }
}

fn scale(row: &[f64], min: &[f64], range: &[f64]) -> Vec<f64> {
    row.iter()
        .zip(min)
        .zip(range)
        .map(|((v, lo), r)| (v - lo) / r)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{fit, ClassifierKind};

    #[test]
    fn own_label_with_k1() {
        let x: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let y: Vec<TwStage> = (0..12)
            .map(|i| if i % 3 == 0 { TwStage::D } else { TwStage::E })
            .collect();
        let mut m = Knn::fit(&x, &y, 0).unwrap();
        m.k = 1;
        for (r, l) in x.iter().zip(&y) {
            let s = m.scores(r);
            assert_eq!(m.classes[super::super::argmax(&s)], *l);
        }
    }

    #[test]
    fn separable_clusters_pick_small_error() {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..20 {
            x.push(vec![i as f64 * 0.01, 0.0]);
            y.push(TwStage::F);
            x.push(vec![10.0 + i as f64 * 0.01, 5.0]);
            y.push(TwStage::H);
        }
        let c = fit(ClassifierKind::Knn, &x, &y, 3).unwrap();
        assert_eq!(c.predict(&x).unwrap(), y);
        assert_eq!(c.predict(&[vec![9.0, 4.0]]).unwrap(), vec![TwStage::H]);
    }
}
