use serde::{Deserialize, Serialize};

use crate::data::TwStage;
use crate::error::{Error, Result};

/// Rows are true stages, columns predicted stages, both in `labels` order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<TwStage>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(labels: Vec<TwStage>, counts: Vec<Vec<u64>>) -> Result<Self> {
        let n = labels.len();
        if n == 0 || counts.len() != n || counts.iter().any(|r| r.len() != n) {
            return Err(Error::Invariant(format!(
                "confusion matrix must be {n}x{n} for {n} labels"
            )));
        }
        if labels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invariant(
                "confusion labels must be strictly increasing".into(),
            ));
        }
        Ok(Self { labels, counts })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.labels.len()).map(|i| self.counts[i][i]).sum()
    }

    /// Count of predictions at most one stage away, by global stage order.
    pub fn within_one_count(&self) -> u64 {
        let mut n = 0;
        for (i, row) in self.counts.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                if self.labels[i].index().abs_diff(self.labels[j].index()) <= 1 {
                    n += c;
                }
            }
        }
        n
    }

    pub fn accuracy(&self) -> f64 {
        self.correct() as f64 / self.total() as f64
    }

    pub fn within_one(&self) -> f64 {
        self.within_one_count() as f64 / self.total() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub accuracy: f64,
    pub within_one: f64,
    pub confusion: ConfusionMatrix,
}

impl From<ConfusionMatrix> for ClassificationMetrics {
    fn from(confusion: ConfusionMatrix) -> Self {
        Self {
            accuracy: confusion.accuracy(),
            within_one: confusion.within_one(),
            confusion,
        }
    }
}

pub fn classification_metrics(
    truth: &[TwStage],
    pred: &[TwStage],
) -> Result<ClassificationMetrics> {
    if truth.len() != pred.len() {
        return Err(Error::LengthMismatch {
            expected: truth.len(),
            actual: pred.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::InsufficientData("no predictions to score".into()));
    }
    let mut labels: Vec<TwStage> = truth.iter().chain(pred).copied().collect();
    labels.sort();
    labels.dedup();
    let pos = |s: TwStage| labels.binary_search(&s).unwrap();
    let mut counts = vec![vec![0u64; labels.len()]; labels.len()];
    for (&t, &p) in truth.iter().zip(pred) {
        counts[pos(t)][pos(p)] += 1;
    }
    Ok(ConfusionMatrix { labels, counts }.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionMetrics {
    pub rmse: f64,
    pub mae: f64,
    /// Absent when the truth has zero variance.
    pub r2: Option<f64>,
}

pub fn regression_metrics(truth: &[f64], pred: &[f64]) -> Result<RegressionMetrics> {
    if truth.len() != pred.len() {
        return Err(Error::LengthMismatch {
            expected: truth.len(),
            actual: pred.len(),
        });
    }
    if truth.len() < 2 {
        return Err(Error::InsufficientData(
            "regression metrics need at least 2 points".into(),
        ));
    }
    let n = truth.len() as f64;
    let rss: f64 = truth.iter().zip(pred).map(|(t, p)| (t - p) * (t - p)).sum();
    let mae = truth
        .iter()
        .zip(pred)
        .map(|(t, p)| (t - p).abs())
        .sum::<f64>()
        / n;
    let mean = truth.iter().sum::<f64>() / n;
    let tss: f64 = truth.iter().map(|t| (t - mean) * (t - mean)).sum();
    Ok(RegressionMetrics {
        rmse: (rss / n).sqrt(),
        mae,
        r2: (tss > 0.0).then(|| 1.0 - rss / tss),
    })
}
