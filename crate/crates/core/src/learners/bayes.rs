use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{encode, Encoded};
use crate::data::TwStage;
use crate::error::Result;

pub const VARIANCE_FLOOR: f64 = 1e-9;

/// Gaussian naive Bayes with maximum-likelihood per-class moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    pub classes: Vec<TwStage>,
    pub priors: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
}

impl GaussianNb {
    pub fn fit(x: &[Vec<f64>], y: &[TwStage]) -> Result<Self> {
        let Encoded {
            classes,
            y,
            n_features,
        } = encode(x, y)?;
        let c = classes.len();
        let mut counts = vec![0usize; c];
        let mut means = vec![vec![0.0; n_features]; c];
        for (row, &k) in x.iter().zip(&y) {
            counts[k] += 1;
            for (m, v) in means[k].iter_mut().zip(row) {
                *m += v;
            }
        }
        for (m, &n) in means.iter_mut().zip(&counts) {
            m.iter_mut().for_each(|v| *v /= n as f64);
        }
        let mut variances = vec![vec![0.0; n_features]; c];
        for (row, &k) in x.iter().zip(&y) {
            for j in 0..n_features {
                variances[k][j] += (row[j] - means[k][j]).powi(2);
            }
        }
        for (v, &n) in variances.iter_mut().zip(&counts) {
            v.iter_mut()
                .for_each(|s| *s = (*s / n as f64).max(VARIANCE_FLOOR));
        }
        let priors = counts.iter().map(|&n| n as f64 / x.len() as f64).collect();
        Ok(Self {
            classes,
            priors,
            means,
            variances,
        })
    }

    pub fn n_features(&self) -> usize {
        self.means[0].len()
    }

    /// Unnormalised log posterior of each class.
    pub fn log_joint(&self, row: &[f64]) -> Vec<f64> {
        (0..self.classes.len())
            .map(|k| {
                let mut lp = self.priors[k].ln();
                for (j, &v) in row.iter().enumerate() {
                    let var = self.variances[k][j];
                    lp -=
                        0.5 * (2.0 * PI * var).ln() + (v - self.means[k][j]).powi(2) / (2.0 * var);
                }
                lp
            })
            .collect()
    }

    pub fn scores(&self, row: &[f64]) -> Vec<f64> {
        let lj = self.log_joint(row);
        let top = lj.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = lj.iter().map(|v| (v - top).exp()).collect();
        let s: f64 = e.iter().sum();
        e.iter().map(|v| v / s).collect()
    }
}
