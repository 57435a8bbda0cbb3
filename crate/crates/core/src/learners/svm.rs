use serde::{Deserialize, Serialize};

use super::{encode, Encoded};
use crate::data::TwStage;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    Linear,
    /// `(x·y + 1)²`
    Quadratic,
}

impl Kernel {
    pub fn eval(self, a: &[f64], b: &[f64]) -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        match self {
            Kernel::Linear => dot,
            Kernel::Quadratic => (dot + 1.0).powi(2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub kernel: Kernel,
    pub c: f64,
    /// Stopping tolerance on the maximal KKT violation.
    pub tolerance: f64,
}

impl SvmParams {
    pub fn new(kernel: Kernel) -> Self {
        Self {
            kernel,
            c: 1.0,
            tolerance: 1e-3,
        }
    }
}

/// Solution of one two-class dual problem.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub rho: f64,
    /// Maximal KKT violation at termination.
    pub violation: f64,
    pub iterations: usize,
}

/// SMO with maximal-violating-pair selection using second-order
/// information. `k` is the kernel matrix and `y` holds ±1 labels.
pub fn solve_dual(k: &[Vec<f64>], y: &[f64], c: f64, eps: f64) -> DualSolution {
    const TAU: f64 = 1e-12;
    let n = y.len();
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let q = |i: usize, j: usize| y[i] * y[j] * k[i][j];
    let max_iter = 10_000_000usize.max(100 * n);
    let mut iterations = 0;
    let violation = loop {
        // i: maximal -y_t G_t over the "up" set.
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            let up = if y[t] > 0.0 {
                alpha[t] < c
            } else {
                alpha[t] > 0.0
            };
            if up && -y[t] * grad[t] > gmax {
                gmax = -y[t] * grad[t];
                i = t;
            }
        }
        // j: most decrease of the objective among the "low" set.
        let mut gmin = f64::INFINITY;
        let mut j = usize::MAX;
        let mut best_obj = f64::INFINITY;
        for t in 0..n {
            let low = if y[t] > 0.0 {
                alpha[t] > 0.0
            } else {
                alpha[t] < c
            };
            if !low {
                continue;
            }
            let v = -y[t] * grad[t];
            gmin = gmin.min(v);
            if i == usize::MAX {
                continue;
            }
            let b = gmax - v;
            if b > 0.0 {
                let a = k[i][i] + k[t][t] - 2.0 * k[i][t];
                let obj = -(b * b) / if a > 0.0 { a } else { TAU };
                if obj < best_obj {
                    best_obj = obj;
                    j = t;
                }
            }
        }
        let gap = gmax - gmin;
        if i == usize::MAX || j == usize::MAX || gap < eps || iterations >= max_iter {
            if iterations >= max_iter {
                log::warn!(
                    "SMO stopped after {iterations} iterations with KKT violation {gap:.3e}"
                );
            }
            break gap.max(0.0);
        }
        iterations += 1;

        let (ai, aj) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let quad = (q(i, i) + q(j, j) + 2.0 * q(i, j)).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (q(i, i) + q(j, j) - 2.0 * q(i, j)).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - ai, alpha[j] - aj);
        for t in 0..n {
            grad[t] += q(t, i) * di + q(t, j) * dj;
        }
    };

    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum_free) = (0usize, 0.0);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg)
            } else {
                lb = lb.max(yg)
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg)
            } else {
                lb = lb.max(yg)
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    let rho = if free > 0 {
        sum_free / free as f64
    } else {
        0.5 * (ub + lb)
    };
    DualSolution {
        alpha,
        rho,
        violation,
        iterations,
    }
}

/// Two-class machine separating `positive` (decision > 0) from `negative`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryMachine {
    pub positive: usize,
    pub negative: usize,
    pub support_vectors: Vec<Vec<f64>>,
    /// `α_i y_i` for each support vector.
    pub coef: Vec<f64>,
    pub rho: f64,
}

impl BinaryMachine {
    fn decision(&self, kernel: Kernel, z: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.coef)
            .map(|(sv, c)| c * kernel.eval(sv, z))
            .sum::<f64>()
            - self.rho
    }
}

/// One-vs-one support vector classifier on standardised features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Svm {
    pub classes: Vec<TwStage>,
    pub params: SvmParams,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    pub machines: Vec<BinaryMachine>,
}

impl Svm {
    pub fn fit(x: &[Vec<f64>], y: &[TwStage], params: &SvmParams) -> Result<Self> {
        if !(params.c > 0.0 && params.tolerance > 0.0) {
            return Err(Error::InvalidParameter(
                "SVM needs C > 0 and a positive tolerance".into(),
            ));
        }
        let Encoded {
            classes,
            y,
            n_features,
        } = encode(x, y)?;
        let n = x.len() as f64;
        let mean: Vec<f64> = (0..n_features)
            .map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n)
            .collect();
        let scale: Vec<f64> = (0..n_features)
            .map(|j| {
                let sd = (x.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        let z: Vec<Vec<f64>> = x.iter().map(|r| standardise(r, &mean, &scale)).collect();

        let mut machines = Vec::new();
        for a in 0..classes.len() {
            for b in a + 1..classes.len() {
                let idx: Vec<usize> = (0..z.len()).filter(|&i| y[i] == a || y[i] == b).collect();
                let yy: Vec<f64> = idx
                    .iter()
                    .map(|&i| if y[i] == a { 1.0 } else { -1.0 })
                    .collect();
                let k: Vec<Vec<f64>> = idx
                    .iter()
                    .map(|&i| {
                        idx.iter()
                            .map(|&j| params.kernel.eval(&z[i], &z[j]))
                            .collect()
                    })
                    .collect();
                let sol = solve_dual(&k, &yy, params.c, params.tolerance);
                let mut support_vectors = Vec::new();
                let mut coef = Vec::new();
                for (t, &i) in idx.iter().enumerate() {
                    if sol.alpha[t] > 0.0 {
                        support_vectors.push(z[i].clone());
                        coef.push(sol.alpha[t] * yy[t]);
                    }
                }
                machines.push(BinaryMachine {
                    positive: a,
                    negative: b,
                    support_vectors,
                    coef,
                    rho: sol.rho,
                });
            }
        }
        Ok(Self {
            classes,
            params: *params,
            mean,
            scale,
            machines,
        })
    }

    pub fn n_features(&self) -> usize {
        self.mean.len()
    }

    /// Pairwise votes and summed margins in favour of each class.
    fn tally(&self, row: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let z = standardise(row, &self.mean, &self.scale);
        let mut votes = vec![0.0; self.classes.len()];
        let mut margin = vec![0.0; self.classes.len()];
        for m in &self.machines {
            let d = m.decision(self.params.kernel, &z);
            if d > 0.0 {
                votes[m.positive] += 1.0;
            } else {
                votes[m.negative] += 1.0;
            }
            margin[m.positive] += d;
            margin[m.negative] -= d;
        }
        (votes, margin)
    }

    /// Share of pairwise votes won by each class.
    pub fn scores(&self, row: &[f64]) -> Vec<f64> {
        let (votes, _) = self.tally(row);
        let total = self.machines.len() as f64;
        votes.iter().map(|v| v / total).collect()
    }

    /// Most votes; ties go to the larger summed margin, then the lower stage.
    pub fn predict_one(&self, row: &[f64]) -> TwStage {
        let (votes, margin) = self.tally(row);
        let mut best = 0;
        for c in 1..votes.len() {
            if votes[c] > votes[best] || (votes[c] == votes[best] && margin[c] > margin[best]) {
                best = c;
            }
        }
        self.classes[best]
    }
}

fn standardise(row: &[f64], mean: &[f64], scale: &[f64]) -> Vec<f64> {
    row.iter()
        .zip(mean)
        .zip(scale)
        .map(|((v, m), s)| (v - m) / s)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{fit, ClassifierKind};
    use proptest::prelude::*;

    #[test]
    fn linear_separable_toy() {
        let x = vec![
            vec![0.0, 0.0],
            vec![1.0, 0.5],
            vec![0.5, 1.0],
            vec![3.0, 3.0],
            vec![4.0, 3.5],
            vec![3.5, 4.0],
        ];
        let y = [
            TwStage::D,
            TwStage::D,
            TwStage::D,
            TwStage::E,
            TwStage::E,
            TwStage::E,
        ];
        let c = fit(ClassifierKind::SvmLinear, &x, &y, 0).unwrap();
        assert_eq!(c.predict(&x).unwrap(), y);
        assert_eq!(c.predict(&[vec![0.2, 0.1]]).unwrap(), vec![TwStage::D]);
    }

    #[test]
    fn quadratic_kernel_separates_xor() {
        let x = vec![
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
        ];
        let y = [TwStage::F, TwStage::F, TwStage::G, TwStage::G];
        let c = fit(ClassifierKind::SvmQuadratic, &x, &y, 0).unwrap();
        assert_eq!(c.predict(&x).unwrap(), y);
        // The explicit degree-2 feature x1·x2 separates XOR linearly, as the
        // kernel implies.
        let lifted: Vec<Vec<f64>> = x
            .iter()
            .map(|r| vec![(r[0] - 0.5) * (r[1] - 0.5)])
            .collect();
        let lin = fit(ClassifierKind::SvmLinear, &lifted, &y, 0).unwrap();
        assert_eq!(lin.predict(&lifted).unwrap(), y);
        // While a purely linear machine on the raw features cannot.
        let raw = fit(ClassifierKind::SvmLinear, &x, &y, 0).unwrap();
        assert_ne!(raw.predict(&x).unwrap(), y);
    }

    #[test]
    fn multiclass_one_vs_one() {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (k, s) in [TwStage::C, TwStage::E, TwStage::H].into_iter().enumerate() {
            for i in 0..8 {
                x.push(vec![
                    k as f64 * 5.0 + (i % 3) as f64 * 0.3,
                    (i / 3) as f64 * 0.3,
                ]);
                y.push(s);
            }
        }
        let c = fit(ClassifierKind::SvmQuadratic, &x, &y, 0).unwrap();
        if let Classifier::Svm(m) = &c {
            assert_eq!(m.machines.len(), 3);
        }
        assert_eq!(c.predict(&x).unwrap(), y);
        for s in c.predict_scores(&x).unwrap() {
            assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    use crate::learners::Classifier;

    proptest! {
        #[test]
        fn dual_constraints_hold(pts in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0, any::<bool>()), 4..30), quad: bool) {
            let y: Vec<f64> = pts.iter().map(|p| if p.2 { 1.0 } else { -1.0 }).collect();
            prop_assume!(y.iter().any(|&v| v > 0.0) && y.iter().any(|&v| v < 0.0));
            let kernel = if quad { Kernel::Quadratic } else { Kernel::Linear };
            let x: Vec<[f64; 2]> = pts.iter().map(|p| [p.0, p.1]).collect();
            let k: Vec<Vec<f64>> = x.iter().map(|a| x.iter().map(|b| kernel.eval(a, b)).collect()).collect();
            let c = 1.0;
            let sol = solve_dual(&k, &y, c, 1e-3);
            for &a in &sol.alpha {
                prop_assert!((0.0..=c).contains(&a));
            }
            let balance: f64 = sol.alpha.iter().zip(&y).map(|(a, y)| a * y).sum();
            prop_assert!(balance.abs() < 1e-6);
            prop_assert!(sol.violation < 1e-3);
            // Recompute the KKT gap from scratch.
            let n = y.len();
            let grad: Vec<f64> = (0..n).map(|i| (0..n).map(|j| y[i] * y[j] * k[i][j] * sol.alpha[j]).sum::<f64>() - 1.0).collect();
            let up = (0..n).filter(|&t| if y[t] > 0.0 { sol.alpha[t] < c } else { sol.alpha[t] > 0.0 });
            let low = (0..n).filter(|&t| if y[t] > 0.0 { sol.alpha[t] > 0.0 } else { sol.alpha[t] < c });
            let m = up.map(|t| -y[t] * grad[t]).fold(f64::NEG_INFINITY, f64::max);
            let mm = low.map(|t| -y[t] * grad[t]).fold(f64::INFINITY, f64::min);
            prop_assert!(m - mm < 1e-3 + 1e-9);
        }
    }
}
