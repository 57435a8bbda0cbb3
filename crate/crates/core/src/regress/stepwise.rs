use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ols::{aic, fit_ols, FittedLinearModel};
use super::transform::TransformSpec;
use crate::error::{Error, Result};

/// A regression term built from the candidate pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Term {
    Main(usize),
    Interaction(usize, usize),
}

impl Term {
    pub fn name(self, names: &[String]) -> String {
        match self {
            Term::Main(i) => names[i].clone(),
            Term::Interaction(i, j) => format!("{}:{}", names[i], names[j]),
        }
    }

    pub fn column(self, pool: &[Vec<f64>]) -> Vec<f64> {
        match self {
            Term::Main(i) => pool[i].clone(),
            Term::Interaction(i, j) => pool[i].iter().zip(&pool[j]).map(|(a, b)| a * b).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct StepwiseResult {
    /// Terms in the order they were accepted.
    pub terms: Vec<Term>,
    /// AIC of the intercept-only model followed by the AIC after each step.
    pub aic_path: Vec<f64>,
    pub model: FittedLinearModel,
}

/// Candidates for the next step: unused main effects in pool order, then
/// unused interactions `(i, j)`, `i < j`, with at least one parent selected.
fn candidates(selected: &[Term], pool_len: usize, interactions: bool) -> Vec<Term> {
    let mut out: Vec<Term> = (0..pool_len)
        .map(Term::Main)
        .filter(|t| !selected.contains(t))
        .collect();
    if interactions {
        let has = |i| selected.contains(&Term::Main(i));
        for i in 0..pool_len {
            for j in i + 1..pool_len {
                let t = Term::Interaction(i, j);
                if (has(i) || has(j)) && !selected.contains(&t) {
                    out.push(t);
                }
            }
        }
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Component of `c` orthogonal to the orthonormal `basis` (two passes).
fn orthogonalise(c: &[f64], basis: &[Vec<f64>]) -> Vec<f64> {
    let mut e = c.to_vec();
    for _ in 0..2 {
        for q in basis {
            let s = dot(q, &e);
            for (ei, qi) in e.iter_mut().zip(q) {
                *ei -= s * qi;
            }
        }
    }
    e
}

/// Greedy forward selection by AIC. Each step adds the candidate with the
/// lowest resulting AIC, provided it is strictly below the current AIC; the
/// first candidate wins ties. Candidates that are numerically collinear with
/// the current design, or that would leave fewer than two residual degrees
/// of freedom, are skipped.
pub fn stepwise_aic(
    pool: &[Vec<f64>],
    names: &[String],
    y: &[f64],
    transform: TransformSpec,
    include_interactions: bool,
) -> Result<StepwiseResult> {
    if pool.is_empty() {
        return Err(Error::InvalidParameter(
            "stepwise selection needs a non-empty candidate pool".into(),
        ));
    }
    if pool.len() != names.len() {
        return Err(Error::LengthMismatch {
            expected: pool.len(),
            actual: names.len(),
        });
    }
    let n = y.len();
    if let Some(c) = pool.iter().find(|c| c.len() != n) {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: c.len(),
        });
    }
    if n < 3 {
        return Err(Error::InsufficientData(format!(
            "{n} observations are too few for regression"
        )));
    }
    let t = transform.forward_all(y)?;
    let mean = t.iter().sum::<f64>() / n as f64;
    let tss: f64 = t.iter().map(|v| (v - mean).powi(2)).sum();
    let floor = |rss: f64| rss.max(f64::MIN_POSITIVE);

    let mut basis = vec![vec![1.0 / (n as f64).sqrt(); n]];
    let mut resid: Vec<f64> = t.iter().map(|v| v - mean).collect();
    let mut rss = tss;
    let mut current = aic(n, floor(rss), 1);
    let mut aic_path = vec![current];
    let mut selected: Vec<Term> = Vec::new();

    while rss > 1e-20 * tss && selected.len() + 2 < n - 1 {
        let cands = candidates(&selected, pool.len(), include_interactions);
        let scored: Vec<Option<(f64, Vec<f64>)>> = cands
            .par_iter()
            .map(|term| {
                let c = term.column(pool);
                let cnorm2 = dot(&c, &c);
                let e = orthogonalise(&c, &basis);
                let ee = dot(&e, &e);
                if !(ee > 1e-20 * cnorm2) {
                    return None;
                }
                let proj = dot(&resid, &e);
                let new_rss = (rss - proj * proj / ee).max(0.0);
                Some((aic(n, floor(new_rss), selected.len() + 2), e))
            })
            .collect();
        let mut best: Option<(usize, f64)> = None;
        for (k, s) in scored.iter().enumerate() {
            if let Some((a, _)) = s {
                if best.is_none_or(|(_, b)| *a < b) {
                    best = Some((k, *a));
                }
            }
        }
        let Some((k, a)) = best else { break };
        if !(a < current) {
            break;
        }
        let e = scored[k]
            .as_ref()
            .map(|(_, e)| e.clone())
            .expect("scored candidate");
        let norm = dot(&e, &e).sqrt();
        let q: Vec<f64> = e.iter().map(|v| v / norm).collect();
        let s = dot(&resid, &q);
        for (ri, qi) in resid.iter_mut().zip(&q) {
            *ri -= s * qi;
        }
        basis.push(q);
        rss = dot(&resid, &resid);
        selected.push(cands[k]);
        current = a;
        aic_path.push(a);
    }

    let columns: Vec<Vec<f64>> = selected.iter().map(|t| t.column(pool)).collect();
    let term_names: Vec<String> = selected.iter().map(|t| t.name(names)).collect();
    let model = fit_ols(&columns, &term_names, y, transform)?;
    Ok(StepwiseResult {
        terms: selected,
        aic_path,
        model,
    })
}
