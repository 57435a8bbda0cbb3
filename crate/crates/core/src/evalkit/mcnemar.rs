use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Discordant counts, continuity-corrected statistic and two-sided p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McNemar {
    /// Instances classifier A got right and B got wrong.
    pub a_only: u64,
    /// Instances B got right and A got wrong.
    pub b_only: u64,
    pub statistic: f64,
    pub p_value: f64,
    pub exact: bool,
}

/// Exact binomial p-value below 25 discordant pairs, continuity-corrected
/// χ² with one degree of freedom otherwise.
pub fn mcnemar<L: PartialEq>(truth: &[L], pred_a: &[L], pred_b: &[L]) -> Result<McNemar> {
    for p in [pred_a, pred_b] {
        if p.len() != truth.len() {
            return Err(Error::LengthMismatch {
                expected: truth.len(),
                actual: p.len(),
            });
        }
    }
    let (mut b, mut c) = (0u64, 0u64);
    for ((t, pa), pb) in truth.iter().zip(pred_a).zip(pred_b) {
        match (pa == t, pb == t) {
            (true, false) => b += 1,
            (false, true) => c += 1,
            _ => {}
        }
    }
    let n = b + c;
    let statistic = if n == 0 {
        0.0
    } else {
        ((b.abs_diff(c) as f64 - 1.0).max(0.0)).powi(2) / n as f64
    };
    let exact = n < 25;
    let p_value = if n == 0 {
        1.0
    } else if exact {
        (2.0 * binomial_half_cdf(b.min(c), n)).min(1.0)
    } else {
        let chi = ChiSquared::new(1.0).map_err(|e| Error::Numeric(e.to_string()))?;
        chi.sf(statistic)
    };
    Ok(McNemar {
        a_only: b,
        b_only: c,
        statistic,
        p_value,
        exact,
    })
}

/// P(X ≤ k) for X ~ Binomial(n, 1/2).
fn binomial_half_cdf(k: u64, n: u64) -> f64 {
    let mut coef = 1.0;
    let mut acc = 0.0;
    for i in 0..=k {
        if i > 0 {
            coef = coef * (n - i + 1) as f64 / i as f64;
        }
        acc += coef;
    }
    acc / 2f64.powi(n as i32)
}
