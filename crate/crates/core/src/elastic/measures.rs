use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An elastic distance measure with its parameters.
///
/// Bands are in index units; `None` leaves the alignment unconstrained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ElasticMeasure {
    Euclidean,
    /// Sakoe-Chiba window as a fraction of the series length.
    Dtw {
        window: f64,
    },
    Wdtw {
        g: f64,
    },
    Lcss {
        epsilon: f64,
        band: Option<usize>,
    },
    Erp {
        gap: f64,
        band: Option<usize>,
    },
    Twed {
        stiffness: f64,
        penalty: f64,
    },
    Msm {
        cost: f64,
    },
}

impl ElasticMeasure {
    pub fn name(&self) -> &'static str {
        match self {
            ElasticMeasure::Euclidean => "euclidean",
            ElasticMeasure::Dtw { .. } => "dtw",
            ElasticMeasure::Wdtw { .. } => "wdtw",
            ElasticMeasure::Lcss { .. } => "lcss",
            ElasticMeasure::Erp { .. } => "erp",
            ElasticMeasure::Twed { .. } => "twed",
            ElasticMeasure::Msm { .. } => "msm",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ElasticMeasure::Euclidean => true,
            ElasticMeasure::Dtw { window } => (0.0..=1.0).contains(&window),
            ElasticMeasure::Wdtw { g } => g >= 0.0 && g.is_finite(),
            ElasticMeasure::Lcss { epsilon, .. } => epsilon >= 0.0 && epsilon.is_finite(),
            ElasticMeasure::Erp { gap, .. } => gap.is_finite(),
            ElasticMeasure::Twed { stiffness, penalty } => {
                stiffness > 0.0 && stiffness.is_finite() && penalty >= 0.0 && penalty.is_finite()
            }
            ElasticMeasure::Msm { cost } => cost > 0.0 && cost.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "{self:?} outside admissible range"
            )))
        }
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        if a.len() != b.len() {
            return Err(Error::LengthMismatch {
                expected: a.len(),
                actual: b.len(),
            });
        }
        if a.is_empty() {
            return Err(Error::InvalidParameter("series must be non-empty".into()));
        }
        self.validate()?;
        Ok(self.distance_unchecked(a, b))
    }

    /// Distance without length or parameter checks; callers guarantee both.
    pub(crate) fn distance_unchecked(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            ElasticMeasure::Euclidean => euclidean(a, b),
            ElasticMeasure::Dtw { window } => dtw(a, b, window_cells(window, a.len())),
            ElasticMeasure::Wdtw { g } => wdtw(a, b, g),
            ElasticMeasure::Lcss { epsilon, band } => lcss(a, b, epsilon, band),
            ElasticMeasure::Erp { gap, band } => erp(a, b, gap, band),
            ElasticMeasure::Twed { stiffness, penalty } => twed(a, b, stiffness, penalty),
            ElasticMeasure::Msm { cost } => msm(a, b, cost),
        }
    }
}

/// ⌈w·n⌉, guarding against representation error in `w`.
pub fn window_cells(window: f64, n: usize) -> usize {
    let raw = window * n as f64;
    let r = raw.round();
    if (raw - r).abs() < 1e-9 {
        r as usize
    } else {
        raw.ceil() as usize
    }
}

fn in_band(i: usize, j: usize, band: Option<usize>) -> bool {
    band.is_none_or(|b| i.abs_diff(j) <= b)
}

/// Sum of squared differences.
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += (x - y) * (x - y);
    }
    acc
}

/// DTW with squared pointwise cost inside a Sakoe-Chiba band of `r` cells.
pub fn dtw(a: &[f64], b: &[f64], r: usize) -> f64 {
    let weights = vec![1.0; a.len().max(b.len())];
    weighted_dtw(a, b, Some(r), &weights)
}

/// Weighted DTW with logistic weight `1 / (1 + exp(-g (|i-j| - n/2)))`.
pub fn wdtw(a: &[f64], b: &[f64], g: f64) -> f64 {
    let n = a.len().max(b.len());
    let mid = n as f64 / 2.0;
    let weights: Vec<f64> = (0..n)
        .map(|k| 1.0 / (1.0 + (-g * (k as f64 - mid)).exp()))
        .collect();
    weighted_dtw(a, b, None, &weights)
}

fn weighted_dtw(a: &[f64], b: &[f64], band: Option<usize>, weights: &[f64]) -> f64 {
    let (n, m) = (a.len(), b.len());
    let mut prev = vec![f64::INFINITY; m + 1];
    let mut cur = vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    for i in 1..=n {
        cur.fill(f64::INFINITY);
        let (lo, hi) = match band {
            Some(r) => (i.saturating_sub(r).max(1), (i + r).min(m)),
            None => (1, m),
        };
        for j in lo..=hi {
            let d = a[i - 1] - b[j - 1];
            let cost = weights[i.abs_diff(j)] * d * d;
            let best = prev[j - 1].min(prev[j]).min(cur[j - 1]);
            cur[j] = cost + best;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m]
}

/// `1 - LCS / min(len)` where elements match when within `epsilon` and
/// `band` positions of each other.
pub fn lcss(a: &[f64], b: &[f64], epsilon: f64, band: Option<usize>) -> f64 {
    let (n, m) = (a.len(), b.len());
    let mut prev = vec![0usize; m + 1];
    let mut cur = vec![0usize; m + 1];
    for i in 1..=n {
        cur[0] = 0;
        for j in 1..=m {
            cur[j] = if in_band(i, j, band) && (a[i - 1] - b[j - 1]).abs() <= epsilon {
                prev[j - 1] + 1
            } else {
                prev[j].max(cur[j - 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    1.0 - prev[m] as f64 / n.min(m) as f64
}

/// Edit distance with real penalty: gaps cost `|x - gap|`, matches `|x - y|`.
pub fn erp(a: &[f64], b: &[f64], gap: f64, band: Option<usize>) -> f64 {
    let (n, m) = (a.len(), b.len());
    let mut prev = vec![f64::INFINITY; m + 1];
    let mut cur = vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    for j in 1..=m {
        if in_band(0, j, band) {
            prev[j] = prev[j - 1] + (b[j - 1] - gap).abs();
        }
    }
    for i in 1..=n {
        cur.fill(f64::INFINITY);
        if in_band(i, 0, band) {
            cur[0] = prev[0] + (a[i - 1] - gap).abs();
        }
        for j in 1..=m {
            if !in_band(i, j, band) {
                continue;
            }
            let matched = prev[j - 1] + (a[i - 1] - b[j - 1]).abs();
            let gap_a = prev[j] + (a[i - 1] - gap).abs();
            let gap_b = cur[j - 1] + (b[j - 1] - gap).abs();
            cur[j] = matched.min(gap_a).min(gap_b);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m]
}

/// Time warp edit distance with unit time stamps and a zero sample prepended
/// to both series.
pub fn twed(a: &[f64], b: &[f64], stiffness: f64, penalty: f64) -> f64 {
    let (n, m) = (a.len(), b.len());
    let at = |i: usize| if i == 0 { 0.0 } else { a[i - 1] };
    let bt = |j: usize| if j == 0 { 0.0 } else { b[j - 1] };
    let mut prev = vec![f64::INFINITY; m + 1];
    let mut cur = vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    for i in 1..=n {
        cur.fill(f64::INFINITY);
        for j in 1..=m {
            let del_a = prev[j] + (at(i) - at(i - 1)).abs() + stiffness + penalty;
            let del_b = cur[j - 1] + (bt(j) - bt(j - 1)).abs() + stiffness + penalty;
            let matched = prev[j - 1]
                + (at(i) - bt(j)).abs()
                + (at(i - 1) - bt(j - 1)).abs()
                + stiffness * 2.0 * i.abs_diff(j) as f64;
            cur[j] = matched.min(del_a).min(del_b);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m]
}

/// Cost of a split or merge that places `x` next to `y` when aligned with `z`.
pub fn msm_split_cost(x: f64, y: f64, z: f64, c: f64) -> f64 {
    if (y <= x && x <= z) || (y >= x && x >= z) {
        c
    } else {
        c + (x - y).abs().min((x - z).abs())
    }
}

/// Move-split-merge distance.
pub fn msm(a: &[f64], b: &[f64], c: f64) -> f64 {
    let (n, m) = (a.len(), b.len());
    let mut prev = vec![0.0; m];
    let mut cur = vec![0.0; m];
    for i in 0..n {
        for j in 0..m {
            cur[j] = match (i, j) {
                (0, 0) => (a[0] - b[0]).abs(),
                (0, _) => cur[j - 1] + msm_split_cost(b[j], a[0], b[j - 1], c),
                (_, 0) => prev[0] + msm_split_cost(a[i], a[i - 1], b[0], c),
                _ => {
                    let mv = prev[j - 1] + (a[i] - b[j]).abs();
                    let split_a = prev[j] + msm_split_cost(a[i], a[i - 1], b[j], c);
                    let split_b = cur[j - 1] + msm_split_cost(b[j], a[i], b[j - 1], c);
                    mv.min(split_a).min(split_b)
                }
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m - 1]
}
