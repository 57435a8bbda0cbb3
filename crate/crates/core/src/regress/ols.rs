use serde::{Deserialize, Serialize};

use super::transform::TransformSpec;
use crate::error::{Error, Result};

pub const INTERCEPT: &str = "(intercept)";

/// Thin QR factorisation by Householder reflections of a column-major
/// `n × p` matrix.
pub struct Qr {
    /// `p × p` upper triangle, row-major.
    pub r: Vec<Vec<f64>>,
    /// Orthonormal `n × p` factor, column-major.
    pub q: Vec<Vec<f64>>,
}

/// Factorises `cols`; a column whose component orthogonal to the earlier
/// ones is negligible is reported by index.
pub fn householder_qr(cols: &[Vec<f64>]) -> std::result::Result<Qr, usize> {
    let p = cols.len();
    let n = cols.first().map_or(0, Vec::len);
    let mut a: Vec<Vec<f64>> = cols.to_vec();
    let mut vs: Vec<Vec<f64>> = Vec::with_capacity(p);
    for k in 0..p {
        let col_norm = cols[k].iter().map(|v| v * v).sum::<f64>().sqrt();
        let x = &a[k][k..];
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if k >= n || !(norm > 1e-10 * col_norm) {
            return Err(k);
        }
        let alpha = if x[0] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = x.to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|t| t * t).sum();
        for col in a.iter_mut().skip(k) {
            let s: f64 =
                v.iter().zip(&col[k..]).map(|(vi, ci)| vi * ci).sum::<f64>() * 2.0 / vnorm2;
            for (ci, vi) in col[k..].iter_mut().zip(&v) {
                *ci -= s * vi;
            }
        }
        vs.push(v);
    }
    let r: Vec<Vec<f64>> = (0..p)
        .map(|i| (0..p).map(|j| if j >= i { a[j][i] } else { 0.0 }).collect())
        .collect();
    let mut q = vec![vec![0.0; n]; p];
    for (j, qj) in q.iter_mut().enumerate() {
        qj[j] = 1.0;
        for k in (0..p).rev() {
            let v = &vs[k];
            let vnorm2: f64 = v.iter().map(|t| t * t).sum();
            let s: f64 = v.iter().zip(&qj[k..]).map(|(vi, ci)| vi * ci).sum::<f64>() * 2.0 / vnorm2;
            for (ci, vi) in qj[k..].iter_mut().zip(v) {
                *ci -= s * vi;
            }
        }
    }
    Ok(Qr { r, q })
}

/// Solves `R b = c` for upper-triangular `R`.
pub fn back_substitute(r: &[Vec<f64>], c: &[f64]) -> Vec<f64> {
    let p = c.len();
    let mut b = vec![0.0; p];
    for i in (0..p).rev() {
        let s: f64 = (i + 1..p).map(|j| r[i][j] * b[j]).sum();
        b[i] = (c[i] - s) / r[i][i];
    }
    b
}

/// Solves `Rᵀ v = x` for upper-triangular `R`.
pub fn forward_substitute_transposed(r: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    let p = x.len();
    let mut v = vec![0.0; p];
    for i in 0..p {
        let s: f64 = (0..i).map(|j| r[j][i] * v[j]).sum();
        v[i] = (x[i] - s) / r[i][i];
    }
    v
}

/// Least-squares fit with intercept plus every diagnostic used downstream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedLinearModel {
    /// Names of the non-intercept columns.
    pub terms: Vec<String>,
    /// Intercept first, then one per term.
    pub coefficients: Vec<f64>,
    pub transform: TransformSpec,
    pub n: usize,
    /// Number of coefficients, intercept included.
    pub p: usize,
    /// Response in transformed units.
    pub response: Vec<f64>,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Internally studentised residuals.
    pub std_residuals: Vec<f64>,
    pub leverage: Vec<f64>,
    pub cooks_distance: Vec<f64>,
    pub rss: f64,
    pub sigma2: f64,
    pub r2: f64,
    pub aic: f64,
    /// Upper-triangular factor of the design, for interval estimates.
    pub r_factor: Vec<Vec<f64>>,
    pub column_min: Vec<f64>,
    pub column_max: Vec<f64>,
}

/// Gaussian AIC up to constants: `n ln(RSS/n) + 2(p + 1)`.
pub fn aic(n: usize, rss: f64, p: usize) -> f64 {
    n as f64 * (rss / n as f64).ln() + 2.0 * (p as f64 + 1.0)
}

/// Fits `transform(y) ~ 1 + columns`.
pub fn fit_ols(
    columns: &[Vec<f64>],
    names: &[String],
    y: &[f64],
    transform: TransformSpec,
) -> Result<FittedLinearModel> {
    if columns.len() != names.len() {
        return Err(Error::LengthMismatch {
            expected: columns.len(),
            actual: names.len(),
        });
    }
    let n = y.len();
    if let Some(c) = columns.iter().find(|c| c.len() != n) {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: c.len(),
        });
    }
    let p = columns.len() + 1;
    if n <= p {
        return Err(Error::InsufficientData(format!(
            "{n} observations cannot support {p} coefficients"
        )));
    }
    if columns.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "design or response contains non-finite values".into(),
        ));
    }
    let t = transform.forward_all(y)?;
    let mut design = Vec::with_capacity(p);
    design.push(vec![1.0; n]);
    design.extend(columns.iter().cloned());
    let qr = householder_qr(&design).map_err(|k| Error::RankDeficient {
        column: if k == 0 {
            INTERCEPT.to_string()
        } else {
            names[k - 1].clone()
        },
    })?;

    let qty: Vec<f64> =
        qr.q.iter()
            .map(|qj| qj.iter().zip(&t).map(|(a, b)| a * b).sum())
            .collect();
    let coefficients = back_substitute(&qr.r, &qty);
    let fitted: Vec<f64> = (0..n)
        .map(|i| {
            design
                .iter()
                .zip(&coefficients)
                .map(|(c, b)| c[i] * b)
                .sum()
        })
        .collect();
    let residuals: Vec<f64> = t.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let rss: f64 = residuals.iter().map(|e| e * e).sum();
    let leverage: Vec<f64> = (0..n)
        .map(|i| qr.q.iter().map(|qj| qj[i] * qj[i]).sum())
        .collect();
    let sigma2 = rss / (n - p) as f64;
    let sigma = sigma2.sqrt();
    let std_residuals: Vec<f64> = residuals
        .iter()
        .zip(&leverage)
        .map(|(e, h)| {
            if sigma > 0.0 && 1.0 - h > 1e-12 {
                e / (sigma * (1.0 - h).sqrt())
            } else {
                0.0
            }
        })
        .collect();
    let cooks_distance = std_residuals
        .iter()
        .zip(&leverage)
        .map(|(r, h)| {
            if 1.0 - h > 1e-12 {
                r * r * h / (p as f64 * (1.0 - h))
            } else {
                0.0
            }
        })
        .collect();
    let mean = t.iter().sum::<f64>() / n as f64;
    let tss: f64 = t.iter().map(|v| (v - mean).powi(2)).sum();
    let r2 = if tss > 0.0 {
        (1.0 - rss / tss).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let column_min = columns
        .iter()
        .map(|c| c.iter().copied().fold(f64::INFINITY, f64::min))
        .collect();
    let column_max = columns
        .iter()
        .map(|c| c.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    Ok(FittedLinearModel {
        terms: names.to_vec(),
        coefficients,
        transform,
        n,
        p,
        response: t,
        fitted,
        residuals,
        std_residuals,
        leverage,
        cooks_distance,
        rss,
        sigma2,
        r2,
        aic: aic(n, rss, p),
        r_factor: qr.r,
        column_min,
        column_max,
    })
}

impl FittedLinearModel {
    /// Prediction in transformed units for one row of term values.
    pub fn predict_transformed(&self, x: &[f64]) -> f64 {
        self.coefficients[0]
            + self.coefficients[1..]
                .iter()
                .zip(x)
                .map(|(b, v)| b * v)
                .sum::<f64>()
    }

    /// Leave-one-out residuals `e_i / (1 − h_ii)`.
    pub fn press_residuals(&self) -> Vec<f64> {
        self.residuals
            .iter()
            .zip(&self.leverage)
            .map(|(e, h)| e / (1.0 - h))
            .collect()
    }

    /// Points with Cook's distance above `4/n`.
    pub fn cook_flags(&self) -> Vec<usize> {
        let cut = 4.0 / self.n as f64;
        (0..self.n)
            .filter(|&i| self.cooks_distance[i] > cut)
            .collect()
    }

    /// Points with |standardised residual| above 2.5.
    pub fn outlier_flags(&self) -> Vec<usize> {
        (0..self.n)
            .filter(|&i| self.std_residuals[i].abs() > 2.5)
            .collect()
    }
}
