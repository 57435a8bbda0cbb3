use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use super::ols::{householder_qr, FittedLinearModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalityTests {
    pub shapiro_wilk: Option<TestResult>,
    pub dagostino_skew: Option<TestResult>,
    pub jarque_bera: Option<TestResult>,
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// Pearson correlation; zero when either side has no variance.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return 0.0;
    }
    (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)
}

/// Two-sided p-value of `H0: rho = 0` for a sample correlation.
pub fn correlation_p_value(r: f64, n: usize) -> f64 {
    if n < 3 {
        return 1.0;
    }
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let df = (n - 2) as f64;
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive df");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

/// Correlation between |standardised residual| and the response on the
/// original (untransformed) scale, with a two-sided t-test p-value.
pub fn heteroscedasticity_check(model: &FittedLinearModel) -> TestResult {
    let abs_r: Vec<f64> = model.std_residuals.iter().map(|r| r.abs()).collect();
    let y: Vec<f64> = model
        .response
        .iter()
        .map(|&t| model.transform.inverse(t))
        .collect();
    let r = pearson(&abs_r, &y);
    TestResult {
        statistic: r,
        p_value: correlation_p_value(r, model.n),
    }
}

fn moments(x: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let m = |k: i32| x.iter().map(|v| (v - mean).powi(k)).sum::<f64>() / n;
    (m(2), m(3), m(4))
}

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &v| acc * x + v)
}

/// Shapiro-Wilk W with Royston's approximation to its null distribution.
pub fn shapiro_wilk(x: &[f64]) -> Result<TestResult> {
    let n = x.len();
    if !(3..=5000).contains(&n) {
        return Err(Error::InsufficientData(format!(
            "Shapiro-Wilk needs 3..=5000 values, got {n}"
        )));
    }
    let mut xs = x.to_vec();
    xs.sort_by(f64::total_cmp);
    let (m2, _, _) = moments(&xs);
    if m2 <= 0.0 {
        return Err(Error::Numeric(
            "Shapiro-Wilk is undefined for a constant sample".into(),
        ));
    }
    let nf = n as f64;
    let norm = std_normal();
    let m: Vec<f64> = (1..=n)
        .map(|i| norm.inverse_cdf((i as f64 - 0.375) / (nf + 0.25)))
        .collect();
    let mm: f64 = m.iter().map(|v| v * v).sum();
    let mut a = vec![0.0; n];
    if n == 3 {
        a[0] = -std::f64::consts::FRAC_1_SQRT_2;
        a[2] = std::f64::consts::FRAC_1_SQRT_2;
    } else {
        const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056];
        const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
        let u = 1.0 / nf.sqrt();
        let an = m[n - 1] / mm.sqrt() + poly(&C1, u);
        let (phi, tail) = if n > 5 {
            let an1 = m[n - 2] / mm.sqrt() + poly(&C2, u);
            let phi = (mm - 2.0 * m[n - 1].powi(2) - 2.0 * m[n - 2].powi(2))
                / (1.0 - 2.0 * an * an - 2.0 * an1 * an1);
            a[n - 2] = an1;
            a[1] = -an1;
            (phi, 2)
        } else {
            ((mm - 2.0 * m[n - 1].powi(2)) / (1.0 - 2.0 * an * an), 1)
        };
        a[n - 1] = an;
        a[0] = -an;
        for i in tail..n - tail {
            a[i] = m[i] / phi.sqrt();
        }
    }
    let num: f64 = a
        .iter()
        .zip(&xs)
        .map(|(ai, xi)| ai * xi)
        .sum::<f64>()
        .powi(2);
    let w = (num / (m2 * nf)).min(1.0);

    let p = if n == 3 {
        let p = 6.0 / std::f64::consts::PI * (w.sqrt().asin() - (0.75f64).sqrt().asin());
        p.clamp(0.0, 1.0)
    } else {
        let w1 = (1.0 - w).ln();
        let (y, mu, sigma) = if n <= 11 {
            let gamma = poly(&[-2.273, 0.459], nf);
            if w1 >= gamma {
                return Ok(TestResult {
                    statistic: w,
                    p_value: 0.0,
                });
            }
            (
                -(gamma - w1).ln(),
                poly(&[0.5440, -0.39978, 0.025054, -6.714e-4], nf),
                poly(&[1.3822, -0.77857, 0.062767, -0.0020322], nf).exp(),
            )
        } else {
            let ln_n = nf.ln();
            (
                w1,
                poly(&[-1.5861, -0.31082, -0.083751, 0.0038915], ln_n),
                poly(&[-0.4803, -0.082676, 0.0030302], ln_n).exp(),
            )
        };
        norm.sf((y - mu) / sigma)
    };
    Ok(TestResult {
        statistic: w,
        p_value: p,
    })
}

/// D'Agostino's test of skewness (normal approximation of the sample skew).
pub fn dagostino_skew(x: &[f64]) -> Result<TestResult> {
    let n = x.len();
    if n < 8 {
        return Err(Error::InsufficientData(format!(
            "D'Agostino skewness test needs at least 8 values, got {n}"
        )));
    }
    let (m2, m3, _) = moments(x);
    if m2 <= 0.0 {
        return Err(Error::Numeric(
            "skewness is undefined for a constant sample".into(),
        ));
    }
    let nf = n as f64;
    let b2 = m3 / m2.powf(1.5);
    let y = b2 * ((nf + 1.0) * (nf + 3.0) / (6.0 * (nf - 2.0))).sqrt();
    let beta2 = 3.0 * (nf * nf + 27.0 * nf - 70.0) * (nf + 1.0) * (nf + 3.0)
        / ((nf - 2.0) * (nf + 5.0) * (nf + 7.0) * (nf + 9.0));
    let w2 = -1.0 + (2.0 * (beta2 - 1.0)).sqrt();
    let delta = 1.0 / (0.5 * w2.ln()).sqrt();
    let alpha = (2.0 / (w2 - 1.0)).sqrt();
    let z = delta * (y / alpha).asinh();
    Ok(TestResult {
        statistic: z,
        p_value: (2.0 * std_normal().sf(z.abs())).min(1.0),
    })
}

/// Jarque-Bera statistic `n/6 (S² + (K − 3)²/4)` with its χ²(2) p-value.
pub fn jarque_bera(x: &[f64]) -> Result<TestResult> {
    let n = x.len();
    if n < 3 {
        return Err(Error::InsufficientData(format!(
            "Jarque-Bera needs at least 3 values, got {n}"
        )));
    }
    let (m2, m3, m4) = moments(x);
    if m2 <= 0.0 {
        return Err(Error::Numeric(
            "Jarque-Bera is undefined for a constant sample".into(),
        ));
    }
    let s = m3 / m2.powf(1.5);
    let k = m4 / (m2 * m2);
    let jb = n as f64 / 6.0 * (s * s + (k - 3.0).powi(2) / 4.0);
    Ok(TestResult {
        statistic: jb,
        p_value: (-jb / 2.0).exp(),
    })
}

/// The three normality tests on a model's residuals. A test whose sample
/// size requirement is not met is reported as absent.
pub fn normality_tests(model: &FittedLinearModel) -> NormalityTests {
    let r = &model.residuals;
    NormalityTests {
        shapiro_wilk: shapiro_wilk(r).ok(),
        dagostino_skew: dagostino_skew(r).ok(),
        jarque_bera: jarque_bera(r).ok(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxCoxProfile {
    pub lambda: f64,
    /// `(λ, log-likelihood)` for every grid point, in grid order.
    pub curve: Vec<(f64, f64)>,
}

/// Profile log-likelihood of the Box-Cox parameter for the regression of
/// `y − shift` on `1 + design`. Ties go to the earlier grid point.
pub fn boxcox_profile(
    y: &[f64],
    shift: f64,
    grid: &[f64],
    design: &[Vec<f64>],
) -> Result<BoxCoxProfile> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty λ grid".into()));
    }
    let n = y.len();
    if let Some(c) = design.iter().find(|c| c.len() != n) {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: c.len(),
        });
    }
    if n <= design.len() + 1 {
        return Err(Error::InsufficientData(format!(
            "{n} observations for {} coefficients",
            design.len() + 1
        )));
    }
    let v: Vec<f64> = y.iter().map(|&yi| yi - shift).collect();
    if let Some(bad) = v.iter().find(|&&vi| !(vi > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "shifted response {bad} is not positive"
        )));
    }
    let mut cols = vec![vec![1.0; n]];
    cols.extend(design.iter().cloned());
    let q = householder_qr(&cols)
        .map_err(|k| Error::RankDeficient {
            column: if k == 0 {
                "(intercept)".into()
            } else {
                format!("x{k}")
            },
        })?
        .q;
    let log_sum: f64 = v.iter().map(|vi| vi.ln()).sum();
    let nf = n as f64;
    let mut curve = Vec::with_capacity(grid.len());
    for &lambda in grid {
        let t: Vec<f64> = v
            .iter()
            .map(|vi| {
                if lambda == 0.0 {
                    vi.ln()
                } else {
                    (vi.powf(lambda) - 1.0) / lambda
                }
            })
            .collect();
        let mut e = t.clone();
        for qj in &q {
            let c: f64 = qj.iter().zip(&t).map(|(a, b)| a * b).sum();
            for (ei, qi) in e.iter_mut().zip(qj) {
                *ei -= c * qi;
            }
        }
        let rss: f64 = e.iter().map(|x| x * x).sum::<f64>().max(f64::MIN_POSITIVE);
        curve.push((
            lambda,
            -nf / 2.0 * (rss / nf).ln() + (lambda - 1.0) * log_sum,
        ));
    }
    let mut best = 0;
    for (k, c) in curve.iter().enumerate() {
        if c.1 > curve[best].1 {
            best = k;
        }
    }
    Ok(BoxCoxProfile {
        lambda: curve[best].0,
        curve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regress::{fit_ols, TransformSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal as RNormal};

    const SAMPLE20: [f64; 20] = [
        0.5, 1.5, 1.2, 2.8, 3.3, 0.1, 4.9, 2.2, 1.8, 1.1, 0.7, 2.6, 3.9, 5.5, 0.2, 1.9, 2.4, 3.1,
        6.8, 0.9,
    ];

    #[test]
    fn shapiro_three_evenly_spaced_is_one() {
        let r = shapiro_wilk(&[1.0, 2.0, 3.0]).unwrap();
        assert!((r.statistic - 1.0).abs() < 1e-12);
        assert!((r.p_value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn shapiro_reference_values() {
        // Reference values from an established statistics library.
        let cases: [(&[f64], f64, f64); 4] = [
            (&[1.0, 2.0, 4.0], 0.9642857142857142, 0.6368868450289689),
            (
                &[2.1, 3.4, 1.9, 5.6, 4.4],
                0.9320849391953863,
                0.6106559022604845,
            ),
            (
                &[1.0, 3.0, 2.0, 8.0, 5.0, 4.0, 7.0, 9.0, 12.0, 3.5, 6.0, 2.2],
                0.94957733237883,
                0.630813596610369,
            ),
            (&SAMPLE20, 0.9278891494840869, 0.14061812647364758),
        ];
        for (x, w, p) in cases {
            let r = shapiro_wilk(x).unwrap();
            assert!(
                (r.statistic - w).abs() < 1e-5,
                "{x:?}: W {} vs {w}",
                r.statistic
            );
            assert!(
                (r.p_value - p).abs() < 1e-4,
                "{x:?}: p {} vs {p}",
                r.p_value
            );
        }
    }

    #[test]
    fn skew_and_jb_reference_values() {
        let s = dagostino_skew(&SAMPLE20).unwrap();
        assert!((s.statistic - 1.8615589544204312).abs() < 1e-10);
        assert!((s.p_value - 0.06266528342064856).abs() < 1e-10);
        let jb = jarque_bera(&SAMPLE20).unwrap();
        assert!((jb.statistic - 2.6315477268947327).abs() < 1e-10);
        assert!((jb.p_value - 0.2682666411430812).abs() < 1e-10);
    }

    #[test]
    fn small_samples_rejected_per_test() {
        assert!(dagostino_skew(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]).is_err());
        assert!(shapiro_wilk(&[1.0, 2.0]).is_err());
        assert!(jarque_bera(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn jb_zero_for_symmetric_mesokurtic_sample() {
        // Mean 0, S = 0, and K = (2/6) / (2/6)² = 3.
        let x = [-1.0, 0.0, 0.0, 0.0, 0.0, 1.0];
        let r = jarque_bera(&x).unwrap();
        assert!(r.statistic.abs() < 1e-12);
    }

    #[test]
    fn jb_rejects_bimodal() {
        let x: Vec<f64> = (0..200)
            .map(|i| if i % 2 == 0 { -1.0 } else { 1.0 } + (i as f64 * 0.37).sin() * 0.05)
            .collect();
        assert!(jarque_bera(&x).unwrap().p_value < 0.01);
    }

    fn line_data(seed: u64, n: usize, hetero: bool) -> (Vec<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = RNormal::new(0.0, 1.0).unwrap();
        let x: Vec<f64> = (0..n)
            .map(|i| 1.0 + 19.0 * i as f64 / (n - 1) as f64)
            .collect();
        let y = x
            .iter()
            .map(|&v| {
                let mean = 5.0 + 2.0 * v;
                mean + if hetero { 0.1 * mean } else { 1.0 } * z.sample(&mut rng)
            })
            .collect();
        (x, y)
    }

    #[test]
    fn heteroscedastic_residuals_detected() {
        let (x, y) = line_data(3, 200, true);
        let m = fit_ols(&[x], &["x".into()], &y, TransformSpec::Identity).unwrap();
        assert!(heteroscedasticity_check(&m).p_value < 0.05);
    }

    #[test]
    fn iid_residuals_mostly_pass() {
        let passes = (0..100)
            .filter(|&s| {
                let (x, y) = line_data(s, 80, false);
                let m = fit_ols(&[x], &["x".into()], &y, TransformSpec::Identity).unwrap();
                heteroscedasticity_check(&m).p_value > 0.05
            })
            .count();
        assert!(passes >= 90, "{passes}/100");
    }

    #[test]
    fn constant_abs_residuals_give_zero_r() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        assert_eq!(pearson(&[0.7; 6], &x), 0.0);
        assert_eq!(correlation_p_value(0.0, 6), 1.0);
    }

    fn profile_oracle(v: &[f64], x: &[f64], lambda: f64) -> f64 {
        // Closed-form simple regression RSS.
        let n = v.len() as f64;
        let t: Vec<f64> = v
            .iter()
            .map(|vi| {
                if lambda == 0.0 {
                    vi.ln()
                } else {
                    (vi.powf(lambda) - 1.0) / lambda
                }
            })
            .collect();
        let mx = x.iter().sum::<f64>() / n;
        let mt = t.iter().sum::<f64>() / n;
        let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
        let sxt: f64 = x.iter().zip(&t).map(|(a, b)| (a - mx) * (b - mt)).sum();
        let stt: f64 = t.iter().map(|b| (b - mt).powi(2)).sum();
        let rss = stt - sxt * sxt / sxx;
        -n / 2.0 * (rss / n).ln() + (lambda - 1.0) * v.iter().map(|vi| vi.ln()).sum::<f64>()
    }

    #[test]
    fn boxcox_linear_data_prefers_one() {
        let (x, y) = line_data(11, 300, false);
        let y: Vec<f64> = y.iter().map(|v| v + 20.0).collect();
        let grid: Vec<f64> = (0..=20).map(|k| k as f64 * 0.1).collect();
        let prof = boxcox_profile(&y, 0.0, &grid, std::slice::from_ref(&x)).unwrap();
        for &(l, ll) in &prof.curve {
            assert!((ll - profile_oracle(&y, &x, l)).abs() < 1e-6 * ll.abs().max(1.0));
        }
        assert!((prof.lambda - 1.0).abs() <= 0.2 + 1e-12, "{}", prof.lambda);
    }

    #[test]
    fn boxcox_exponential_data_prefers_log() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let z = RNormal::new(0.0, 0.2).unwrap();
        let x: Vec<f64> = (0..300).map(|i| i as f64 / 100.0).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|v| (0.5 + 0.8 * v + z.sample(&mut rng)).exp())
            .collect();
        let grid: Vec<f64> = (-10..=20).map(|k| k as f64 * 0.1).collect();
        let prof = boxcox_profile(&y, 0.0, &grid, &[x]).unwrap();
        assert!(prof.lambda.abs() <= 0.2 + 1e-12, "{}", prof.lambda);
    }

    #[test]
    fn boxcox_singleton_grid_and_errors() {
        let (x, y) = line_data(2, 30, false);
        let y: Vec<f64> = y.iter().map(|v| v + 20.0).collect();
        assert_eq!(
            boxcox_profile(&y, 0.0, &[0.67], std::slice::from_ref(&x))
                .unwrap()
                .lambda,
            0.67
        );
        assert!(boxcox_profile(&y, 1e6, &[0.67], &[x]).is_err());
    }
}
