use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, StudentsT};
use statrs::function::beta::{beta_reg, inv_beta_reg};

use super::diagnostics::{heteroscedasticity_check, normality_tests, NormalityTests, TestResult};
use super::ols::{forward_substitute_transposed, FittedLinearModel};
use super::stepwise::stepwise_aic;
use super::transform::TransformSpec;
use crate::data::{BoneKind, Ethnicity, Sex};
use crate::error::{Error, Result};
use crate::features::{FeatureRow, ShapeFeatures};

/// Response power used by every epiphysis-present model.
pub const EPIPHYSIS_POWER: f64 = 0.67;
/// A fused prediction is discarded when it is further than this from both
/// other predictions.
pub const DISCORDANCE_YEARS: f64 = 2.0;

/// Demographic dummies offered to stepwise selection. Male and Caucasian are
/// the reference levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorSet {
    #[default]
    None,
    Sex,
    SexEthnicity,
}

impl FromStr for FactorSet {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(FactorSet::None),
            "sex" => Ok(FactorSet::Sex),
            "sex+ethnicity" | "sex_ethnicity" | "sex-ethnicity" => Ok(FactorSet::SexEthnicity),
            other => Err(Error::InvalidParameter(format!(
                "unknown factor set '{other}'"
            ))),
        }
    }
}

impl FactorSet {
    pub fn dummies(self) -> &'static [&'static str] {
        match self {
            FactorSet::None => &[],
            FactorSet::Sex => &["s"],
            FactorSet::SexEthnicity => &["s", "a", "f", "h"],
        }
    }
}

/// Candidate main effects for one stratum: f2..f25 with an epiphysis,
/// f2..f15 without, then the enabled factor dummies.
pub fn candidate_pool(epiphysis: bool, factors: FactorSet) -> Vec<String> {
    let last = if epiphysis { 25 } else { 15 };
    (2..=last)
        .map(ShapeFeatures::column_name)
        .chain(factors.dummies().iter().map(|s| s.to_string()))
        .collect()
}

fn base_value(name: &str, row: &FeatureRow) -> Result<f64> {
    if let Some(k) = name.strip_prefix('f').and_then(|d| d.parse::<usize>().ok()) {
        if (1..=crate::features::N_FEATURES).contains(&k) {
            return Ok(row.features.get(k));
        }
    }
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    match name {
        "s" => Ok(flag(row.sex == Sex::F)),
        "a" => Ok(flag(row.ethnicity == Ethnicity::ASI)),
        "f" => Ok(flag(row.ethnicity == Ethnicity::BLK)),
        "h" => Ok(flag(row.ethnicity == Ethnicity::HIS)),
        other => Err(Error::InvalidParameter(format!(
            "unknown regression term '{other}'"
        ))),
    }
}

/// Value of a term such as `f3`, `s` or `f3:f7` for one row.
pub fn term_value(term: &str, row: &FeatureRow) -> Result<f64> {
    term.split(':')
        .try_fold(1.0, |acc, part| Ok(acc * base_value(part, row)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionInterval {
    pub level: f64,
    /// Point prediction and bounds in transformed units.
    pub fit_transformed: f64,
    pub lo_transformed: f64,
    pub hi_transformed: f64,
    /// The same three values back-transformed to years.
    pub fit: f64,
    pub lo: f64,
    pub hi: f64,
    /// Some term lies outside the range seen in training.
    pub extrapolated: bool,
}

/// `t` with `P(|T| ≤ t) = level` for Student's t with `df` degrees of freedom.
pub fn t_two_sided_quantile(level: f64, df: usize) -> Result<f64> {
    if df == 0 {
        return Err(Error::InsufficientData(
            "no residual degrees of freedom".into(),
        ));
    }
    let d = df as f64;
    let y = inv_beta_reg(0.5, d / 2.0, level);
    let mut t = (d * y / (1.0 - y)).sqrt();
    let density = StudentsT::new(0.0, 1.0, d).map_err(|e| Error::Numeric(e.to_string()))?;
    for _ in 0..3 {
        let mass = beta_reg(0.5, d / 2.0, t * t / (d + t * t));
        t -= (mass - level) / (2.0 * density.pdf(t));
    }
    Ok(t)
}

struct IntervalInputs<'a> {
    coefficients: &'a [f64],
    r_factor: &'a [Vec<f64>],
    sigma2: f64,
    df: usize,
    transform: TransformSpec,
    column_min: &'a [f64],
    column_max: &'a [f64],
}

fn interval(m: IntervalInputs<'_>, x: &[f64], level: f64) -> Result<PredictionInterval> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "interval level {level} must lie in (0, 1)"
        )));
    }
    if x.len() + 1 != m.coefficients.len() {
        return Err(Error::LengthMismatch {
            expected: m.coefficients.len() - 1,
            actual: x.len(),
        });
    }
    let mut x0 = vec![1.0];
    x0.extend_from_slice(x);
    let fit_t: f64 = m.coefficients.iter().zip(&x0).map(|(b, v)| b * v).sum();
    let v = forward_substitute_transposed(m.r_factor, &x0);
    let vv: f64 = v.iter().map(|a| a * a).sum();
    let t = t_two_sided_quantile(level, m.df)?;
    let half = t * (m.sigma2 * (1.0 + vv)).sqrt();
    let extrapolated = x
        .iter()
        .zip(m.column_min.iter().zip(m.column_max))
        .any(|(v, (lo, hi))| v < lo || v > hi);
    let (lo_t, hi_t) = (fit_t - half, fit_t + half);
    Ok(PredictionInterval {
        level,
        fit_transformed: fit_t,
        lo_transformed: lo_t,
        hi_transformed: hi_t,
        fit: m.transform.inverse(fit_t),
        lo: m.transform.inverse(lo_t),
        hi: m.transform.inverse(hi_t),
        extrapolated,
    })
}

/// t-based prediction interval for a new row of term values.
pub fn prediction_interval(
    model: &FittedLinearModel,
    x: &[f64],
    level: f64,
) -> Result<PredictionInterval> {
    interval(
        IntervalInputs {
            coefficients: &model.coefficients,
            r_factor: &model.r_factor,
            sigma2: model.sigma2,
            df: model.n - model.p,
            transform: model.transform,
            column_min: &model.column_min,
            column_max: &model.column_max,
        },
        x,
        level,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDiagnostics {
    pub n: usize,
    pub r2: f64,
    pub aic: f64,
    pub rss: f64,
    pub aic_path: Vec<f64>,
    pub heteroscedasticity: TestResult,
    pub normality: NormalityTests,
    /// Subjects with Cook's distance above 4/n.
    pub cook_flags: Vec<String>,
    /// Subjects with |standardised residual| above 2.5.
    pub outlier_flags: Vec<String>,
}

/// One stratum's fitted model in the form needed for prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoneModel {
    pub bone: BoneKind,
    pub epiphysis: bool,
    pub terms: Vec<String>,
    /// Intercept first.
    pub coefficients: Vec<f64>,
    pub transform: TransformSpec,
    pub r_factor: Vec<Vec<f64>>,
    pub sigma2: f64,
    pub df: usize,
    pub column_min: Vec<f64>,
    pub column_max: Vec<f64>,
    pub diagnostics: ModelDiagnostics,
}

impl BoneModel {
    pub fn design_row(&self, row: &FeatureRow) -> Result<Vec<f64>> {
        self.terms.iter().map(|t| term_value(t, row)).collect()
    }

    pub fn predict(&self, row: &FeatureRow, level: f64) -> Result<PredictionInterval> {
        let x = self.design_row(row)?;
        interval(
            IntervalInputs {
                coefficients: &self.coefficients,
                r_factor: &self.r_factor,
                sigma2: self.sigma2,
                df: self.df,
                transform: self.transform,
                column_min: &self.column_min,
                column_max: &self.column_max,
            },
            &x,
            level,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoneAgeModelBank {
    pub factors: FactorSet,
    /// Distal, middle, proximal; epiphysis-present before absent.
    pub models: Vec<BoneModel>,
}

impl BoneAgeModelBank {
    pub fn model(&self, bone: BoneKind, epiphysis: bool) -> Option<&BoneModel> {
        self.models
            .iter()
            .find(|m| m.bone == bone && m.epiphysis == epiphysis)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        serde_json::to_writer_pretty(File::create(path)?, self)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_reader(std::io::BufReader::new(
            File::open(path)?,
        ))?)
    }
}

/// Leave-one-out prediction for one training record, in years.
#[derive(Debug, Clone, PartialEq)]
pub struct LooPrediction {
    pub subject_id: String,
    pub bone: BoneKind,
    pub age_years: f64,
    pub predicted: f64,
}

#[derive(Debug, Clone)]
pub struct BankFit {
    pub bank: BoneAgeModelBank,
    pub fits: Vec<FittedLinearModel>,
    pub loo: Vec<LooPrediction>,
}

/// Fits the six stratum models and their leave-one-out predictions. The
/// selected terms are held fixed for the leave-one-out step.
pub fn fit_bone_bank(rows: &[FeatureRow], factors: FactorSet) -> Result<BankFit> {
    let mut models = Vec::with_capacity(6);
    let mut fits = Vec::with_capacity(6);
    let mut loo = Vec::new();
    for bone in BoneKind::ALL {
        for epiphysis in [true, false] {
            let subset: Vec<&FeatureRow> = rows
                .iter()
                .filter(|r| r.bone == bone && r.features.epiphysis_present() == epiphysis)
                .collect();
            let label = if epiphysis { "with" } else { "without" };
            if subset.len() < 3 {
                return Err(Error::InsufficientData(format!(
                    "{bone} bones {label} epiphysis: {} records, need at least 3",
                    subset.len()
                )));
            }
            let names = candidate_pool(epiphysis, factors);
            let pool: Vec<Vec<f64>> = names
                .iter()
                .map(|nm| {
                    subset
                        .iter()
                        .map(|r| term_value(nm, r))
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<_>>()?;
            let y: Vec<f64> = subset.iter().map(|r| r.age_years).collect();
            let transform = if epiphysis {
                TransformSpec::Power {
                    lambda: EPIPHYSIS_POWER,
                }
            } else {
                TransformSpec::Identity
            };
            let step = stepwise_aic(&pool, &names, &y, transform, true).map_err(|e| match e {
                Error::InsufficientData(m) => {
                    Error::InsufficientData(format!("{bone} bones {label} epiphysis: {m}"))
                }
                other => other,
            })?;
            let m = step.model;
            let ids = |idx: Vec<usize>| {
                idx.into_iter()
                    .map(|i| subset[i].subject_id.clone())
                    .collect()
            };
            let diagnostics = ModelDiagnostics {
                n: m.n,
                r2: m.r2,
                aic: m.aic,
                rss: m.rss,
                aic_path: step.aic_path,
                heteroscedasticity: heteroscedasticity_check(&m),
                normality: normality_tests(&m),
                cook_flags: ids(m.cook_flags()),
                outlier_flags: ids(m.outlier_flags()),
            };
            for ((r, t), press) in subset.iter().zip(&m.response).zip(m.press_residuals()) {
                loo.push(LooPrediction {
                    subject_id: r.subject_id.clone(),
                    bone,
                    age_years: r.age_years,
                    predicted: m.transform.inverse(t - press),
                });
            }
            models.push(BoneModel {
                bone,
                epiphysis,
                terms: m.terms.clone(),
                coefficients: m.coefficients.clone(),
                transform: m.transform,
                r_factor: m.r_factor.clone(),
                sigma2: m.sigma2,
                df: m.n - m.p,
                column_min: m.column_min.clone(),
                column_max: m.column_max.clone(),
                diagnostics,
            });
            fits.push(m);
        }
    }
    Ok(BankFit {
        bank: BoneAgeModelBank { factors, models },
        fits,
        loo,
    })
}

pub fn train_bone_bank(rows: &[FeatureRow], factors: FactorSet) -> Result<BoneAgeModelBank> {
    Ok(fit_bone_bank(rows, factors)?.bank)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fusion {
    pub value: f64,
    /// Positions (into the input) of discarded predictions.
    pub discarded: Vec<usize>,
    /// All three predictions were mutually discordant; `value` is the plain mean.
    pub all_discordant: bool,
}

/// Mean of the predictions after dropping any that lies more than two years
/// from both others. The rule needs exactly three predictions.
pub fn fuse_predictions(preds: &[f64]) -> Result<Fusion> {
    if preds.is_empty() {
        return Err(Error::InsufficientData(
            "no bone predictions to fuse".into(),
        ));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    if preds.len() != 3 {
        return Ok(Fusion {
            value: mean(preds),
            discarded: vec![],
            all_discordant: false,
        });
    }
    let far = |a: f64, b: f64| (a - b).abs() > DISCORDANCE_YEARS;
    let discarded: Vec<usize> = (0..3)
        .filter(|&i| (0..3).filter(|&j| j != i).all(|j| far(preds[i], preds[j])))
        .collect();
    if discarded.len() == 3 {
        return Ok(Fusion {
            value: mean(preds),
            discarded,
            all_discordant: true,
        });
    }
    let kept: Vec<f64> = (0..3)
        .filter(|i| !discarded.contains(i))
        .map(|i| preds[i])
        .collect();
    Ok(Fusion {
        value: mean(&kept),
        discarded,
        all_discordant: false,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgePrediction {
    pub subject_id: String,
    /// Indexed by [`BoneKind::index`].
    pub bones: [Option<PredictionInterval>; 3],
    pub fused: f64,
    pub flags: Vec<String>,
}

/// Per-bone predictions and the fused estimate for one subject's records.
pub fn predict_age(
    bank: &BoneAgeModelBank,
    rows: &[&FeatureRow],
    level: f64,
) -> Result<AgePrediction> {
    let Some(first) = rows.first() else {
        return Err(Error::InsufficientData("no bones present".into()));
    };
    let mut bones: [Option<PredictionInterval>; 3] = [None, None, None];
    let mut flags = Vec::new();
    for r in rows {
        if r.subject_id != first.subject_id {
            return Err(Error::Invariant(format!(
                "records of '{}' and '{}' mixed",
                first.subject_id, r.subject_id
            )));
        }
        if bones[r.bone.index()].is_some() {
            return Err(Error::Duplicate {
                subject_id: r.subject_id.clone(),
                bone: r.bone.to_string(),
            });
        }
        let model = bank
            .model(r.bone, r.features.epiphysis_present())
            .ok_or_else(|| {
                Error::Invariant(format!(
                    "model bank has no model for {} bones in this epiphysis state",
                    r.bone
                ))
            })?;
        let p = model.predict(r, level)?;
        if p.extrapolated {
            flags.push(format!("extrapolated:{}", r.bone));
        }
        if model.transform.out_of_range(p.fit_transformed) {
            flags.push(format!("out_of_range:{}", r.bone));
        }
        bones[r.bone.index()] = Some(p);
    }
    let present: Vec<(BoneKind, f64)> = BoneKind::ALL
        .iter()
        .filter_map(|&b| bones[b.index()].as_ref().map(|p| (b, p.fit)))
        .collect();
    let values: Vec<f64> = present.iter().map(|(_, v)| *v).collect();
    let fusion = fuse_predictions(&values)?;
    if fusion.all_discordant {
        flags.push("all_discordant".into());
    } else {
        for &i in &fusion.discarded {
            flags.push(format!("discarded:{}", present[i].0));
        }
    }
    Ok(AgePrediction {
        subject_id: first.subject_id.clone(),
        bones,
        fused: fusion.value,
        flags,
    })
}

/// Groups rows by subject (first-appearance order) and predicts each.
pub fn predict_ages(
    bank: &BoneAgeModelBank,
    rows: &[FeatureRow],
    level: f64,
) -> Result<Vec<AgePrediction>> {
    subjects(rows)
        .into_iter()
        .map(|(_, group)| predict_age(bank, &group, level))
        .collect()
}

fn subjects(rows: &[FeatureRow]) -> Vec<(String, Vec<&FeatureRow>)> {
    let mut order: Vec<(String, Vec<&FeatureRow>)> = Vec::new();
    let mut index: BTreeMap<&str, usize> = BTreeMap::new();
    for r in rows {
        let k = *index.entry(&r.subject_id).or_insert_with(|| {
            order.push((r.subject_id.clone(), Vec::new()));
            order.len() - 1
        });
        order[k].1.push(r);
    }
    order
}

/// Per-subject `(subject_id, age, fused LOO prediction)` in first-appearance order.
pub fn fused_loo(loo: &[LooPrediction]) -> Result<Vec<(String, f64, f64)>> {
    let mut groups: Vec<(String, f64, [Option<f64>; 3])> = Vec::new();
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    for p in loo {
        let k = *index.entry(p.subject_id.clone()).or_insert_with(|| {
            groups.push((p.subject_id.clone(), p.age_years, [None; 3]));
            groups.len() - 1
        });
        groups[k].2[p.bone.index()] = Some(p.predicted);
    }
    groups
        .into_iter()
        .map(|(id, age, preds)| {
            let v: Vec<f64> = preds.iter().flatten().copied().collect();
            Ok((id, age, fuse_predictions(&v)?.value))
        })
        .collect()
}

pub fn age_predictions_header() -> Vec<&'static str> {
    vec![
        "subject_id",
        "pred_distal",
        "pred_middle",
        "pred_proximal",
        "fused",
        "flags",
        "lo_distal",
        "hi_distal",
        "lo_middle",
        "hi_middle",
        "lo_proximal",
        "hi_proximal",
    ]
}

pub fn write_age_predictions(preds: &[AgePrediction], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_writer(File::create(path)?);
    w.write_record(age_predictions_header())?;
    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for p in preds {
        let mut rec = vec![p.subject_id.clone()];
        rec.extend(p.bones.iter().map(|b| cell(b.as_ref().map(|i| i.fit))));
        rec.push(p.fused.to_string());
        rec.push(p.flags.join(";"));
        for b in &p.bones {
            rec.push(cell(b.as_ref().map(|i| i.lo)));
            rec.push(cell(b.as_ref().map(|i| i.hi)));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regress::fit_ols;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn fusion_examples() {
        let f = fuse_predictions(&[5.0, 5.5, 9.0]).unwrap();
        assert_eq!(f.value, 5.25);
        assert_eq!(f.discarded, vec![2]);
        assert_eq!(fuse_predictions(&[5.0, 8.0]).unwrap().value, 6.5);
        let f = fuse_predictions(&[4.0, 6.1, 8.2]).unwrap();
        assert!(f.all_discordant);
        assert!((f.value - 6.1).abs() < 1e-12);
        assert!(fuse_predictions(&[]).is_err());
    }

    #[test]
    fn fusion_permutation_invariant() {
        let p = [5.0, 5.5, 9.0];
        for perm in [
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ] {
            let q: Vec<f64> = perm.iter().map(|&i| p[i]).collect();
            assert_eq!(fuse_predictions(&q).unwrap().value, 5.25);
        }
    }

    #[test]
    fn pools_and_terms() {
        let e = candidate_pool(true, FactorSet::SexEthnicity);
        assert_eq!(e.len(), 24 + 4);
        assert!(e.contains(&"f25".to_string()) && e.contains(&"a".to_string()));
        let p = candidate_pool(false, FactorSet::None);
        assert_eq!(p.first().unwrap(), "f2");
        assert_eq!(p.last().unwrap(), "f15");
        assert_eq!(
            "sex+ethnicity".parse::<FactorSet>().unwrap(),
            FactorSet::SexEthnicity
        );
        assert!("age".parse::<FactorSet>().is_err());
    }

    fn line(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = Normal::new(0.0, 0.5).unwrap();
        let x: Vec<f64> = (0..n).map(|i| i as f64 / n as f64 * 10.0).collect();
        let y = x
            .iter()
            .map(|v| 3.0 + 0.8 * v + z.sample(&mut rng))
            .collect();
        (x, y)
    }

    #[test]
    fn interval_centred_at_mean_and_collapses() {
        let (x, y) = line(40, 1);
        let m = fit_ols(
            std::slice::from_ref(&x),
            &["x".into()],
            &y,
            TransformSpec::Identity,
        )
        .unwrap();
        let xbar = x.iter().sum::<f64>() / 40.0;
        let ybar = y.iter().sum::<f64>() / 40.0;
        let pi = prediction_interval(&m, &[xbar], 0.95).unwrap();
        assert!((pi.fit - ybar).abs() < 1e-10);
        assert!(((pi.hi - pi.fit) - (pi.fit - pi.lo)).abs() < 1e-10);
        let tiny = prediction_interval(&m, &[xbar], 1e-12).unwrap();
        assert!((tiny.hi - tiny.lo).abs() < 1e-9, "{} {}", tiny.lo, tiny.hi);
        assert!(prediction_interval(&m, &[xbar], 1.0).is_err());
        assert!(prediction_interval(&m, &[50.0], 0.95).unwrap().extrapolated);
        assert!(!pi.extrapolated);
    }

    #[test]
    fn t_quantile_reference_values() {
        // 97.5th percentiles of Student's t.
        for (df, q) in [
            (1, 12.706204736432095),
            (5, 2.5705818356363146),
            (30, 2.042272456301238),
        ] {
            assert!((t_two_sided_quantile(0.95, df).unwrap() - q).abs() < 1e-9);
        }
        assert!(t_two_sided_quantile(1e-12, 10).unwrap() < 1e-11);
    }

    #[test]
    fn interval_coverage_near_nominal() {
        let (x, _) = line(30, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let z = Normal::new(0.0, 0.5).unwrap();
        let x_new = 7.3;
        let mut hits = 0;
        for _ in 0..1000 {
            let y: Vec<f64> = x
                .iter()
                .map(|v| 3.0 + 0.8 * v + z.sample(&mut rng))
                .collect();
            let m = fit_ols(
                std::slice::from_ref(&x),
                &["x".into()],
                &y,
                TransformSpec::Identity,
            )
            .unwrap();
            let pi = prediction_interval(&m, &[x_new], 0.95).unwrap();
            let y_new = 3.0 + 0.8 * x_new + z.sample(&mut rng);
            hits += (pi.lo <= y_new && y_new <= pi.hi) as usize;
        }
        let cov = hits as f64 / 1000.0;
        assert!((cov - 0.95).abs() <= 0.03, "coverage {cov}");
    }

    #[test]
    fn power_interval_back_transforms_monotonically() {
        let (x, y) = line(40, 3);
        let m = fit_ols(
            &[x],
            &["x".into()],
            &y,
            TransformSpec::Power {
                lambda: EPIPHYSIS_POWER,
            },
        )
        .unwrap();
        let pi = prediction_interval(&m, &[5.0], 0.9).unwrap();
        assert!(pi.lo < pi.fit && pi.fit < pi.hi);
        assert!((pi.fit - pi.fit_transformed.powf(1.0 / EPIPHYSIS_POWER)).abs() < 1e-12);
    }

    #[test]
    fn press_matches_refit() {
        let (x, y) = line(15, 8);
        let m = fit_ols(
            std::slice::from_ref(&x),
            &["x".into()],
            &y,
            TransformSpec::Identity,
        )
        .unwrap();
        let press = m.press_residuals();
        for i in [0, 7, 14] {
            let xs: Vec<f64> = (0..15).filter(|&k| k != i).map(|k| x[k]).collect();
            let ys: Vec<f64> = (0..15).filter(|&k| k != i).map(|k| y[k]).collect();
            let r = fit_ols(&[xs], &["x".into()], &ys, TransformSpec::Identity).unwrap();
            assert!((y[i] - r.predict_transformed(&[x[i]]) - press[i]).abs() < 1e-8);
        }
    }
}
