use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::measures::{window_cells, ElasticMeasure};
use crate::data::TwStage;
use crate::error::{Error, Result};
use crate::evalkit::{loocv, stratified_kfold};
use crate::outline::RadialSeries;

/// One 1-NN classifier of the ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleMember {
    pub measure: ElasticMeasure,
    /// Cross-validated training accuracy of this member, in `[0, 1]`.
    pub weight: f64,
    /// Out-of-fold prediction for every training instance.
    #[serde(skip)]
    pub cv_predictions: Vec<TwStage>,
}

/// Accuracy-weighted ensemble of 1-NN classifiers sharing one reference set.
///
/// Only the indices of the reference series are serialised; the series
/// themselves live in the CSV the model was trained from and are restored
/// with [`ElasticEnsembleModel::attach_references`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElasticEnsembleModel {
    pub members: Vec<EnsembleMember>,
    pub classes: Vec<TwStage>,
    pub reference_indices: Vec<usize>,
    pub folds: usize,
    pub seed: u64,
    /// Training CV accuracy of the combined vote.
    pub cv_accuracy: f64,
    #[serde(skip)]
    references: Vec<Vec<f64>>,
    #[serde(skip)]
    labels: Vec<TwStage>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub stage: TwStage,
    /// Normalised vote share for each model class, in stage order.
    pub scores: Vec<(TwStage, f64)>,
}

/// Grids used when the caller supplies none: DTW and WDTW over 101 values,
/// LCSS and ERP over five thresholds by five bands scaled by the training
/// standard deviation and series length, TWED over 6 stiffness by 9 penalty
/// values, MSM over 10 log-spaced costs.
pub fn default_grids(train: &[Vec<f64>]) -> Vec<Vec<ElasticMeasure>> {
    let all: Vec<f64> = train.iter().flatten().copied().collect();
    let n = train.first().map_or(0, Vec::len);
    let mean = all.iter().sum::<f64>() / all.len().max(1) as f64;
    let sigma =
        (all.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / all.len().max(1) as f64).sqrt();
    let fifths: Vec<f64> = (1..=5).map(|k| sigma * k as f64 / 5.0).collect();
    let bands: Vec<usize> = (1..=5).map(|k| window_cells(0.05 * k as f64, n)).collect();

    let dtw = (0..=100)
        .map(|k| ElasticMeasure::Dtw {
            window: k as f64 / 100.0,
        })
        .collect();
    let wdtw = (0..=100)
        .map(|k| ElasticMeasure::Wdtw {
            g: k as f64 / 100.0,
        })
        .collect();
    let mut lcss = Vec::new();
    let mut erp = Vec::new();
    for &e in &fifths {
        for &b in &bands {
            lcss.push(ElasticMeasure::Lcss {
                epsilon: e,
                band: Some(b),
            });
            erp.push(ElasticMeasure::Erp {
                gap: e,
                band: Some(b),
            });
        }
    }
    let mut twed = Vec::new();
    for p in -5..=0 {
        for l in 0..=8 {
            twed.push(ElasticMeasure::Twed {
                stiffness: 10f64.powi(p),
                penalty: 0.25 * l as f64,
            });
        }
    }
    let msm = (0..10)
        .map(|k| ElasticMeasure::Msm {
            cost: 10f64.powf(-2.0 + 4.0 * k as f64 / 9.0),
        })
        .collect();
    vec![dtw, wdtw, lcss, erp, twed, msm]
}

/// Full symmetric distance matrix, row-major.
fn pairwise(series: &[Vec<f64>], m: &ElasticMeasure) -> Vec<f64> {
    let n = series.len();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i + 1..n)
                .map(|j| m.distance_unchecked(&series[i], &series[j]))
                .collect()
        })
        .collect();
    let mut d = vec![0.0; n * n];
    for (i, row) in upper.iter().enumerate() {
        for (k, &v) in row.iter().enumerate() {
            let j = i + 1 + k;
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    d
}

/// Out-of-fold 1-NN predictions; ties go to the lowest reference index.
fn cv_predict(dist: &[f64], labels: &[TwStage], folds: &[usize]) -> Vec<TwStage> {
    let n = labels.len();
    (0..n)
        .map(|i| {
            let mut best: Option<(f64, usize)> = None;
            for j in 0..n {
                if folds[j] == folds[i] {
                    continue;
                }
                let d = dist[i * n + j];
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, j));
                }
            }
            labels[best.map_or(i, |(_, j)| j)]
        })
        .collect()
}

fn accuracy(pred: &[TwStage], truth: &[TwStage]) -> f64 {
    pred.iter().zip(truth).filter(|(p, t)| p == t).count() as f64 / truth.len() as f64
}

/// Weighted vote. Contributions are summed in a canonical order so the
/// result does not depend on member order; ties go to the lower stage.
fn vote(classes: &[TwStage], votes: &[(TwStage, f64)]) -> Prediction {
    let uniform = votes.iter().all(|(_, w)| *w <= 0.0);
    let mut sorted: Vec<(TwStage, f64)> = votes
        .iter()
        .map(|&(s, w)| (s, if uniform { 1.0 } else { w.max(0.0) }))
        .collect();
    sorted.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut scores: Vec<(TwStage, f64)> = classes.iter().map(|&c| (c, 0.0)).collect();
    for (s, w) in sorted {
        if let Some(slot) = scores.iter_mut().find(|(c, _)| *c == s) {
            slot.1 += w;
        }
    }
    let total: f64 = scores.iter().map(|(_, w)| w).sum();
    if total > 0.0 {
        for s in &mut scores {
            s.1 /= total;
        }
    }
    let mut best = 0;
    for (k, s) in scores.iter().enumerate() {
        if s.1 > scores[best].1 {
            best = k;
        }
    }
    Prediction {
        stage: scores[best].0,
        scores,
    }
}

fn combine(members: &[EnsembleMember], classes: &[TwStage], n: usize) -> Vec<TwStage> {
    (0..n)
        .map(|i| {
            let votes: Vec<(TwStage, f64)> = members
                .iter()
                .map(|m| (m.cv_predictions[i], m.weight))
                .collect();
            vote(classes, &votes).stage
        })
        .collect()
}

/// Grid-searches each member's parameters by stratified CV of 1-NN and
/// weights members by their best CV accuracy. `folds == 1` means
/// leave-one-out.
pub fn train_elastic_ensemble(
    train: &[RadialSeries],
    folds: usize,
    grids: &[Vec<ElasticMeasure>],
    seed: u64,
) -> Result<ElasticEnsembleModel> {
    if grids.is_empty() || grids.iter().any(Vec::is_empty) {
        return Err(Error::InvalidParameter(
            "every ensemble member needs a non-empty parameter grid".into(),
        ));
    }
    for m in grids.iter().flatten() {
        m.validate()?;
    }
    let labels: Vec<TwStage> = train
        .iter()
        .map(|s| {
            s.label.ok_or_else(|| {
                Error::InsufficientData(format!(
                    "training series for '{}' {} has no stage label",
                    s.subject_id, s.bone
                ))
            })
        })
        .collect::<Result<_>>()?;
    let mut classes = labels.clone();
    classes.sort();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::InsufficientData(
            "training set needs at least two stages".into(),
        ));
    }
    if folds == 0 {
        return Err(Error::InvalidParameter(
            "fold count must be at least 1".into(),
        ));
    }
    if folds > 1 {
        for c in &classes {
            let count = labels.iter().filter(|l| *l == c).count();
            if count < folds {
                return Err(Error::InsufficientData(format!(
                    "stage {c} has {count} training series, fewer than {folds} folds"
                )));
            }
        }
    }
    let series: Vec<Vec<f64>> = train.iter().map(|s| s.values.clone()).collect();
    let len = series[0].len();
    if let Some(bad) = series.iter().find(|s| s.len() != len) {
        return Err(Error::LengthMismatch {
            expected: len,
            actual: bad.len(),
        });
    }
    let assignment = if folds == 1 {
        loocv(labels.len())
    } else {
        stratified_kfold(&labels, folds, seed)?
    };

    let members = grids
        .iter()
        .map(|grid| {
            let mut best: Option<(f64, ElasticMeasure, Vec<TwStage>)> = None;
            for m in grid {
                let pred = cv_predict(&pairwise(&series, m), &labels, &assignment);
                let acc = accuracy(&pred, &labels);
                if best.as_ref().is_none_or(|(b, _, _)| acc > *b) {
                    best = Some((acc, *m, pred));
                }
            }
            let (weight, measure, cv_predictions) = best.expect("grid is non-empty");
            log::debug!(
                "{} selected {measure:?} with CV accuracy {weight:.4}",
                measure.name()
            );
            EnsembleMember {
                measure,
                weight,
                cv_predictions,
            }
        })
        .collect::<Vec<_>>();

    let combined = combine(&members, &classes, labels.len());
    let cv_accuracy = accuracy(&combined, &labels);

    Ok(ElasticEnsembleModel {
        members,
        classes,
        reference_indices: (0..series.len()).collect(),
        folds,
        seed,
        cv_accuracy,
        references: series,
        labels,
    })
}

impl ElasticEnsembleModel {
    /// Restores the reference series from the set the model was trained on.
    pub fn attach_references(&mut self, series: &[RadialSeries]) -> Result<()> {
        let mut refs = Vec::with_capacity(self.reference_indices.len());
        let mut labels = Vec::with_capacity(self.reference_indices.len());
        for &i in &self.reference_indices {
            let s = series.get(i).ok_or_else(|| {
                Error::Invariant(format!(
                    "reference index {i} beyond the {} supplied series",
                    series.len()
                ))
            })?;
            let label = s.label.ok_or_else(|| {
                Error::InsufficientData(format!("reference series {i} has no stage label"))
            })?;
            refs.push(s.values.clone());
            labels.push(label);
        }
        self.references = refs;
        self.labels = labels;
        Ok(())
    }

    pub fn has_references(&self) -> bool {
        !self.references.is_empty()
    }

    /// Out-of-fold predictions of each member, when the model was trained in
    /// this process.
    pub fn member_cv_predictions(&self) -> Vec<&[TwStage]> {
        self.members
            .iter()
            .map(|m| m.cv_predictions.as_slice())
            .collect()
    }

    /// Out-of-fold predictions of the combined vote; empty unless the model
    /// was trained in this process.
    pub fn combined_cv_predictions(&self) -> Vec<TwStage> {
        if self.labels.is_empty()
            || self
                .members
                .iter()
                .any(|m| m.cv_predictions.len() != self.labels.len())
        {
            return Vec::new();
        }
        combine(&self.members, &self.classes, self.labels.len())
    }

    pub fn training_labels(&self) -> &[TwStage] {
        &self.labels
    }
}

/// Weighted 1-NN vote of every member.
pub fn predict_elastic(model: &ElasticEnsembleModel, query: &[f64]) -> Result<Prediction> {
    if model.references.is_empty() {
        return Err(Error::Invariant(
            "ensemble has no reference series attached".into(),
        ));
    }
    let len = model.references[0].len();
    if query.len() != len {
        return Err(Error::LengthMismatch {
            expected: len,
            actual: query.len(),
        });
    }
    let votes: Vec<(TwStage, f64)> = model
        .members
        .iter()
        .map(|m| {
            let mut best = (f64::INFINITY, 0);
            for (j, r) in model.references.iter().enumerate() {
                let d = m.measure.distance_unchecked(query, r);
                if d < best.0 {
                    best = (d, j);
                }
            }
            (model.labels[best.1], m.weight)
        })
        .collect();
    Ok(vote(&model.classes, &votes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::BoneKind;

    fn series(values: Vec<f64>, label: TwStage) -> RadialSeries {
        RadialSeries {
            values,
            label: Some(label),
            subject_id: "x".into(),
            bone: BoneKind::Distal,
        }
    }

    fn small_grids() -> Vec<Vec<ElasticMeasure>> {
        vec![
            vec![
                ElasticMeasure::Dtw { window: 0.0 },
                ElasticMeasure::Dtw { window: 0.2 },
            ],
            vec![ElasticMeasure::Wdtw { g: 0.05 }],
            vec![ElasticMeasure::Lcss {
                epsilon: 0.5,
                band: Some(2),
            }],
            vec![ElasticMeasure::Erp {
                gap: 0.0,
                band: Some(2),
            }],
            vec![ElasticMeasure::Twed {
                stiffness: 0.001,
                penalty: 0.5,
            }],
            vec![ElasticMeasure::Msm { cost: 0.1 }],
        ]
    }

    #[test]
    fn separable_constants_give_unit_weights() {
        let mut train = Vec::new();
        for k in 0..6 {
            train.push(series(vec![k as f64 * 0.01; 12], TwStage::D));
            train.push(series(vec![100.0 + k as f64 * 0.01; 12], TwStage::G));
        }
        let model = train_elastic_ensemble(&train, 3, &small_grids(), 0).unwrap();
        assert_eq!(model.members.len(), 6);
        for m in &model.members {
            assert_eq!(m.weight, 1.0, "{:?}", m.measure);
        }
        assert_eq!(model.cv_accuracy, 1.0);
        let p = predict_elastic(&model, &[100.02; 12]).unwrap();
        assert_eq!(p.stage, TwStage::G);
        assert_eq!(p.scores, vec![(TwStage::D, 0.0), (TwStage::G, 1.0)]);
    }

    #[test]
    fn one_per_class_loocv_runs() {
        let train = vec![
            series(vec![0.0; 8], TwStage::C),
            series(vec![1.0; 8], TwStage::E),
        ];
        let model = train_elastic_ensemble(&train, 1, &small_grids(), 0).unwrap();
        for m in &model.members {
            assert!((0.0..=1.0).contains(&m.weight));
        }
        // Every weight is zero here, so the vote falls back to uniform weights.
        let p = predict_elastic(&model, &[0.0; 8]).unwrap();
        assert_eq!(p.stage, TwStage::C);
    }

    #[test]
    fn query_equal_to_training_instance() {
        let train: Vec<RadialSeries> = (0..8)
            .map(|k| {
                let v: Vec<f64> = (0..10)
                    .map(|t| ((t * (k + 1)) as f64 * 0.3).sin() * 5.0)
                    .collect();
                series(v, if k % 2 == 0 { TwStage::E } else { TwStage::F })
            })
            .collect();
        let model = train_elastic_ensemble(&train, 2, &small_grids(), 5).unwrap();
        for s in &train {
            assert_eq!(
                predict_elastic(&model, &s.values).unwrap().stage,
                s.label.unwrap()
            );
        }
    }

    #[test]
    fn vote_rules() {
        let classes = [TwStage::E, TwStage::F, TwStage::G];
        let p = vote(&classes, &[(TwStage::F, 0.9), (TwStage::G, 0.1)]);
        assert_eq!(p.stage, TwStage::F);
        assert_eq!(
            p.scores,
            vec![(TwStage::E, 0.0), (TwStage::F, 0.9), (TwStage::G, 0.1)]
        );
        let p = vote(&classes, &[(TwStage::E, 0.7); 4]);
        assert_eq!(p.stage, TwStage::E);
        assert_eq!(p.scores[0].1, 1.0);
        let p = vote(&classes, &[(TwStage::G, 0.5), (TwStage::F, 0.5)]);
        assert_eq!(p.stage, TwStage::F);
    }

    #[test]
    fn vote_invariant_to_member_order() {
        let classes = [TwStage::D, TwStage::E, TwStage::F];
        let votes = [
            (TwStage::D, 0.31),
            (TwStage::E, 0.2),
            (TwStage::D, 0.17),
            (TwStage::F, 0.48),
            (TwStage::E, 0.29),
        ];
        let base = vote(&classes, &votes);
        let mut perm = votes;
        for k in 0..votes.len() {
            perm.rotate_left(1);
            if k % 2 == 0 {
                perm.swap(0, 3);
            }
            assert_eq!(vote(&classes, &perm), base);
        }
    }

    #[test]
    fn training_errors() {
        let one_class = vec![
            series(vec![0.0; 8], TwStage::C),
            series(vec![1.0; 8], TwStage::C),
        ];
        assert!(train_elastic_ensemble(&one_class, 1, &small_grids(), 0).is_err());
        let two = vec![
            series(vec![0.0; 8], TwStage::C),
            series(vec![1.0; 8], TwStage::D),
        ];
        assert!(train_elastic_ensemble(&two, 1, &[vec![]], 0).is_err());
        assert!(train_elastic_ensemble(&two, 2, &small_grids(), 0).is_err());
        let mut unlabeled = two.clone();
        unlabeled[0].label = None;
        assert!(train_elastic_ensemble(&unlabeled, 1, &small_grids(), 0).is_err());
    }

    #[test]
    fn default_grid_sizes() {
        let g = default_grids(&vec![vec![0.0, 1.0, 2.0, 3.0]; 3]);
        let sizes: Vec<usize> = g.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![101, 101, 25, 25, 54, 10]);
        for m in g.iter().flatten() {
            m.validate().unwrap();
        }
    }

    #[test]
    fn json_round_trip_with_references() {
        let train: Vec<RadialSeries> = (0..6)
            .map(|k| {
                series(
                    vec![k as f64; 8],
                    if k < 3 { TwStage::D } else { TwStage::E },
                )
            })
            .collect();
        let model = train_elastic_ensemble(&train, 3, &small_grids(), 0).unwrap();
        let text = serde_json::to_string(&model).unwrap();
        let mut back: ElasticEnsembleModel = serde_json::from_str(&text).unwrap();
        assert!(!back.has_references());
        assert!(predict_elastic(&back, &[0.0; 8]).is_err());
        back.attach_references(&train).unwrap();
        for s in &train {
            assert_eq!(
                predict_elastic(&back, &s.values).unwrap(),
                predict_elastic(&model, &s.values).unwrap()
            );
        }
    }
}
