//! Stage-classification pipelines shared by `train-stage` and `classify`.

use std::fs::File;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{BoneKind, TwStage};
use crate::elastic::{
    default_grids, predict_elastic, train_elastic_ensemble, ElasticEnsembleModel,
};
use crate::error::{Error, Result};
use crate::evalkit::{fold_members, loocv, stratified_kfold};
use crate::learners::{fit, Classifier, ClassifierKind};
use crate::outline::RadialSeries;
use crate::shapelets::{
    discover_shapelets, shapelet_transform, ShapeletConfig, ShapeletTransformModel,
};

/// Input representation of a stage classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    Radial,
    Shapelet,
    Features,
}

/// What sits on top of the representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Elastic,
    Learner(ClassifierKind),
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "elastic" | "ee" | "elastic_ensemble" => Ok(Method::Elastic),
            other => Ok(Method::Learner(other.parse()?)),
        }
    }
}

/// A trained stage classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "pipeline", rename_all = "snake_case")]
pub enum StagePipeline {
    /// A learner on the 25 shape features, or on the raw radial values.
    Vector {
        representation: Representation,
        classifier: Classifier,
    },
    Elastic {
        ensemble: ElasticEnsembleModel,
        references: Vec<Vec<f64>>,
        reference_labels: Vec<TwStage>,
    },
    Shapelet {
        shapelets: ShapeletTransformModel,
        classifier: Classifier,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageModel {
    /// Restricts training and classification to one bone when set.
    pub bone: Option<BoneKind>,
    pub seed: u64,
    pub model: StagePipeline,
}

impl StageModel {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut m: StageModel =
            serde_json::from_reader(std::io::BufReader::new(File::open(path)?))?;
        if let StagePipeline::Elastic {
            ensemble,
            references,
            reference_labels,
        } = &mut m.model
        {
            let series: Vec<RadialSeries> = references
                .iter()
                .zip(reference_labels.iter())
                .map(|(v, l)| RadialSeries {
                    values: v.clone(),
                    label: Some(*l),
                    subject_id: String::new(),
                    bone: BoneKind::Distal,
                })
                .collect();
            ensemble.attach_references(&series)?;
        }
        Ok(m)
    }

    pub fn representation(&self) -> Representation {
        match &self.model {
            StagePipeline::Vector { representation, .. } => *representation,
            StagePipeline::Elastic { .. } => Representation::Radial,
            StagePipeline::Shapelet { .. } => Representation::Shapelet,
        }
    }

    /// Predicted stage and its score for each input vector (feature rows for
    /// the feature representation, radial series otherwise).
    pub fn classify(&self, x: &[Vec<f64>]) -> Result<Vec<(TwStage, f64)>> {
        match &self.model {
            StagePipeline::Vector { classifier, .. } => learner_outputs(classifier, x),
            StagePipeline::Shapelet {
                shapelets,
                classifier,
            } => learner_outputs(classifier, &shapelet_transform(shapelets, x)?),
            StagePipeline::Elastic { ensemble, .. } => x
                .par_iter()
                .map(|q| {
                    let p = predict_elastic(ensemble, q)?;
                    let score = p
                        .scores
                        .iter()
                        .find(|(s, _)| *s == p.stage)
                        .map_or(0.0, |(_, v)| *v);
                    Ok((p.stage, score))
                })
                .collect(),
        }
    }
}

fn learner_outputs(classifier: &Classifier, x: &[Vec<f64>]) -> Result<Vec<(TwStage, f64)>> {
    let stages = classifier.predict(x)?;
    let scores = classifier.predict_scores(x)?;
    let classes = classifier.classes();
    Ok(stages
        .into_iter()
        .zip(scores)
        .map(|(s, sc)| {
            let k = classes.iter().position(|c| *c == s).unwrap_or(0);
            (s, sc.get(k).copied().unwrap_or(0.0))
        })
        .collect())
}

/// Tuning knobs that are not plain command-line flags.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineOptions {
    pub folds: usize,
    pub seed: u64,
    pub shapelet: Option<ShapeletConfig>,
    /// Keep every n-th value of each default elastic grid.
    pub elastic_grid_stride: usize,
}

fn classes_of(y: &[TwStage]) -> usize {
    let mut c = y.to_vec();
    c.sort();
    c.dedup();
    c.len()
}

fn fit_once(
    representation: Representation,
    method: Method,
    x: &[Vec<f64>],
    y: &[TwStage],
    opts: &PipelineOptions,
) -> Result<StagePipeline> {
    match (representation, method) {
        (Representation::Features, Method::Elastic)
        | (Representation::Shapelet, Method::Elastic) => Err(Error::InvalidParameter(
            "the elastic ensemble works on the radial representation only".into(),
        )),
        (Representation::Radial, Method::Elastic) => {
            let stride = opts.elastic_grid_stride.max(1);
            let grids: Vec<_> = default_grids(x)
                .into_iter()
                .map(|g| g.into_iter().step_by(stride).collect())
                .collect();
            let series: Vec<RadialSeries> = x
                .iter()
                .zip(y)
                .map(|(v, l)| RadialSeries {
                    values: v.clone(),
                    label: Some(*l),
                    subject_id: String::new(),
                    bone: BoneKind::Distal,
                })
                .collect();
            let ensemble = train_elastic_ensemble(&series, opts.folds, &grids, opts.seed)?;
            Ok(StagePipeline::Elastic {
                ensemble,
                references: x.to_vec(),
                reference_labels: y.to_vec(),
            })
        }
        (Representation::Shapelet, Method::Learner(kind)) => {
            let config = opts
                .shapelet
                .unwrap_or_else(|| ShapeletConfig::default_for(classes_of(y)));
            let shapelets = discover_shapelets(x, y, config)?;
            let t = shapelet_transform(&shapelets, x)?;
            Ok(StagePipeline::Shapelet {
                shapelets,
                classifier: fit(kind, &t, y, opts.seed)?,
            })
        }
        (rep, Method::Learner(kind)) => Ok(StagePipeline::Vector {
            representation: rep,
            classifier: fit(kind, x, y, opts.seed)?,
        }),
    }
}

/// Trains on everything and returns the model together with out-of-fold
/// predictions and the fold of each instance. The elastic ensemble reports
/// its own internal cross-validation.
pub fn train_stage_pipeline(
    representation: Representation,
    method: Method,
    bone: Option<BoneKind>,
    x: &[Vec<f64>],
    y: &[TwStage],
    opts: &PipelineOptions,
) -> Result<(StageModel, Vec<TwStage>, Vec<usize>)> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    let model = fit_once(representation, method, x, y, opts)?;
    let assignment = if opts.folds == 1 {
        loocv(y.len())
    } else {
        stratified_kfold(y, opts.folds, opts.seed)?
    };
    let cv = match &model {
        StagePipeline::Elastic { ensemble, .. } => ensemble.combined_cv_predictions(),
        _ => {
            let folds = fold_members(&assignment);
            let per_fold: Vec<Vec<(usize, TwStage)>> = folds
                .par_iter()
                .map(|test| {
                    let train: Vec<usize> = (0..y.len())
                        .filter(|i| test.binary_search(i).is_err())
                        .collect();
                    let xt: Vec<Vec<f64>> = train.iter().map(|&i| x[i].clone()).collect();
                    let yt: Vec<TwStage> = train.iter().map(|&i| y[i]).collect();
                    let m = StageModel {
                        bone,
                        seed: opts.seed,
                        model: fit_once(representation, method, &xt, &yt, opts)?,
                    };
                    let xs: Vec<Vec<f64>> = test.iter().map(|&i| x[i].clone()).collect();
                    let pred = m.classify(&xs)?;
                    Ok(test
                        .iter()
                        .copied()
                        .zip(pred.into_iter().map(|(s, _)| s))
                        .collect())
                })
                .collect::<Result<_>>()?;
            let mut out = vec![TwStage::B; y.len()];
            for (i, s) in per_fold.into_iter().flatten() {
                out[i] = s;
            }
            out
        }
    };
    Ok((
        StageModel {
            bone,
            seed: opts.seed,
            model,
        },
        cv,
        assignment,
    ))
}
