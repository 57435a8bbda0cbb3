//! Classifiers over fixed-width feature matrices.
//!
//! Rows of `x` are instances. Every fitted model reports per-class scores
//! that sum to one; predicted labels are the highest-scoring class, with
//! ties going to the lower stage.

mod bayes;
mod forest;
mod knn;
mod svm;
mod tree;

pub use bayes::GaussianNb;
pub use forest::RandomForest;
pub use knn::Knn;
pub use svm::{Kernel, Svm, SvmParams};
pub use tree::{DecisionTree, TreeParams};

use serde::{Deserialize, Serialize};

use crate::data::TwStage;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    Knn,
    NaiveBayes,
    DecisionTree,
    RandomForest,
    SvmLinear,
    SvmQuadratic,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 6] = [
        ClassifierKind::Knn,
        ClassifierKind::NaiveBayes,
        ClassifierKind::DecisionTree,
        ClassifierKind::RandomForest,
        ClassifierKind::SvmLinear,
        ClassifierKind::SvmQuadratic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::Knn => "knn",
            ClassifierKind::NaiveBayes => "naive_bayes",
            ClassifierKind::DecisionTree => "decision_tree",
            ClassifierKind::RandomForest => "random_forest",
            ClassifierKind::SvmLinear => "svm_linear",
            ClassifierKind::SvmQuadratic => "svm_quadratic",
        }
    }
}

impl std::str::FromStr for ClassifierKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == norm)
            .or(match norm.as_str() {
                "nb" | "bayes" => Some(ClassifierKind::NaiveBayes),
                "tree" | "c45" => Some(ClassifierKind::DecisionTree),
                "forest" | "rf" => Some(ClassifierKind::RandomForest),
                "svml" => Some(ClassifierKind::SvmLinear),
                "svmq" => Some(ClassifierKind::SvmQuadratic),
                _ => None,
            })
            .ok_or_else(|| Error::InvalidParameter(format!("unknown classifier '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Classifier {
    Knn(Knn),
    NaiveBayes(GaussianNb),
    DecisionTree(DecisionTree),
    RandomForest(RandomForest),
    Svm(Svm),
}

/// Fits `kind` with its default hyperparameters.
pub fn fit(kind: ClassifierKind, x: &[Vec<f64>], y: &[TwStage], seed: u64) -> Result<Classifier> {
    Ok(match kind {
        ClassifierKind::Knn => Classifier::Knn(Knn::fit(x, y, seed)?),
        ClassifierKind::NaiveBayes => Classifier::NaiveBayes(GaussianNb::fit(x, y)?),
        ClassifierKind::DecisionTree => {
            Classifier::DecisionTree(DecisionTree::fit(x, y, &TreeParams::default())?)
        }
        ClassifierKind::RandomForest => {
            Classifier::RandomForest(RandomForest::fit(x, y, 100, seed)?)
        }
        ClassifierKind::SvmLinear => {
            Classifier::Svm(Svm::fit(x, y, &SvmParams::new(Kernel::Linear))?)
        }
        ClassifierKind::SvmQuadratic => {
            Classifier::Svm(Svm::fit(x, y, &SvmParams::new(Kernel::Quadratic))?)
        }
    })
}

impl Classifier {
    pub fn classes(&self) -> &[TwStage] {
        match self {
            Classifier::Knn(m) => &m.classes,
            Classifier::NaiveBayes(m) => &m.classes,
            Classifier::DecisionTree(m) => &m.classes,
            Classifier::RandomForest(m) => &m.classes,
            Classifier::Svm(m) => &m.classes,
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            Classifier::Knn(m) => m.n_features(),
            Classifier::NaiveBayes(m) => m.n_features(),
            Classifier::DecisionTree(m) => m.n_features,
            Classifier::RandomForest(m) => m.n_features,
            Classifier::Svm(m) => m.n_features(),
        }
    }

    /// One probability vector per row, over [`Classifier::classes`].
    pub fn predict_scores(&self, x: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        check_width(x, self.n_features())?;
        Ok(match self {
            Classifier::Knn(m) => x.iter().map(|r| m.scores(r)).collect(),
            Classifier::NaiveBayes(m) => x.iter().map(|r| m.scores(r)).collect(),
            Classifier::DecisionTree(m) => x.iter().map(|r| m.scores(r)).collect(),
            Classifier::RandomForest(m) => x.iter().map(|r| m.scores(r)).collect(),
            Classifier::Svm(m) => x.iter().map(|r| m.scores(r)).collect(),
        })
    }

    pub fn predict(&self, x: &[Vec<f64>]) -> Result<Vec<TwStage>> {
        check_width(x, self.n_features())?;
        Ok(match self {
            Classifier::Svm(m) => x.iter().map(|r| m.predict_one(r)).collect(),
            _ => {
                let classes = self.classes();
                self.predict_scores(x)?
                    .iter()
                    .map(|s| classes[argmax(s)])
                    .collect()
            }
        })
    }
}

/// Index of the largest value; the first wins ties.
pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in v.iter().enumerate() {
        if s > v[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn check_width(x: &[Vec<f64>], m: usize) -> Result<()> {
    match x.iter().find(|r| r.len() != m) {
        Some(r) => Err(Error::LengthMismatch {
            expected: m,
            actual: r.len(),
        }),
        None => Ok(()),
    }
}

/// Validated training data with labels mapped to class indices.
pub(crate) struct Encoded {
    pub classes: Vec<TwStage>,
    pub y: Vec<usize>,
    pub n_features: usize,
}

pub(crate) fn encode(x: &[Vec<f64>], y: &[TwStage]) -> Result<Encoded> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData(
            "at least two training instances are required".into(),
        ));
    }
    let m = x[0].len();
    if m == 0 {
        return Err(Error::InsufficientData(
            "feature matrix has no columns".into(),
        ));
    }
    check_width(x, m)?;
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "feature matrix contains non-finite values".into(),
        ));
    }
    let mut classes = y.to_vec();
    classes.sort();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::InsufficientData(
            "training labels contain a single class".into(),
        ));
    }
    let y = y
        .iter()
        .map(|l| classes.binary_search(l).unwrap())
        .collect();
    Ok(Encoded {
        classes,
        y,
        n_features: m,
    })
}
