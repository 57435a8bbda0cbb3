//! Cross-validation splitters, classification and regression metrics,
//! McNemar's test, and report emission.

mod cv;
mod mcnemar;
mod metrics;
mod report;

pub use cv::{fold_members, loocv, stratified_kfold};
pub use mcnemar::{mcnemar, McNemar};
pub use metrics::{
    classification_metrics, regression_metrics, ClassificationMetrics, ConfusionMatrix,
    RegressionMetrics,
};
pub use report::{emit_report, emit_scatter, EvaluationReport, FoldTrace, GroupMetrics};
