//! Elastic distance measures and the accuracy-weighted 1-NN ensemble built
//! on them.

mod ensemble;
mod measures;

pub use ensemble::{
    default_grids, predict_elastic, train_elastic_ensemble, ElasticEnsembleModel, EnsembleMember,
    Prediction,
};
pub use measures::{
    dtw, erp, euclidean, lcss, msm, msm_split_cost, twed, wdtw, window_cells, ElasticMeasure,
};

use crate::error::Result;

/// Distance between two series under `m`.
pub fn elastic_distance(m: &ElasticMeasure, a: &[f64], b: &[f64]) -> Result<f64> {
    m.distance(a, b)
}
