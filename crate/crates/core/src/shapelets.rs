//! Shapelet discovery and the shapelet transform.
//!
//! Every subsequence of the training series within the configured length
//! range is a candidate. Candidates are scored by the information gain of
//! the best threshold split of their distances to the training series; the
//! top `k` that do not overlap a better shapelet from the same series are
//! kept. The transform re-encodes a series as its distance to each shapelet.

use std::fs::File;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{BoneKind, TwStage};
use crate::error::{Error, Result};
use crate::outline::RadialSeries;

/// Windows with variance below this normalise to all zeros.
pub const VARIANCE_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shapelet {
    /// z-normalised subsequence.
    pub values: Vec<f64>,
    pub series_index: usize,
    pub offset: usize,
    /// Information gain in bits.
    pub quality: f64,
}

impl Shapelet {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn overlaps(&self, series_index: usize, offset: usize, len: usize) -> bool {
        self.series_index == series_index
            && offset < self.offset + self.len()
            && self.offset < offset + len
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShapeletConfig {
    pub min_len: usize,
    pub max_len: usize,
    pub k: usize,
}

impl ShapeletConfig {
    /// Lengths 9..=36 and `k = min(100, 10 × classes)`.
    pub fn default_for(n_classes: usize) -> Self {
        Self {
            min_len: 9,
            max_len: 36,
            k: (10 * n_classes).min(100),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeletTransformModel {
    pub config: ShapeletConfig,
    /// Ordered by descending quality.
    pub shapelets: Vec<Shapelet>,
}

/// z-normalises `w` with the population standard deviation.
pub fn z_normalize(w: &[f64]) -> Vec<f64> {
    let n = w.len() as f64;
    let mean = w.iter().sum::<f64>() / n;
    let var = w.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if var < VARIANCE_GUARD {
        return vec![0.0; w.len()];
    }
    let sd = var.sqrt();
    w.iter().map(|v| (v - mean) / sd).collect()
}

/// All z-normalised windows of length `len`, concatenated.
fn windows(series: &[f64], len: usize) -> Vec<f64> {
    series.windows(len).flat_map(z_normalize).collect()
}

/// Squared distance sum, abandoned once it reaches `cutoff`.
fn early_abandon_ssd(a: &[f64], b: &[f64], cutoff: f64) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += (x - y) * (x - y);
        if acc >= cutoff {
            return acc;
        }
    }
    acc
}

/// Minimum length-normalised squared distance between `shape` and any
/// window in a precomputed window block.
fn min_distance(shape: &[f64], block: &[f64]) -> f64 {
    let len = shape.len();
    let mut best = f64::INFINITY;
    for w in block.chunks_exact(len) {
        let d = early_abandon_ssd(shape, w, best);
        if d < best {
            best = d;
        }
    }
    best / len as f64
}

/// Distance from a (z-normalised) shapelet to a raw series.
pub fn shapelet_distance(shape: &[f64], series: &[f64]) -> Result<f64> {
    if shape.is_empty() || series.len() < shape.len() {
        return Err(Error::LengthMismatch {
            expected: shape.len(),
            actual: series.len(),
        });
    }
    Ok(min_distance(shape, &windows(series, shape.len())))
}

fn entropy(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / t;
            -p * p.log2()
        })
        .sum()
}

/// Best information gain over all thresholds between distinct distances.
/// Returns the gain and the threshold (midpoint) achieving it.
pub fn best_split(distances: &[f64], labels: &[usize], n_classes: usize) -> (f64, Option<f64>) {
    let mut order: Vec<usize> = (0..distances.len()).collect();
    order.sort_by(|&a, &b| distances[a].total_cmp(&distances[b]));
    let mut right = vec![0usize; n_classes];
    for &l in labels {
        right[l] += 1;
    }
    let parent = entropy(&right);
    let n = distances.len() as f64;
    let mut left = vec![0usize; n_classes];
    let mut best = (0.0, None);
    for w in 0..order.len().saturating_sub(1) {
        let i = order[w];
        left[labels[i]] += 1;
        right[labels[i]] -= 1;
        let (d, next) = (distances[i], distances[order[w + 1]]);
        if d == next {
            continue;
        }
        let nl = (w + 1) as f64;
        let gain = parent - (nl / n) * entropy(&left) - ((n - nl) / n) * entropy(&right);
        if gain > best.0 {
            best = (gain, Some(0.5 * (d + next)));
        }
    }
    best
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    quality: f64,
    series: usize,
    offset: usize,
    len: usize,
}

/// Finds the top `k` shapelets. Candidate order is quality descending, then
/// series index, offset and length ascending.
pub fn discover_shapelets(
    train: &[Vec<f64>],
    labels: &[TwStage],
    config: ShapeletConfig,
) -> Result<ShapeletTransformModel> {
    if labels.len() != train.len() {
        return Err(Error::LengthMismatch {
            expected: train.len(),
            actual: labels.len(),
        });
    }
    if train.is_empty() {
        return Err(Error::InsufficientData("no training series".into()));
    }
    let ShapeletConfig {
        min_len,
        max_len,
        k,
    } = config;
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let shortest = train.iter().map(Vec::len).min().unwrap_or(0);
    if min_len < 3 || min_len > max_len {
        return Err(Error::InvalidParameter(format!(
            "shapelet lengths {min_len}..={max_len} must satisfy 3 ≤ min ≤ max"
        )));
    }
    if max_len > shortest {
        return Err(Error::InvalidParameter(format!(
            "maximum shapelet length {max_len} exceeds the shortest series ({shortest})"
        )));
    }
    let mut classes = labels.to_vec();
    classes.sort();
    classes.dedup();
    let class_idx: Vec<usize> = labels
        .iter()
        .map(|l| classes.binary_search(l).unwrap())
        .collect();
    let n_classes = classes.len();

    let mut candidates = Vec::new();
    for len in min_len..=max_len {
        let blocks: Vec<Vec<f64>> = train.par_iter().map(|s| windows(s, len)).collect();
        let scored: Vec<Candidate> = (0..train.len())
            .into_par_iter()
            .flat_map_iter(|si| {
                let blocks = &blocks;
                let class_idx = &class_idx;
                let n_off = train[si].len() - len + 1;
                (0..n_off).map(move |off| {
                    let shape = &blocks[si][off * len..(off + 1) * len];
                    let dists: Vec<f64> = blocks.iter().map(|b| min_distance(shape, b)).collect();
                    let (quality, _) = best_split(&dists, class_idx, n_classes);
                    Candidate {
                        quality,
                        series: si,
                        offset: off,
                        len,
                    }
                })
            })
            .collect();
        candidates.extend(scored);
    }
    if candidates.is_empty() {
        return Err(Error::InsufficientData("no shapelet candidates".into()));
    }
    candidates.sort_by(|a, b| {
        b.quality
            .total_cmp(&a.quality)
            .then(a.series.cmp(&b.series))
            .then(a.offset.cmp(&b.offset))
            .then(a.len.cmp(&b.len))
    });

    let mut shapelets: Vec<Shapelet> = Vec::new();
    for c in candidates {
        if shapelets.len() == k {
            break;
        }
        if shapelets
            .iter()
            .any(|s| s.overlaps(c.series, c.offset, c.len))
        {
            continue;
        }
        shapelets.push(Shapelet {
            values: z_normalize(&train[c.series][c.offset..c.offset + c.len]),
            series_index: c.series,
            offset: c.offset,
            quality: c.quality,
        });
    }
    Ok(ShapeletTransformModel { config, shapelets })
}

/// Labelled wrapper over [`discover_shapelets`].
pub fn discover_from_series(
    train: &[RadialSeries],
    config: ShapeletConfig,
) -> Result<ShapeletTransformModel> {
    let labels = train
        .iter()
        .map(|s| {
            s.label.ok_or_else(|| {
                Error::InsufficientData(format!(
                    "series '{}' {} has no stage label",
                    s.subject_id, s.bone
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<Vec<f64>> = train.iter().map(|s| s.values.clone()).collect();
    discover_shapelets(&values, &labels, config)
}

/// n × k matrix of distances from each series to each shapelet.
pub fn shapelet_transform(
    model: &ShapeletTransformModel,
    batch: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    batch
        .par_iter()
        .map(|s| {
            model
                .shapelets
                .iter()
                .map(|sh| shapelet_distance(&sh.values, s))
                .collect()
        })
        .collect()
}

/// A transformed series with its identifying columns.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedRow {
    pub values: Vec<f64>,
    pub label: Option<TwStage>,
    pub subject_id: String,
    pub bone: BoneKind,
}

pub fn transform_series(
    model: &ShapeletTransformModel,
    batch: &[RadialSeries],
) -> Result<Vec<TransformedRow>> {
    let values: Vec<Vec<f64>> = batch.iter().map(|s| s.values.clone()).collect();
    let matrix = shapelet_transform(model, &values)?;
    Ok(matrix
        .into_iter()
        .zip(batch)
        .map(|(values, s)| TransformedRow {
            values,
            label: s.label,
            subject_id: s.subject_id.clone(),
            bone: s.bone,
        })
        .collect())
}

pub fn transformed_to_csv(rows: &[TransformedRow], k: usize, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_writer(File::create(path)?);
    let mut header: Vec<String> = (1..=k).map(|j| format!("s{j}")).collect();
    header.extend(["tw_stage", "subject_id", "bone"].map(String::from));
    w.write_record(&header)?;
    for r in rows {
        if r.values.len() != k {
            return Err(Error::LengthMismatch {
                expected: k,
                actual: r.values.len(),
            });
        }
        let mut rec: Vec<String> = r.values.iter().map(|v| v.to_string()).collect();
        rec.push(r.label.map(|l| l.to_string()).unwrap_or_default());
        rec.push(r.subject_id.clone());
        rec.push(r.bone.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
