//! Fixed-length 1-D radial representation of a bone outline.
//!
//! The phalanx is resampled to 50 points by arc length and the epiphysis to
//! 30; each value is the distance from a sample to its own outline's area
//! centroid. A missing epiphysis contributes 30 zeros.

use std::fs::File;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{BoneKind, BoneRecord, Outline, Point2, TwStage};
use crate::error::{Error, Result};
use crate::features::fit_ellipse_points;
use crate::geometry;

pub const PHALANX_SAMPLES: usize = 50;
pub const EPIPHYSIS_SAMPLES: usize = 30;
pub const SERIES_LEN: usize = PHALANX_SAMPLES + EPIPHYSIS_SAMPLES;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialSeries {
    pub values: Vec<f64>,
    pub label: Option<TwStage>,
    pub subject_id: String,
    pub bone: BoneKind,
}

impl RadialSeries {
    pub fn has_epiphysis(&self) -> bool {
        self.values[PHALANX_SAMPLES..].iter().any(|&v| v != 0.0)
    }
}

/// Index of the vertex where the series starts: the vertex nearest the point
/// where the ray from the centroid along the fitted ellipse's minor axis
/// leaves the outline.
fn start_vertex(points: &[Point2], center: Point2) -> usize {
    let dir = match fit_ellipse_dir(points) {
        Some(major) => Point2::new(-major.y, major.x),
        None => Point2::new(1.0, 0.0),
    };
    let target = geometry::ray_hit(points, center, dir).unwrap_or(points[0]);
    points
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.dist(target).total_cmp(&b.1.dist(target)))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

fn fit_ellipse_dir(points: &[Point2]) -> Option<Point2> {
    fit_ellipse_points(points).ok().map(|f| f.major_dir())
}

/// Distances from `count` arc-length samples to the area centroid, walking
/// clockwise on screen (y down).
fn radial_profile(outline: &Outline, count: usize, what: &str) -> Result<Vec<f64>> {
    let pts = outline.points();
    let signed = geometry::signed_area(pts);
    if !(signed.abs() > 0.0) {
        return Err(Error::Degenerate(format!("{what}: outline has zero area")));
    }
    let ordered: Vec<Point2> = if signed > 0.0 {
        pts.to_vec()
    } else {
        pts.iter().rev().copied().collect()
    };
    let center = geometry::centroid(&ordered);
    let start = start_vertex(&ordered, center);
    Ok(geometry::resample_closed(&ordered, start, count)
        .into_iter()
        .map(|p| p.dist(center))
        .collect())
}

pub fn to_radial_series(rec: &BoneRecord) -> Result<RadialSeries> {
    let what = format!("subject '{}' {}", rec.subject.subject_id, rec.bone);
    let mut values = radial_profile(&rec.phalanx, PHALANX_SAMPLES, &format!("{what} phalanx"))?;
    match &rec.epiphysis {
        Some(epi) => values.extend(radial_profile(
            epi,
            EPIPHYSIS_SAMPLES,
            &format!("{what} epiphysis"),
        )?),
        None => values.extend([0.0; EPIPHYSIS_SAMPLES]),
    }
    Ok(RadialSeries {
        values,
        label: rec.tw_stage,
        subject_id: rec.subject.subject_id.clone(),
        bone: rec.bone,
    })
}

/// Order-preserving parallel conversion.
pub fn to_radial_batch(records: &[BoneRecord]) -> Result<Vec<RadialSeries>> {
    records.par_iter().map(to_radial_series).collect()
}

fn series_header() -> Vec<String> {
    (0..SERIES_LEN)
        .map(|k| format!("v{k}"))
        .chain(["tw_stage", "subject_id", "bone"].map(String::from))
        .collect()
}

pub fn series_to_csv(batch: &[RadialSeries], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_writer(File::create(path)?);
    w.write_record(series_header())?;
    for s in batch {
        if s.values.len() != SERIES_LEN {
            return Err(Error::LengthMismatch {
                expected: SERIES_LEN,
                actual: s.values.len(),
            });
        }
        let mut rec: Vec<String> = s.values.iter().map(|v| v.to_string()).collect();
        rec.push(s.label.map(|l| l.to_string()).unwrap_or_default());
        rec.push(s.subject_id.clone());
        rec.push(s.bone.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_to_series(path: impl AsRef<Path>) -> Result<Vec<RadialSeries>> {
    let mut r = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(File::open(path)?);
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    if header != series_header() {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "expected {} columns v0..v79,tw_stage,subject_id,bone",
                SERIES_LEN + 3
            ),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec?;
        if rec.len() != SERIES_LEN + 3 {
            return Err(Error::Parse {
                line,
                message: format!(
                    "column count mismatch: expected {}, found {}",
                    SERIES_LEN + 3,
                    rec.len()
                ),
            });
        }
        let values = (0..SERIES_LEN)
            .map(|k| {
                rec[k].parse::<f64>().map_err(|e| Error::Parse {
                    line,
                    message: format!("v{k}: {e}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        let label = match &rec[SERIES_LEN] {
            "" => None,
            s => Some(s.parse().map_err(|e: Error| Error::Parse {
                line,
                message: e.to_string(),
            })?),
        };
        let bone = rec[SERIES_LEN + 2]
            .parse()
            .map_err(|e: Error| Error::Parse {
                line,
                message: e.to_string(),
            })?;
        out.push(RadialSeries {
            values,
            label,
            subject_id: rec[SERIES_LEN + 1].to_string(),
            bone,
        });
    }
    Ok(out)
}
