//! The 25 summary shape features of a phalanx and its epiphysis.
//!
//! Lengths are in pixels; ratios are dimensionless. Heights are measured
//! along the phalanx's fitted major axis and widths perpendicular to it, so
//! every feature is invariant to rigid motion. When the epiphysis is absent
//! `f1 = 0` and `f16..=f25` hold the sentinel 0.

mod ellipse;

pub use ellipse::{fit_ellipse, fit_ellipse_points, EllipseFit};

use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{BoneKind, BoneRecord, Ethnicity, Point2, Sex, TwStage};
use crate::error::{Error, Result};
use crate::geometry;

pub const N_FEATURES: usize = 25;

pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "epiphysis_present",
    "phalanx_ellipse_height",
    "phalanx_ellipse_width",
    "phalanx_height",
    "phalanx_width",
    "first_quartile_width",
    "third_quartile_width",
    "metaphysis_width",
    "phalanx_eccentricity",
    "width_to_height",
    "phalanx_roundness",
    "phalanx_area_to_perimeter",
    "first_quartile_to_width",
    "third_quartile_to_width",
    "metaphysis_to_width",
    "epi_ellipse_height",
    "epi_ellipse_width",
    "epi_height",
    "epi_width",
    "epi_eccentricity",
    "epi_distance_to_phalanx",
    "epi_width_to_height",
    "epi_roundness",
    "epi_area_to_perimeter",
    "epi_width_to_metaphysis",
];

/// Fractions of the phalanx height, measured from the distal end, at which
/// f5..f8 are taken.
const CHORD_FRACTIONS: [f64; 4] = [0.50, 0.25, 0.75, 0.90];
const END_PROBES: [f64; 2] = [0.05, 0.95];

/// Feature vector indexed 1..=25 through [`ShapeFeatures::get`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeFeatures {
    pub values: [f64; N_FEATURES],
}

impl ShapeFeatures {
    /// Feature `k` using the 1-based numbering (`get(1)` is epiphysis presence).
    pub fn get(&self, k: usize) -> f64 {
        self.values[k - 1]
    }

    pub fn epiphysis_present(&self) -> bool {
        self.values[0] == 1.0
    }

    pub fn column_name(k: usize) -> String {
        format!("f{k}")
    }
}

struct Frame {
    origin: Point2,
    axis: Point2,
    distal: f64,
    metaphyseal: f64,
}

impl Frame {
    fn at(&self, t: f64) -> f64 {
        self.distal + t * (self.metaphyseal - self.distal)
    }
}

fn projection_range(points: &[Point2], origin: Point2, axis: Point2) -> (f64, f64) {
    points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &p| {
            let s = (p - origin).dot(axis);
            (lo.min(s), hi.max(s))
        })
}

fn chord(points: &[Point2], frame: &Frame, t: f64, what: &str) -> Result<f64> {
    geometry::chord_length(points, frame.origin, frame.axis, frame.at(t))
        .ok_or_else(|| Error::Degenerate(format!("{what}: chord at t={t} misses the outline")))
}

pub fn extract_features(rec: &BoneRecord) -> Result<ShapeFeatures> {
    let what = format!("subject '{}' {}", rec.subject.subject_id, rec.bone);
    let ph = rec.phalanx.points();
    let ph_area = geometry::area(ph);
    if !(ph_area > 0.0) {
        return Err(Error::Degenerate(format!(
            "{what}: phalanx outline has zero area"
        )));
    }
    let fit = fit_ellipse(&rec.phalanx).map_err(|e| Error::Degenerate(format!("{what}: {e}")))?;
    let axis = fit.major_dir();
    let (lo, hi) = projection_range(ph, fit.center, axis);
    let epi_fit = match &rec.epiphysis {
        Some(epi) => Some(
            fit_ellipse(epi).map_err(|e| Error::Degenerate(format!("{what} epiphysis: {e}")))?,
        ),
        None => None,
    };

    let mut frame = Frame {
        origin: fit.center,
        axis,
        distal: lo,
        metaphyseal: hi,
    };
    match &epi_fit {
        Some(ef) => {
            if (ef.center - fit.center).dot(axis) < 0.5 * (lo + hi) {
                frame.distal = hi;
                frame.metaphyseal = lo;
            }
        }
        None => {
            let near = chord(ph, &frame, END_PROBES[0], &what)?;
            let far = chord(ph, &frame, END_PROBES[1], &what)?;
            if near > far {
                frame.distal = hi;
                frame.metaphyseal = lo;
            }
        }
    }

    let mut f = [0.0; N_FEATURES];
    let height = hi - lo;
    let [w50, w25, w75, w90] = {
        let mut w = [0.0; 4];
        for (slot, &t) in w.iter_mut().zip(&CHORD_FRACTIONS) {
            *slot = chord(ph, &frame, t, &what)?;
        }
        w
    };
    let ph_perim = geometry::perimeter(ph);
    f[1] = fit.major_axis_len;
    f[2] = fit.minor_axis_len;
    f[3] = height;
    f[4] = w50;
    f[5] = w25;
    f[6] = w75;
    f[7] = w90;
    f[8] = fit.eccentricity();
    f[9] = w50 / height;
    f[10] = 4.0 * std::f64::consts::PI * ph_area / (ph_perim * ph_perim);
    f[11] = ph_area / ph_perim;
    f[12] = w25 / w50;
    f[13] = w75 / w50;
    f[14] = w90 / w50;

    if let (Some(epi), Some(ef)) = (&rec.epiphysis, epi_fit) {
        let ep = epi.points();
        let e_area = geometry::area(ep);
        let e_perim = geometry::perimeter(ep);
        let (elo, ehi) = projection_range(ep, fit.center, axis);
        let e_frame = Frame {
            origin: fit.center,
            axis,
            distal: elo,
            metaphyseal: ehi,
        };
        let e_height = ehi - elo;
        let e_width = chord(ep, &e_frame, 0.5, &format!("{what} epiphysis"))?;
        f[0] = 1.0;
        f[15] = ef.major_axis_len;
        f[16] = ef.minor_axis_len;
        f[17] = e_height;
        f[18] = e_width;
        f[19] = ef.eccentricity();
        f[20] = ef.center.dist(fit.center);
        f[21] = e_width / e_height;
        f[22] = 4.0 * std::f64::consts::PI * e_area / (e_perim * e_perim);
        f[23] = e_area / e_perim;
        f[24] = e_width / w90;
    }
    Ok(ShapeFeatures { values: f })
}

/// One row of the feature CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub features: ShapeFeatures,
    pub tw_stage: Option<TwStage>,
    pub age_years: f64,
    pub sex: Sex,
    pub ethnicity: Ethnicity,
    pub subject_id: String,
    pub bone: BoneKind,
}

impl FeatureRow {
    pub fn from_record(rec: &BoneRecord) -> Result<Self> {
        Ok(FeatureRow {
            features: extract_features(rec)?,
            tw_stage: rec.tw_stage,
            age_years: rec.subject.age_years,
            sex: rec.subject.sex,
            ethnicity: rec.subject.ethnicity,
            subject_id: rec.subject.subject_id.clone(),
            bone: rec.bone,
        })
    }
}

pub fn feature_csv_header() -> Vec<String> {
    (1..=N_FEATURES)
        .map(ShapeFeatures::column_name)
        .chain(
            [
                "tw_stage",
                "age_years",
                "sex",
                "ethnicity",
                "subject_id",
                "bone",
            ]
            .map(String::from),
        )
        .collect()
}

pub fn features_to_csv(rows: &[FeatureRow], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_writer(File::create(path)?);
    w.write_record(feature_csv_header())?;
    for r in rows {
        let mut rec: Vec<String> = r.features.values.iter().map(|v| v.to_string()).collect();
        rec.push(r.tw_stage.map(|s| s.to_string()).unwrap_or_default());
        rec.push(r.age_years.to_string());
        rec.push(format!("{:?}", r.sex));
        rec.push(format!("{:?}", r.ethnicity));
        rec.push(r.subject_id.clone());
        rec.push(r.bone.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_to_features(path: impl AsRef<Path>) -> Result<Vec<FeatureRow>> {
    let mut r = csv::Reader::from_reader(File::open(path)?);
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    if header != feature_csv_header() {
        return Err(Error::Parse {
            line: 1,
            message: "unexpected feature CSV header".into(),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec?;
        if rec.len() != N_FEATURES + 6 {
            return Err(Error::Parse {
                line,
                message: format!("expected {} columns, found {}", N_FEATURES + 6, rec.len()),
            });
        }
        let num = |k: usize| -> Result<f64> {
            rec[k].parse::<f64>().map_err(|e| Error::Parse {
                line,
                message: format!("column {}: {e}", k + 1),
            })
        };
        let mut values = [0.0; N_FEATURES];
        for (k, v) in values.iter_mut().enumerate() {
            *v = num(k)?;
        }
        let field = |k: usize| &rec[N_FEATURES + k];
        let parse_err = |m: String| Error::Parse { line, message: m };
        rows.push(FeatureRow {
            features: ShapeFeatures { values },
            tw_stage: match field(0) {
                "" => None,
                s => Some(s.parse().map_err(|e: Error| parse_err(e.to_string()))?),
            },
            age_years: num(N_FEATURES + 1)?,
            sex: serde_json::from_value(serde_json::Value::String(field(2).into()))
                .map_err(|e| parse_err(format!("sex: {e}")))?,
            ethnicity: serde_json::from_value(serde_json::Value::String(field(3).into()))
                .map_err(|e| parse_err(format!("ethnicity: {e}")))?,
            subject_id: field(4).to_string(),
            bone: field(5)
                .parse()
                .map_err(|e: Error| parse_err(e.to_string()))?,
        });
    }
    Ok(rows)
}
