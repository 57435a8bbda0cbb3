//! Domain types for bone outlines and their subjects, plus JSON-lines I/O.

mod synth;

pub use synth::{generate_synthetic, BoneGeometry, GeneratorConfig};

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::ops::Sub;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry;

/// Minimum vertex count of a valid outline.
pub const MIN_OUTLINE_POINTS: usize = 8;

/// Pixel coordinate, y increasing downward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point2) -> f64 {
        (self - o).norm()
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl From<[f64; 2]> for Point2 {
    fn from(v: [f64; 2]) -> Self {
        Point2::new(v[0], v[1])
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

/// Closed simple polygon; the last vertex connects back to the first.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Outline {
    points: Vec<Point2>,
}

impl Outline {
    pub fn new(points: Vec<Point2>) -> Result<Self> {
        if points.len() < MIN_OUTLINE_POINTS {
            return Err(Error::Invariant(format!(
                "outline too short ({} points, need at least {MIN_OUTLINE_POINTS})",
                points.len()
            )));
        }
        if let Some(i) = points
            .iter()
            .position(|p| !p.x.is_finite() || !p.y.is_finite())
        {
            return Err(Error::Invariant(format!(
                "non-finite coordinate at point {i}"
            )));
        }
        let n = points.len();
        if let Some(i) = (0..n).find(|&i| points[i] == points[(i + 1) % n]) {
            return Err(Error::Invariant(format!(
                "consecutive identical points at {i} and {}",
                (i + 1) % n
            )));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn area(&self) -> f64 {
        geometry::area(&self.points)
    }

    pub fn centroid(&self) -> Point2 {
        geometry::centroid(&self.points)
    }

    /// Apply an arbitrary point map, revalidating the result.
    pub fn map(&self, f: impl Fn(Point2) -> Point2) -> Result<Outline> {
        Outline::new(self.points.iter().map(|&p| f(p)).collect())
    }
}

impl<'de> Deserialize<'de> for Outline {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let points = Vec::<Point2>::deserialize(d)?;
        Outline::new(points).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoneKind {
    Distal,
    Middle,
    Proximal,
}

impl BoneKind {
    pub const ALL: [BoneKind; 3] = [BoneKind::Distal, BoneKind::Middle, BoneKind::Proximal];

    pub fn as_str(self) -> &'static str {
        match self {
            BoneKind::Distal => "distal",
            BoneKind::Middle => "middle",
            BoneKind::Proximal => "proximal",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for BoneKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for BoneKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "distal" => Ok(BoneKind::Distal),
            "middle" => Ok(BoneKind::Middle),
            "proximal" => Ok(BoneKind::Proximal),
            other => Err(Error::InvalidParameter(format!("unknown bone '{other}'"))),
        }
    }
}

/// Tanner-Whitehouse maturity stage, ordered B < C < ... < I.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TwStage {
    B,
    C,
    D,
    E,
    F,
    G,
    H,
    I,
}

impl TwStage {
    pub const ALL: [TwStage; 8] = [
        TwStage::B,
        TwStage::C,
        TwStage::D,
        TwStage::E,
        TwStage::F,
        TwStage::G,
        TwStage::H,
        TwStage::I,
    ];

    /// Ordinal position in 0..8.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<TwStage> {
        Self::ALL.get(i).copied()
    }

    pub fn letter(self) -> char {
        (b'B' + self as u8) as char
    }
}

impl fmt::Display for TwStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl std::str::FromStr for TwStage {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let mut chars = s.chars();
        match (chars.next(), chars.next()) {
            (Some(c @ 'B'..='I'), None) => Ok(TwStage::ALL[(c as u8 - b'B') as usize]),
            _ => Err(Error::InvalidParameter(format!("unknown TW stage '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sex {
    M,
    F,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Ethnicity {
    ASI,
    BLK,
    CAU,
    HIS,
}

impl Ethnicity {
    pub const ALL: [Ethnicity; 4] = [
        Ethnicity::ASI,
        Ethnicity::BLK,
        Ethnicity::CAU,
        Ethnicity::HIS,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Subject {
    pub subject_id: String,
    pub age_years: f64,
    pub sex: Sex,
    pub ethnicity: Ethnicity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoneRecord {
    pub subject: Subject,
    pub bone: BoneKind,
    pub phalanx: Outline,
    pub epiphysis: Option<Outline>,
    pub tw_stage: Option<TwStage>,
}

impl BoneRecord {
    /// Check the cross-field invariants not covered by [`Outline::new`].
    pub fn validate(&self) -> Result<()> {
        if !(self.subject.age_years > 0.0) || !self.subject.age_years.is_finite() {
            return Err(Error::Invariant(format!(
                "age_years must be positive, got {}",
                self.subject.age_years
            )));
        }
        if let Some(epi) = &self.epiphysis {
            let a = self.phalanx.centroid();
            let b = epi.centroid();
            if a.dist(b) <= 1e-9 * (1.0 + a.norm()) {
                return Err(Error::Invariant(
                    "epiphysis centroid coincides with phalanx centroid".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn key(&self) -> (String, BoneKind) {
        (self.subject.subject_id.clone(), self.bone)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub records: Vec<BoneRecord>,
    pub provenance: String,
    pub seed: Option<u64>,
}

impl Dataset {
    pub fn new(
        records: Vec<BoneRecord>,
        provenance: impl Into<String>,
        seed: Option<u64>,
    ) -> Result<Self> {
        let mut seen = HashSet::new();
        for r in &records {
            r.validate()?;
            if !seen.insert(r.key()) {
                return Err(Error::Duplicate {
                    subject_id: r.subject.subject_id.clone(),
                    bone: r.bone.to_string(),
                });
            }
        }
        Ok(Self {
            records,
            provenance: provenance.into(),
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// One line of the dataset file. Field order is the on-disk key order.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordLine {
    subject_id: String,
    bone: BoneKind,
    age_years: f64,
    sex: Sex,
    ethnicity: Ethnicity,
    tw_stage: Option<TwStage>,
    phalanx: Vec<Point2>,
    epiphysis: Option<Vec<Point2>>,
}

impl From<&BoneRecord> for RecordLine {
    fn from(r: &BoneRecord) -> Self {
        RecordLine {
            subject_id: r.subject.subject_id.clone(),
            bone: r.bone,
            age_years: r.subject.age_years,
            sex: r.subject.sex,
            ethnicity: r.subject.ethnicity,
            tw_stage: r.tw_stage,
            phalanx: r.phalanx.points().to_vec(),
            epiphysis: r.epiphysis.as_ref().map(|o| o.points().to_vec()),
        }
    }
}

fn parse_line(text: &str, line: usize) -> Result<BoneRecord> {
    let raw: RecordLine = serde_json::from_str(text).map_err(|e| Error::Parse {
        line,
        message: e.to_string(),
    })?;
    let at = |field: &str, e: Error| Error::Parse {
        line,
        message: format!("{field}: {e}"),
    };
    let phalanx = Outline::new(raw.phalanx).map_err(|e| at("phalanx", e))?;
    let epiphysis = raw
        .epiphysis
        .map(Outline::new)
        .transpose()
        .map_err(|e| at("epiphysis", e))?;
    let rec = BoneRecord {
        subject: Subject {
            subject_id: raw.subject_id,
            age_years: raw.age_years,
            sex: raw.sex,
            ethnicity: raw.ethnicity,
        },
        bone: raw.bone,
        phalanx,
        epiphysis,
        tw_stage: raw.tw_stage,
    };
    rec.validate().map_err(|e| Error::Parse {
        line,
        message: e.to_string(),
    })?;
    if !(2.0..=18.0).contains(&rec.subject.age_years) {
        log::warn!(
            "line {line}: age {} outside the 2-18 year study range",
            rec.subject.age_years
        );
    }
    Ok(rec)
}

/// Read a JSON-lines dataset. Blank lines are skipped; every error carries the
/// 1-based line number.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let text = line?;
        if text.trim().is_empty() {
            continue;
        }
        let rec = parse_line(&text, line_no)?;
        if !seen.insert(rec.key()) {
            return Err(Error::Parse {
                line: line_no,
                message: format!(
                    "duplicate record for subject '{}' bone {}",
                    rec.subject.subject_id, rec.bone
                ),
            });
        }
        records.push(rec);
    }
    Ok(Dataset {
        records,
        provenance: format!("loaded from {}", path.display()),
        seed: None,
    })
}

pub fn save_dataset(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for r in &ds.records {
        serde_json::to_writer(&mut w, &RecordLine::from(r))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}
