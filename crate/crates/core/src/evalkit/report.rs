use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::metrics::ConfusionMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FoldTrace {
    pub fold: usize,
    pub n: usize,
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroupMetrics {
    pub name: String,
    pub metrics: BTreeMap<String, f64>,
}

/// Everything an evaluation run reports. Serialises without timestamps so
/// identical runs produce identical files.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub task: String,
    pub metrics: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub groups: Vec<GroupMetrics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confusion: Option<ConfusionMatrix>,
    #[serde(default)]
    pub folds: Vec<FoldTrace>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub config: serde_json::Value,
}

impl EvaluationReport {
    pub fn new(task: impl Into<String>) -> Self {
        Self {
            task: task.into(),
            ..Default::default()
        }
    }

    pub fn group(&mut self, name: impl Into<String>, metrics: BTreeMap<String, f64>) {
        self.groups.push(GroupMetrics {
            name: name.into(),
            metrics,
        });
    }

    /// Human-readable table; percentages for accuracy-type metrics.
    pub fn to_markdown(&self) -> String {
        let mut keys: Vec<&String> = self.metrics.keys().collect();
        for g in &self.groups {
            keys.extend(g.metrics.keys());
        }
        keys.sort();
        keys.dedup();
        let mut md = format!("# {} report\n\n", self.task);
        if let Some(seed) = self.seed {
            let _ = writeln!(md, "seed: {seed}\n");
        }
        if keys.is_empty() {
            md.push_str("(no metrics)\n");
            return md;
        }
        md.push_str("| split |");
        for k in &keys {
            let _ = write!(md, " {} |", column_title(k));
        }
        md.push_str("\n|---|");
        md.push_str(&"---|".repeat(keys.len()));
        md.push('\n');
        let rows = self
            .groups
            .iter()
            .map(|g| (g.name.as_str(), &g.metrics))
            .chain([("overall", &self.metrics)]);
        for (name, metrics) in rows {
            let _ = write!(md, "| {name} |");
            for k in &keys {
                match metrics.get(*k) {
                    Some(v) => {
                        let _ = write!(md, " {} |", format_metric(k, *v));
                    }
                    None => md.push_str(" - |"),
                }
            }
            md.push('\n');
        }
        if let Some(c) = &self.confusion {
            md.push_str("\n## Confusion matrix (rows true, columns predicted)\n\n|   |");
            for l in &c.labels {
                let _ = write!(md, " {l} |");
            }
            md.push_str("\n|---|");
            md.push_str(&"---|".repeat(c.labels.len()));
            md.push('\n');
            for (l, row) in c.labels.iter().zip(&c.counts) {
                let _ = write!(md, "| {l} |");
                for v in row {
                    let _ = write!(md, " {v} |");
                }
                md.push('\n');
            }
        }
        md
    }
}

fn is_percentage(key: &str) -> bool {
    matches!(key, "accuracy" | "within_one")
}

fn column_title(key: &str) -> String {
    if is_percentage(key) {
        format!("{key} (%)")
    } else {
        key.to_string()
    }
}

fn format_metric(key: &str, v: f64) -> String {
    if is_percentage(key) {
        format!("{:.2}", 100.0 * v)
    } else if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{v:.0}")
    } else {
        format!("{v:.4}")
    }
}

/// Writes `report.json` and `report.md` into `dir`.
pub fn emit_report(report: &EvaluationReport, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let json = dir.join("report.json");
    let md = dir.join("report.md");
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    fs::write(&json, text)?;
    fs::write(&md, report.to_markdown())?;
    Ok(vec![json, md])
}

/// Predicted-vs-actual scatter with a dashed identity line and a solid
/// least-squares line. A CSV with the plotted values is written next to it.
pub fn emit_scatter(truth: &[f64], pred: &[f64], path: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    if truth.len() != pred.len() {
        return Err(Error::LengthMismatch {
            expected: truth.len(),
            actual: pred.len(),
        });
    }
    if truth.iter().chain(pred).any(|v| !v.is_finite()) {
        return Err(Error::Numeric("scatter values must be finite".into()));
    }
    let path = path.as_ref();
    let csv_path = path.with_extension("csv");
    let mut w = csv::Writer::from_path(&csv_path)?;
    w.write_record(["actual", "predicted"])?;
    for (t, p) in truth.iter().zip(pred) {
        w.write_record([t.to_string(), p.to_string()])?;
    }
    w.flush()?;

    const SIZE: f64 = 480.0;
    const MARGIN: f64 = 48.0;
    let (mut lo, mut hi) = truth
        .iter()
        .chain(pred)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-9 {
        lo -= 0.5;
        hi += 0.5;
    }
    let pad = 0.05 * (hi - lo);
    let (lo, hi) = (lo - pad, hi + pad);
    let span = SIZE - 2.0 * MARGIN;
    let sx = |v: f64| MARGIN + (v - lo) / (hi - lo) * span;
    let sy = |v: f64| SIZE - MARGIN - (v - lo) / (hi - lo) * span;

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="white"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{span}" height="{span}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">actual age</text>"#,
        SIZE / 2.0,
        SIZE - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{}" text-anchor="middle" font-size="14" transform="rotate(-90 16 {})">predicted age</text>"#,
        SIZE / 2.0,
        SIZE / 2.0
    );
    let _ = writeln!(
        svg,
        r#"<line class="identity" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="grey" stroke-dasharray="6,4"/>"#,
        sx(lo),
        sy(lo),
        sx(hi),
        sy(hi)
    );
    if let Some((a, b)) = least_squares_line(truth, pred) {
        let _ = writeln!(
            svg,
            r#"<line class="fit" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-width="1.5"/>"#,
            sx(lo),
            sy(a + b * lo),
            sx(hi),
            sy(a + b * hi)
        );
    }
    for (t, p) in truth.iter().zip(pred) {
        let _ = writeln!(
            svg,
            r#"<circle class="point" cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#,
            sx(*t),
            sy(*p)
        );
    }
    svg.push_str("</svg>\n");
    fs::write(path, svg)?;
    Ok(vec![path.to_path_buf(), csv_path])
}

/// Intercept and slope of `pred ~ truth`, if the truth varies.
fn least_squares_line(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len() as f64;
    if x.len() < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Some((my - slope * mx, slope))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_metrics_report_is_valid_json() {
        let dir = tempfile::tempdir().unwrap();
        let files = emit_report(&EvaluationReport::new("classification"), dir.path()).unwrap();
        let v: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(&files[0]).unwrap()).unwrap();
        assert_eq!(v["metrics"], serde_json::json!({}));
        assert_eq!(v["task"], "classification");
    }

    #[test]
    fn markdown_overall_row() {
        let mut r = EvaluationReport::new("classification");
        r.metrics.insert("accuracy".into(), 381.0 / 498.0);
        r.metrics.insert("within_one".into(), 495.0 / 498.0);
        let md = r.to_markdown();
        assert!(md.contains("| overall | 76.51 | 99.40 |"), "{md}");
    }

    #[test]
    fn scatter_has_points_and_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scatter.svg");
        let files = emit_scatter(&[5.0, 9.0, 14.0], &[6.0, 8.5, 13.0], &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let doc = roxmltree::Document::parse(&text).unwrap();
        let circles = doc
            .descendants()
            .filter(|n| n.has_tag_name("circle"))
            .count();
        assert_eq!(circles, 3);
        let lines: Vec<_> = doc
            .descendants()
            .filter(|n| n.has_tag_name("line"))
            .collect();
        assert!(lines
            .iter()
            .any(|l| l.attribute("stroke-dasharray").is_some()));
        assert!(lines
            .iter()
            .any(|l| l.attribute("class") == Some("fit")
                && l.attribute("stroke-dasharray").is_none()));
        let csv = fs::read_to_string(&files[1]).unwrap();
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn scatter_rejects_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        assert!(emit_scatter(&[1.0], &[1.0, 2.0], dir.path().join("s.svg")).is_err());
    }
}
