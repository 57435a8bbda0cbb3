//! The `boneage` command line.
//!
//! Every command reads files and writes files. Results are summarised on
//! stdout (plain `key: value` lines, one JSON object with `--json`, nothing
//! with `--quiet`); failures print one JSON line on stderr and exit with 2
//! (usage), 3 (data) or 4 (numeric failure).

mod pipeline;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub use pipeline::{
    train_stage_pipeline, Method, PipelineOptions, Representation, StageModel, StagePipeline,
};

use crate::data::{
    generate_synthetic, load_dataset, save_dataset, BoneKind, GeneratorConfig, TwStage,
};
use crate::error::{Error, Result};
use crate::evalkit::{
    classification_metrics, emit_report, emit_scatter, fold_members, regression_metrics,
    ClassificationMetrics, ConfusionMatrix, EvaluationReport, FoldTrace,
};
use crate::features::{csv_to_features, features_to_csv, FeatureRow};
use crate::outline::{csv_to_series, series_to_csv, to_radial_batch, RadialSeries};
use crate::regress::{
    fit_bone_bank, fused_loo, predict_ages, write_age_predictions, BoneAgeModelBank, FactorSet,
};
use crate::shapelets::ShapeletConfig;

#[derive(Debug, Parser)]
#[command(
    name = "boneage",
    version,
    about = "Bone-outline stage classification and age regression"
)]
pub struct Cli {
    /// Seed for every random choice (default 0).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// JSON run configuration; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Print the run summary as one JSON object.
    #[arg(long, global = true, conflicts_with = "quiet")]
    pub json: bool,
    /// Print nothing on success.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransformMode {
    Radial,
    Features,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Task {
    /// Stage predictions CSV written by `classify`.
    Stage,
    /// Age predictions CSV written by `predict-age`, scored against `--truth`.
    Age,
    /// A confusion matrix JSON file `{labels, counts}`.
    Confusion,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset (JSON lines).
    Synth {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Convert a dataset to radial series or shape features (CSV).
    Transform {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, value_enum, default_value = "features")]
        representation: TransformMode,
    },
    /// Train a stage classifier and cross-validate it.
    TrainStage {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, value_enum)]
        representation: Option<Representation>,
        /// knn, nb, tree, rf, svml, svmq, or elastic (radial only).
        #[arg(long)]
        classifier: Option<String>,
        /// 1 means leave-one-out.
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long)]
        bone: Option<BoneKind>,
    },
    /// Apply a stage classifier.
    Classify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Fit the six per-bone age models.
    TrainAge {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// none, sex or sex+ethnicity.
        #[arg(long)]
        factors: Option<FactorSet>,
    },
    /// Predict ages with a model bank.
    PredictAge {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Prediction interval level.
        #[arg(long)]
        level: Option<f64>,
    },
    /// Score predictions and write a report.
    Evaluate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        task: Task,
        /// Ground truth for `--task age` (dataset or feature CSV).
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Output directory.
        #[arg(long)]
        output: PathBuf,
    },
}

/// Optional JSON configuration. Every field can also be set by a flag.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub n: Option<usize>,
    pub folds: Option<usize>,
    pub representation: Option<Representation>,
    pub classifier: Option<String>,
    pub factors: Option<FactorSet>,
    pub bone: Option<BoneKind>,
    pub level: Option<f64>,
    pub generator: Option<GeneratorConfig>,
    pub shapelet: Option<ShapeletConfig>,
    pub elastic_grid_stride: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| Error::InvalidParameter(format!("config {}: {e}", path.display())))
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            let msg = e.to_string();
            let text: Vec<&str> = msg
                .lines()
                .map(str::trim)
                .take_while(|l| !l.starts_with("Usage:") && !l.starts_with("For more information"))
                .filter(|l| !l.is_empty())
                .collect();
            report_error("usage", text.join(" ").trim_start_matches("error: "), 2);
            return 2;
        }
    };
    let (json_mode, quiet) = (cli.json, cli.quiet);
    match execute(cli) {
        Ok(summary) => {
            if json_mode {
                println!("{summary}");
            } else if !quiet {
                print_summary(&summary);
            }
            0
        }
        Err(e) => {
            let code = e.exit_code();
            report_error(e.kind(), &e.to_string(), code);
            code
        }
    }
}

fn report_error(kind: &str, message: &str, code: i32) {
    let line = json!({ "error": kind, "message": message, "exit_code": code });
    let _ = writeln!(std::io::stderr(), "{line}");
}

fn print_summary(v: &Value) {
    if let Value::Object(map) = v {
        for (k, val) in map {
            match val {
                Value::String(s) => println!("{k}: {s}"),
                other => println!("{k}: {other}"),
            }
        }
    }
}

fn require_input(path: &Path) -> Result<()> {
    if !path.is_file() {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("input file {} does not exist", path.display()),
        )));
    }
    Ok(())
}

fn require_output_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() && !p.is_dir() => Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("output directory {} does not exist", p.display()),
        ))),
        _ => Ok(()),
    }
}

fn is_dataset(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "jsonl")
}

/// Sibling directory `<stem>_<suffix>` next to `path`.
fn sibling_dir(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    path.with_file_name(format!("{stem}_{suffix}"))
}

fn load_feature_rows(path: &Path) -> Result<Vec<FeatureRow>> {
    if is_dataset(path) {
        let ds = load_dataset(path)?;
        ds.records.par_iter().map(FeatureRow::from_record).collect()
    } else {
        csv_to_features(path)
    }
}

fn load_series(path: &Path) -> Result<Vec<RadialSeries>> {
    if is_dataset(path) {
        to_radial_batch(&load_dataset(path)?.records)
    } else {
        csv_to_series(path)
    }
}

/// Identifiers, vectors and labels of the classification input.
struct StageInput {
    ids: Vec<(String, BoneKind)>,
    x: Vec<Vec<f64>>,
    y: Vec<Option<TwStage>>,
}

fn load_stage_input(
    path: &Path,
    representation: Representation,
    bone: Option<BoneKind>,
) -> Result<StageInput> {
    let keep = |b: BoneKind| bone.is_none_or(|want| want == b);
    let mut input = StageInput {
        ids: Vec::new(),
        x: Vec::new(),
        y: Vec::new(),
    };
    match representation {
        Representation::Features => {
            for r in load_feature_rows(path)?
                .into_iter()
                .filter(|r| keep(r.bone))
            {
                input.ids.push((r.subject_id, r.bone));
                input.x.push(r.features.values.to_vec());
                input.y.push(r.tw_stage);
            }
        }
        Representation::Radial | Representation::Shapelet => {
            for s in load_series(path)?.into_iter().filter(|s| keep(s.bone)) {
                input.ids.push((s.subject_id, s.bone));
                input.x.push(s.values);
                input.y.push(s.label);
            }
        }
    }
    if input.x.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no usable rows in {}",
            path.display()
        )));
    }
    Ok(input)
}

fn metrics_map(m: &ClassificationMetrics) -> BTreeMap<String, f64> {
    BTreeMap::from([
        ("accuracy".to_string(), m.accuracy),
        ("within_one".to_string(), m.within_one),
    ])
}

fn execute(cli: Cli) -> Result<Value> {
    let cfg = match &cli.config {
        Some(p) => {
            require_input(p)?;
            RunConfig::load(p)?
        }
        None => RunConfig::default(),
    };
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);
    match cli.command {
        Command::Synth { n, output } => {
            require_output_parent(&output)?;
            let n = n
                .or(cfg.n)
                .ok_or_else(|| Error::InvalidParameter("--n is required".into()))?;
            let generator = cfg.generator.clone().unwrap_or_default();
            let ds = generate_synthetic(n, seed, &generator)?;
            save_dataset(&ds, &output)?;
            Ok(
                json!({ "command": "synth", "subjects": n, "records": ds.len(), "seed": seed, "output": output }),
            )
        }
        Command::Transform {
            input,
            output,
            representation,
        } => {
            require_input(&input)?;
            require_output_parent(&output)?;
            let ds = load_dataset(&input)?;
            let rows = match representation {
                TransformMode::Radial => {
                    let batch = to_radial_batch(&ds.records)?;
                    series_to_csv(&batch, &output)?;
                    batch.len()
                }
                TransformMode::Features => {
                    let rows: Vec<FeatureRow> = ds
                        .records
                        .par_iter()
                        .map(FeatureRow::from_record)
                        .collect::<Result<_>>()?;
                    features_to_csv(&rows, &output)?;
                    rows.len()
                }
            };
            Ok(json!({ "command": "transform", "rows": rows, "output": output }))
        }
        Command::TrainStage {
            input,
            output,
            representation,
            classifier,
            folds,
            bone,
        } => {
            require_input(&input)?;
            require_output_parent(&output)?;
            let representation = representation
                .or(cfg.representation)
                .unwrap_or(Representation::Features);
            let method: Method = classifier
                .or(cfg.classifier.clone())
                .as_deref()
                .unwrap_or("svmq")
                .parse()?;
            let folds = folds.or(cfg.folds).unwrap_or(10);
            let bone = bone.or(cfg.bone);
            let opts = PipelineOptions {
                folds,
                seed,
                shapelet: cfg.shapelet,
                elastic_grid_stride: cfg.elastic_grid_stride.unwrap_or(1),
            };
            let data = load_stage_input(&input, representation, bone)?;
            let y: Vec<TwStage> = data
                .y
                .iter()
                .zip(&data.ids)
                .map(|(l, (id, b))| {
                    l.ok_or_else(|| {
                        Error::InsufficientData(format!(
                            "training row '{id}' {b} has no stage label"
                        ))
                    })
                })
                .collect::<Result<_>>()?;
            let (model, cv, assignment) =
                train_stage_pipeline(representation, method, bone, &data.x, &y, &opts)?;
            model.save(&output)?;

            let mut report = EvaluationReport::new("stage_cv");
            report.seed = Some(seed);
            report.config = json!({
                "representation": representation,
                "classifier": method,
                "folds": folds,
                "bone": bone,
                "n": y.len(),
            });
            if !cv.is_empty() {
                let m = classification_metrics(&y, &cv)?;
                report.metrics = metrics_map(&m);
                report.confusion = Some(m.confusion.clone());
                for (f, members) in fold_members(&assignment).iter().enumerate() {
                    let t: Vec<TwStage> = members.iter().map(|&i| y[i]).collect();
                    let p: Vec<TwStage> = members.iter().map(|&i| cv[i]).collect();
                    if let Ok(fm) = classification_metrics(&t, &p) {
                        report.folds.push(FoldTrace {
                            fold: f,
                            n: members.len(),
                            metrics: metrics_map(&fm),
                        });
                    }
                }
            }
            let dir = sibling_dir(&output, "cv");
            emit_report(&report, &dir)?;
            Ok(json!({
                "command": "train-stage",
                "instances": y.len(),
                "cv_accuracy": report.metrics.get("accuracy"),
                "cv_within_one": report.metrics.get("within_one"),
                "model": output,
                "report": dir,
            }))
        }
        Command::Classify {
            model,
            input,
            output,
        } => {
            require_input(&model)?;
            require_input(&input)?;
            require_output_parent(&output)?;
            let m = StageModel::load(&model)?;
            let data = load_stage_input(&input, m.representation(), m.bone)?;
            let pred = m.classify(&data.x)?;
            write_stage_predictions(&output, &data, &pred)?;
            let mut summary =
                json!({ "command": "classify", "rows": pred.len(), "output": output });
            if data.y.iter().all(Option::is_some) {
                let truth: Vec<TwStage> = data.y.iter().flatten().copied().collect();
                let stages: Vec<TwStage> = pred.iter().map(|(s, _)| *s).collect();
                let cm = classification_metrics(&truth, &stages)?;
                let mut report = EvaluationReport::new("stage_classification");
                report.seed = Some(m.seed);
                report.metrics = metrics_map(&cm);
                report.confusion = Some(cm.confusion);
                let dir = sibling_dir(&output, "report");
                emit_report(&report, &dir)?;
                summary["accuracy"] = json!(cm.accuracy);
                summary["within_one"] = json!(cm.within_one);
                summary["report"] = json!(dir);
            }
            Ok(summary)
        }
        Command::TrainAge {
            input,
            output,
            factors,
        } => {
            require_input(&input)?;
            require_output_parent(&output)?;
            let factors = factors.or(cfg.factors).unwrap_or_default();
            let rows = load_feature_rows(&input)?;
            let fit = fit_bone_bank(&rows, factors)?;
            fit.bank.save(&output)?;
            let fused = fused_loo(&fit.loo)?;
            let truth: Vec<f64> = fused.iter().map(|f| f.1).collect();
            let pred: Vec<f64> = fused.iter().map(|f| f.2).collect();
            let overall = regression_metrics(&truth, &pred)?;

            let mut report = EvaluationReport::new("age_training");
            report.seed = Some(seed);
            report.metrics = regression_map(&overall);
            for bone in BoneKind::ALL {
                let (t, p): (Vec<f64>, Vec<f64>) = fit
                    .loo
                    .iter()
                    .filter(|l| l.bone == bone)
                    .map(|l| (l.age_years, l.predicted))
                    .unzip();
                if let Ok(m) = regression_metrics(&t, &p) {
                    report.group(format!("{bone} loocv"), regression_map(&m));
                }
            }
            let mut terms = serde_json::Map::new();
            for m in &fit.bank.models {
                let d = &m.diagnostics;
                let name = format!(
                    "{} {}",
                    m.bone,
                    if m.epiphysis {
                        "epiphysis"
                    } else {
                        "no epiphysis"
                    }
                );
                let mut g = BTreeMap::from([
                    ("n".to_string(), d.n as f64),
                    ("terms".to_string(), m.terms.len() as f64),
                    ("r2".to_string(), d.r2),
                    ("aic".to_string(), d.aic),
                    ("hetero_r".to_string(), d.heteroscedasticity.statistic),
                    ("hetero_p".to_string(), d.heteroscedasticity.p_value),
                    ("cook_flags".to_string(), d.cook_flags.len() as f64),
                    ("outliers".to_string(), d.outlier_flags.len() as f64),
                ]);
                for (key, t) in [
                    ("shapiro_p", d.normality.shapiro_wilk),
                    ("skew_p", d.normality.dagostino_skew),
                    ("jb_p", d.normality.jarque_bera),
                ] {
                    if let Some(t) = t {
                        g.insert(key.to_string(), t.p_value);
                    }
                }
                report.group(name.clone(), g);
                terms.insert(name, json!(m.terms));
            }
            report.config =
                json!({ "factors": factors, "records": rows.len(), "selected_terms": terms });
            let dir = sibling_dir(&output, "diagnostics");
            emit_report(&report, &dir)?;
            emit_scatter(&truth, &pred, dir.join("loocv_scatter.svg"))?;
            Ok(json!({
                "command": "train-age",
                "subjects": fused.len(),
                "loocv_rmse": overall.rmse,
                "loocv_mae": overall.mae,
                "model": output,
                "report": dir,
            }))
        }
        Command::PredictAge {
            model,
            input,
            output,
            level,
        } => {
            require_input(&model)?;
            require_input(&input)?;
            require_output_parent(&output)?;
            let level = level.or(cfg.level).unwrap_or(0.95);
            let bank = BoneAgeModelBank::load(&model)?;
            let rows = load_feature_rows(&input)?;
            let preds = predict_ages(&bank, &rows, level)?;
            write_age_predictions(&preds, &output)?;
            let flagged = preds.iter().filter(|p| !p.flags.is_empty()).count();
            Ok(
                json!({ "command": "predict-age", "subjects": preds.len(), "flagged": flagged, "output": output }),
            )
        }
        Command::Evaluate {
            input,
            task,
            truth,
            output,
        } => {
            require_input(&input)?;
            std::fs::create_dir_all(&output)?;
            let report = match task {
                Task::Confusion => evaluate_confusion(&input)?,
                Task::Stage => evaluate_stage(&input)?,
                Task::Age => {
                    let truth = truth.ok_or_else(|| {
                        Error::InvalidParameter("--truth is required for --task age".into())
                    })?;
                    require_input(&truth)?;
                    evaluate_age(&input, &truth, &output)?
                }
            };
            emit_report(&report, &output)?;
            let mut summary =
                json!({ "command": "evaluate", "task": report.task, "output": output });
            for (k, v) in &report.metrics {
                summary[k] = json!(v);
            }
            Ok(summary)
        }
    }
}

fn regression_map(m: &crate::evalkit::RegressionMetrics) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::from([("rmse".to_string(), m.rmse), ("mae".to_string(), m.mae)]);
    if let Some(r2) = m.r2 {
        out.insert("r2".to_string(), r2);
    }
    out
}

const STAGE_PRED_HEADER: [&str; 5] = ["subject_id", "bone", "tw_stage", "predicted", "score"];

fn write_stage_predictions(path: &Path, data: &StageInput, pred: &[(TwStage, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(File::create(path)?);
    w.write_record(STAGE_PRED_HEADER)?;
    for (((id, bone), y), (s, score)) in data.ids.iter().zip(&data.y).zip(pred) {
        w.write_record([
            id.clone(),
            bone.to_string(),
            y.map(|l| l.to_string()).unwrap_or_default(),
            s.to_string(),
            score.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Confusion fixture: a matrix plus optional named per-group matrices.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfusionFixture {
    labels: Vec<TwStage>,
    counts: Vec<Vec<u64>>,
    #[serde(default)]
    groups: Vec<NamedConfusion>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NamedConfusion {
    name: String,
    labels: Vec<TwStage>,
    counts: Vec<Vec<u64>>,
}

fn evaluate_confusion(path: &Path) -> Result<EvaluationReport> {
    let text = std::fs::read_to_string(path)?;
    let fx: ConfusionFixture = serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line(),
        message: e.to_string(),
    })?;
    let cm = ConfusionMatrix::new(fx.labels, fx.counts)?;
    let mut report = EvaluationReport::new("stage_confusion");
    for g in fx.groups {
        let m: ClassificationMetrics = ConfusionMatrix::new(g.labels, g.counts)?.into();
        report.group(g.name, metrics_map(&m));
    }
    let m: ClassificationMetrics = cm.into();
    report.metrics = metrics_map(&m);
    report.confusion = Some(m.confusion);
    Ok(report)
}

fn evaluate_stage(path: &Path) -> Result<EvaluationReport> {
    let mut r = csv::Reader::from_reader(File::open(path)?);
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    if header != STAGE_PRED_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header {}", STAGE_PRED_HEADER.join(",")),
        });
    }
    let (mut truth, mut pred) = (Vec::new(), Vec::new());
    let mut per_bone: BTreeMap<BoneKind, (Vec<TwStage>, Vec<TwStage>)> = BTreeMap::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let parse = |k: usize| -> Result<TwStage> {
            rec[k].parse().map_err(|e: Error| Error::Parse {
                line,
                message: e.to_string(),
            })
        };
        let bone: BoneKind = rec[1].parse().map_err(|e: Error| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        let (t, p) = (parse(2)?, parse(3)?);
        truth.push(t);
        pred.push(p);
        let e = per_bone.entry(bone).or_default();
        e.0.push(t);
        e.1.push(p);
    }
    let m = classification_metrics(&truth, &pred)?;
    let mut report = EvaluationReport::new("stage_classification");
    if per_bone.len() > 1 {
        for (bone, (t, p)) in &per_bone {
            report.group(
                bone.to_string(),
                metrics_map(&classification_metrics(t, p)?),
            );
        }
    }
    report.metrics = metrics_map(&m);
    report.confusion = Some(m.confusion);
    Ok(report)
}

fn evaluate_age(path: &Path, truth_path: &Path, out_dir: &Path) -> Result<EvaluationReport> {
    let truth_rows = load_feature_rows(truth_path)?;
    let mut ages: BTreeMap<String, f64> = BTreeMap::new();
    for r in &truth_rows {
        ages.insert(r.subject_id.clone(), r.age_years);
    }
    let mut r = csv::Reader::from_reader(File::open(path)?);
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    let expected = crate::regress::age_predictions_header();
    if header != expected {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header {}", expected.join(",")),
        });
    }
    let mut fused = (Vec::new(), Vec::new());
    let mut per_bone: [(Vec<f64>, Vec<f64>); 3] = Default::default();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let num = |k: usize| -> Result<Option<f64>> {
            match &rec[k] {
                "" => Ok(None),
                s => s.parse().map(Some).map_err(|e| Error::Parse {
                    line,
                    message: format!("column {}: {e}", k + 1),
                }),
            }
        };
        let age = *ages.get(&rec[0]).ok_or_else(|| Error::Parse {
            line,
            message: format!("subject '{}' missing from the truth file", &rec[0]),
        })?;
        for b in 0..3 {
            if let Some(v) = num(1 + b)? {
                per_bone[b].0.push(age);
                per_bone[b].1.push(v);
            }
        }
        let f = num(4)?.ok_or_else(|| Error::Parse {
            line,
            message: "missing fused prediction".into(),
        })?;
        fused.0.push(age);
        fused.1.push(f);
    }
    let m = regression_metrics(&fused.0, &fused.1)?;
    let mut report = EvaluationReport::new("age_prediction");
    for (bone, (t, p)) in BoneKind::ALL.iter().zip(&per_bone) {
        if let Ok(bm) = regression_metrics(t, p) {
            report.group(bone.to_string(), regression_map(&bm));
        }
    }
    report.metrics = regression_map(&m);
    emit_scatter(&fused.0, &fused.1, out_dir.join("fused_scatter.svg"))?;
    Ok(report)
}
