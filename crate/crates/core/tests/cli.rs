use std::path::Path;
use std::process::{Command, Output};

fn boneage(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_boneage"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = boneage(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn error_line(out: &Output) -> serde_json::Value {
    let err = String::from_utf8(out.stderr.clone()).unwrap();
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    serde_json::from_str(err.trim()).unwrap()
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
        .display()
        .to_string()
}

#[test]
fn age_pipeline_produces_predictions_and_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(
        d,
        &[
            "synth", "--n", "80", "--seed", "4", "--output", "d.jsonl", "--quiet",
        ],
    );
    let summary: serde_json::Value = serde_json::from_str(&ok(
        d,
        &[
            "train-age",
            "--input",
            "d.jsonl",
            "--output",
            "bank.json",
            "--json",
        ],
    ))
    .unwrap();
    assert_eq!(summary["command"], "train-age");
    assert!(d.join("bank_diagnostics/report.json").is_file());
    let svg = std::fs::read_to_string(d.join("bank_diagnostics/loocv_scatter.svg")).unwrap();
    roxmltree::Document::parse(&svg).unwrap();

    ok(
        d,
        &[
            "predict-age",
            "--model",
            "bank.json",
            "--input",
            "d.jsonl",
            "--output",
            "ages.csv",
            "--level",
            "0.9",
        ],
    );
    let text = std::fs::read_to_string(d.join("ages.csv")).unwrap();
    let mut lines = text.lines();
    assert!(lines
        .next()
        .unwrap()
        .starts_with("subject_id,pred_distal,pred_middle,pred_proximal,fused,flags"));
    assert_eq!(lines.count(), 80);

    ok(
        d,
        &[
            "evaluate", "--input", "ages.csv", "--task", "age", "--truth", "d.jsonl", "--output",
            "ev",
        ],
    );
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("ev/report.json")).unwrap()).unwrap();
    let rmse = report["metrics"]["rmse"].as_f64().unwrap();
    assert!(rmse > 0.0 && rmse < 1.5, "{rmse}");
    roxmltree::Document::parse(&std::fs::read_to_string(d.join("ev/fused_scatter.svg")).unwrap())
        .unwrap();
}

#[test]
fn stage_pipeline_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(
        d,
        &[
            "synth", "--n", "60", "--seed", "5", "--output", "d.jsonl", "--quiet",
        ],
    );
    ok(
        d,
        &[
            "transform",
            "--input",
            "d.jsonl",
            "--output",
            "f.csv",
            "--quiet",
        ],
    );
    let out = ok(
        d,
        &[
            "train-stage",
            "--input",
            "f.csv",
            "--output",
            "m.json",
            "--classifier",
            "knn",
            "--folds",
            "4",
        ],
    );
    assert!(out.contains("cv_accuracy: "));
    assert!(d.join("m_cv/report.md").is_file());
    ok(
        d,
        &[
            "classify", "--model", "m.json", "--input", "d.jsonl", "--output", "p.csv", "--quiet",
        ],
    );
    let text = std::fs::read_to_string(d.join("p.csv")).unwrap();
    assert!(text.starts_with("subject_id,bone,tw_stage,predicted,score\n"));
    assert_eq!(text.lines().count(), 1 + 180);
    let summary: serde_json::Value = serde_json::from_str(&ok(
        d,
        &[
            "evaluate", "--input", "p.csv", "--task", "stage", "--output", "ev", "--json",
        ],
    ))
    .unwrap();
    let acc = summary["accuracy"].as_f64().unwrap();
    assert!(acc <= summary["within_one"].as_f64().unwrap());
}

#[test]
fn confusion_fixture_report_row() {
    let tmp = tempfile::tempdir().unwrap();
    let input = fixture("svmq_test_confusion.json");
    ok(
        tmp.path(),
        &[
            "evaluate",
            "--input",
            &input,
            "--task",
            "confusion",
            "--output",
            "ev",
            "--quiet",
        ],
    );
    let md = std::fs::read_to_string(tmp.path().join("ev/report.md")).unwrap();
    assert!(md.contains("| overall | 76.51 | 99.40 |"), "{md}");
}

#[test]
fn same_seed_same_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    for name in ["a.jsonl", "b.jsonl"] {
        ok(
            d,
            &[
                "synth", "--n", "20", "--seed", "11", "--output", name, "--quiet",
            ],
        );
    }
    ok(
        d,
        &[
            "synth", "--n", "20", "--seed", "12", "--output", "c.jsonl", "--quiet",
        ],
    );
    let read = |n: &str| std::fs::read(d.join(n)).unwrap();
    assert_eq!(read("a.jsonl"), read("b.jsonl"));
    assert_ne!(read("a.jsonl"), read("c.jsonl"));
}

#[test]
fn quiet_prints_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(
        ok(
            tmp.path(),
            &["synth", "--n", "3", "--output", "d.jsonl", "--quiet"]
        ),
        ""
    );
}

#[test]
fn missing_input_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let out = boneage(
        tmp.path(),
        &["train-age", "--input", "nope.jsonl", "--output", "b.json"],
    );
    assert_eq!(out.status.code(), Some(3));
    let e = error_line(&out);
    assert_eq!(e["exit_code"], 3);
    assert_eq!(e["error"], "io");
}

#[test]
fn usage_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = boneage(tmp.path(), &["classify", "--model", "m.json"]);
    assert_eq!(out.status.code(), Some(2));
    let e = error_line(&out);
    assert_eq!(e["error"], "usage");
    assert!(e["message"].as_str().unwrap().contains("--input"));

    let out = boneage(
        tmp.path(),
        &["synth", "--output", "d.jsonl", "--json", "--quiet"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_config_field_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("c.json"), r#"{"sede": 3}"#).unwrap();
    let out = boneage(
        tmp.path(),
        &["synth", "--output", "d.jsonl", "--config", "c.json"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_line(&out)["error"], "invalid_parameter");
    assert!(!tmp.path().join("d.jsonl").exists());
}

#[test]
fn elastic_requires_radial() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(d, &["synth", "--n", "10", "--output", "d.jsonl", "--quiet"]);
    let out = boneage(
        d,
        &[
            "train-stage",
            "--input",
            "d.jsonl",
            "--output",
            "m.json",
            "--classifier",
            "elastic",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_stage_csv_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(
        tmp.path().join("p.csv"),
        "subject_id,bone,tw_stage,predicted,score\ns1,distal,Q,D,1\n",
    )
    .unwrap();
    let out = boneage(
        tmp.path(),
        &[
            "evaluate", "--input", "p.csv", "--task", "stage", "--output", "ev",
        ],
    );
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_line(&out)["error"], "parse");
}
