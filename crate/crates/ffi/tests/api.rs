use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use boneage_ffi::*;

fn last_error() -> String {
    let p = ba_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn synth(n: usize, seed: u64) -> *mut BaDataset {
    let mut ds = ptr::null_mut();
    assert_eq!(unsafe { ba_dataset_synth(n, seed, &mut ds) }, BaStatus::Ok);
    ds
}

#[test]
fn dataset_round_trip_through_file() {
    let tmp = tempfile::tempdir().unwrap();
    let path = CString::new(tmp.path().join("d.jsonl").to_str().unwrap()).unwrap();
    let ds = synth(5, 1);
    unsafe {
        assert_eq!(ba_dataset_len(ds), 15);
        assert_eq!(ba_dataset_save(ds, path.as_ptr()), BaStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(ba_dataset_load(path.as_ptr(), &mut back), BaStatus::Ok);
        assert_eq!(ba_dataset_len(back), 15);
        let (mut f1, mut f2) = ([0.0; 25], [0.0; 25]);
        assert_eq!(ba_dataset_features(ds, 3, f1.as_mut_ptr()), BaStatus::Ok);
        assert_eq!(ba_dataset_features(back, 3, f2.as_mut_ptr()), BaStatus::Ok);
        assert_eq!(f1, f2);
        ba_dataset_free(back);
        ba_dataset_free(ds);
    }
}

#[test]
fn null_and_range_errors_set_message() {
    unsafe {
        assert_eq!(
            ba_dataset_synth(1, 0, ptr::null_mut()),
            BaStatus::NullArgument
        );
        assert!(last_error().contains("null"));
        let ds = synth(2, 0);
        let mut f = [0.0; 25];
        assert_eq!(
            ba_dataset_features(ds, 99, f.as_mut_ptr()),
            BaStatus::InvalidArgument
        );
        assert!(last_error().contains("out of range"));
        assert_eq!(ba_dataset_len(ptr::null()), 0);
        ba_dataset_free(ds);
        ba_dataset_free(ptr::null_mut());
    }
}

#[test]
fn error_message_is_per_thread() {
    unsafe {
        let mut out = 0.0;
        assert_eq!(ba_fuse(ptr::null(), 0, &mut out), BaStatus::Numeric);
    }
    let here = last_error();
    std::thread::spawn(|| assert!(ba_last_error_message().is_null()))
        .join()
        .unwrap();
    assert_eq!(last_error(), here);
}

#[test]
fn elastic_distance_and_fusion() {
    let a = [0.0, 1.0, 2.0];
    let b = [0.0, 2.0, 2.0];
    let mut d = 0.0;
    unsafe {
        assert_eq!(
            ba_elastic_distance(
                BaMeasure::Euclidean as i32,
                0.0,
                0.0,
                a.as_ptr(),
                b.as_ptr(),
                3,
                &mut d
            ),
            BaStatus::Ok
        );
        assert_eq!(d, 1.0);
        assert_eq!(
            ba_elastic_distance(42, 0.0, 0.0, a.as_ptr(), b.as_ptr(), 3, &mut d),
            BaStatus::InvalidArgument
        );
        assert_eq!(
            ba_elastic_distance(
                BaMeasure::Dtw as i32,
                2.0,
                0.0,
                a.as_ptr(),
                b.as_ptr(),
                3,
                &mut d
            ),
            BaStatus::InvalidArgument
        );
        let p = [5.0, 5.5, 9.0];
        assert_eq!(ba_fuse(p.as_ptr(), 3, &mut d), BaStatus::Ok);
        assert_eq!(d, 5.25);
    }
    assert_eq!(ba_stage_letter(0), b'B' as std::ffi::c_char);
    assert_eq!(ba_stage_letter(7), b'I' as std::ffi::c_char);
    assert_eq!(ba_stage_letter(8), 0);
}

#[test]
fn age_bank_train_save_load_predict() {
    let tmp = tempfile::tempdir().unwrap();
    let path = CString::new(tmp.path().join("bank.json").to_str().unwrap()).unwrap();
    let ds = synth(40, 3);
    unsafe {
        let mut bank = ptr::null_mut();
        assert_eq!(
            ba_age_bank_train(ds, 9, &mut bank),
            BaStatus::InvalidArgument
        );
        assert_eq!(
            ba_age_bank_train(ds, BaFactors::Sex as i32, &mut bank),
            BaStatus::Ok
        );
        assert_eq!(ba_age_bank_save(bank, path.as_ptr()), BaStatus::Ok);
        let mut loaded = ptr::null_mut();
        assert_eq!(ba_age_bank_load(path.as_ptr(), &mut loaded), BaStatus::Ok);
        let mut count = 0;
        assert_eq!(
            ba_age_bank_predict(loaded, ds, 0.95, ptr::null_mut(), 0, &mut count),
            BaStatus::BufferTooSmall
        );
        assert_eq!(count, 40);
        let (mut a1, mut a2) = (vec![0.0; 40], vec![0.0; 40]);
        assert_eq!(
            ba_age_bank_predict(bank, ds, 0.95, a1.as_mut_ptr(), 40, &mut count),
            BaStatus::Ok
        );
        assert_eq!(
            ba_age_bank_predict(loaded, ds, 0.95, a2.as_mut_ptr(), 40, &mut count),
            BaStatus::Ok
        );
        assert_eq!(a1, a2);
        assert!(a1.iter().all(|v| v.is_finite() && *v > 0.0));
        ba_age_bank_free(loaded);
        ba_age_bank_free(bank);
        ba_dataset_free(ds);
    }
}

#[test]
fn stage_model_from_cli_file() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let code = boneage::cli::run([
        "boneage",
        "synth",
        "--n",
        "40",
        "--seed",
        "2",
        "--quiet",
        "--output",
        d.join("d.jsonl").to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let code = boneage::cli::run([
        "boneage",
        "train-stage",
        "--quiet",
        "--classifier",
        "knn",
        "--folds",
        "3",
        "--input",
        d.join("d.jsonl").to_str().unwrap(),
        "--output",
        d.join("m.json").to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let path = CString::new(d.join("m.json").to_str().unwrap()).unwrap();
    let ds = synth(4, 9);
    unsafe {
        let mut model = ptr::null_mut();
        assert_eq!(ba_stage_model_load(path.as_ptr(), &mut model), BaStatus::Ok);
        let n = ba_dataset_len(ds);
        let mut x = vec![0.0; n * 25];
        for i in 0..n {
            assert_eq!(
                ba_dataset_features(ds, i, x[i * 25..].as_mut_ptr()),
                BaStatus::Ok
            );
        }
        let mut stages = vec![-1i32; n];
        assert_eq!(
            ba_stage_model_classify(model, x.as_ptr(), n, 25, stages.as_mut_ptr()),
            BaStatus::Ok
        );
        assert!(stages.iter().all(|s| (0..8).contains(s)));
        assert_eq!(
            ba_stage_model_classify(model, x.as_ptr(), n, 7, stages.as_mut_ptr()),
            BaStatus::Data
        );
        ba_stage_model_free(model);
        ba_dataset_free(ds);
    }
}

fn target_dir() -> PathBuf {
    // .../target/<profile>/deps/api-<hash>
    std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf()
}

#[test]
fn c_program_links_against_static_library() {
    let lib = target_dir().join("libboneage_ffi.a");
    assert!(lib.is_file(), "{} missing", lib.display());
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let tmp = tempfile::tempdir().unwrap();
    let exe = tmp.path().join("smoke");
    let status = Command::new("cc")
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(
        out.status.success(),
        "{:?} {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok 0.1.0 30"));
}
