//! C interface to `boneage`.
//!
//! Objects are opaque handles released with the matching `*_free`. Every
//! fallible call returns a [`BaStatus`]; on failure the message is available
//! from [`ba_last_error_message`] on the same thread until the next failing
//! call. Stages are passed as integers 0..=7 for B..=I.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use boneage::cli::StageModel;
use boneage::data::{
    generate_synthetic, load_dataset, save_dataset, Dataset, GeneratorConfig, TwStage,
};
use boneage::elastic::{elastic_distance, ElasticMeasure};
use boneage::features::{FeatureRow, N_FEATURES};
use boneage::regress::{
    fuse_predictions, predict_ages, train_bone_bank, BoneAgeModelBank, FactorSet,
};
use boneage::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    Io = 3,
    Data = 4,
    Numeric = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Values accepted by the `measure` argument of [`ba_elastic_distance`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaMeasure {
    Euclidean = 0,
    /// `param_a`: window fraction.
    Dtw = 1,
    /// `param_a`: penalty g.
    Wdtw = 2,
    /// `param_a`: epsilon; no band.
    Lcss = 3,
    /// `param_a`: gap value; no band.
    Erp = 4,
    /// `param_a`: stiffness, `param_b`: penalty.
    Twed = 5,
    /// `param_a`: split/merge cost.
    Msm = 6,
}

/// Values accepted by the `factors` argument of [`ba_age_bank_train`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaFactors {
    None = 0,
    Sex = 1,
    SexEthnicity = 2,
}

pub struct BaDataset(Dataset);
pub struct BaStageModel(StageModel);
pub struct BaAgeBank(BoneAgeModelBank);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> BaStatus {
    match e.exit_code() {
        2 => BaStatus::InvalidArgument,
        4 => BaStatus::Numeric,
        _ => match e {
            Error::Io(_) => BaStatus::Io,
            _ => BaStatus::Data,
        },
    }
}

struct Fail(BaStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> BaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BaStatus::Ok,
        Ok(Err(Fail(s, m))) => {
            set_error(&m);
            s
        }
        Err(_) => {
            set_error("internal panic");
            BaStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(BaStatus::NullArgument, format!("{what} is null"))
}

unsafe fn path_arg<'a>(p: *const c_char) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(BaStatus::InvalidArgument, "path is not UTF-8".into()))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn slice<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], Fail> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ba_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ba_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Generates `n_subjects` synthetic subjects with the default generator.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn ba_dataset_synth(
    n_subjects: usize,
    seed: u64,
    out: *mut *mut BaDataset,
) -> BaStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = boxed(BaDataset(generate_synthetic(
            n_subjects,
            seed,
            &GeneratorConfig::default(),
        )?));
        Ok(())
    })
}

/// Loads a JSON-lines dataset.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ba_dataset_load(
    path: *const c_char,
    out: *mut *mut BaDataset,
) -> BaStatus {
    guard(|| {
        let path = path_arg(path)?;
        let out = out_ptr(out, "out")?;
        *out = boxed(BaDataset(load_dataset(path)?));
        Ok(())
    })
}

/// # Safety
/// `ds` must be a live dataset handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ba_dataset_save(ds: *const BaDataset, path: *const c_char) -> BaStatus {
    guard(|| {
        let ds = handle(ds, "dataset")?;
        save_dataset(&ds.0, path_arg(path)?)?;
        Ok(())
    })
}

/// Number of bone records, or 0 for NULL.
///
/// # Safety
/// `ds` must be NULL or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn ba_dataset_len(ds: *const BaDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.len())
}

/// # Safety
/// `ds` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ba_dataset_free(ds: *mut BaDataset) {
    free(ds)
}

/// Writes the 25 shape features of record `index` into `out` (25 doubles).
///
/// # Safety
/// `ds` must be a live handle; `out` must hold 25 doubles.
#[no_mangle]
pub unsafe extern "C" fn ba_dataset_features(
    ds: *const BaDataset,
    index: usize,
    out: *mut f64,
) -> BaStatus {
    guard(|| {
        let ds = handle(ds, "dataset")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let rec = ds.0.records.get(index).ok_or_else(|| {
            Fail(
                BaStatus::InvalidArgument,
                format!("record {index} out of range ({} records)", ds.0.len()),
            )
        })?;
        let row = FeatureRow::from_record(rec)?;
        std::slice::from_raw_parts_mut(out, N_FEATURES).copy_from_slice(&row.features.values);
        Ok(())
    })
}

/// Number of shape features per record.
#[no_mangle]
pub extern "C" fn ba_feature_count() -> usize {
    N_FEATURES
}

/// Distance between two series of length `n` under `measure`.
///
/// # Safety
/// `a` and `b` must each point to `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ba_elastic_distance(
    measure: i32,
    param_a: f64,
    param_b: f64,
    a: *const f64,
    b: *const f64,
    n: usize,
    out: *mut f64,
) -> BaStatus {
    guard(|| {
        let (a, b) = (slice(a, n, "a")?, slice(b, n, "b")?);
        let out = out_ptr(out, "out")?;
        let m = match measure {
            x if x == BaMeasure::Euclidean as i32 => ElasticMeasure::Euclidean,
            x if x == BaMeasure::Dtw as i32 => ElasticMeasure::Dtw { window: param_a },
            x if x == BaMeasure::Wdtw as i32 => ElasticMeasure::Wdtw { g: param_a },
            x if x == BaMeasure::Lcss as i32 => ElasticMeasure::Lcss {
                epsilon: param_a,
                band: None,
            },
            x if x == BaMeasure::Erp as i32 => ElasticMeasure::Erp {
                gap: param_a,
                band: None,
            },
            x if x == BaMeasure::Twed as i32 => ElasticMeasure::Twed {
                stiffness: param_a,
                penalty: param_b,
            },
            x if x == BaMeasure::Msm as i32 => ElasticMeasure::Msm { cost: param_a },
            other => {
                return Err(Fail(
                    BaStatus::InvalidArgument,
                    format!("unknown measure {other}"),
                ))
            }
        };
        *out = elastic_distance(&m, a, b)?;
        Ok(())
    })
}

/// Loads a stage model written by `boneage train-stage`.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ba_stage_model_load(
    path: *const c_char,
    out: *mut *mut BaStageModel,
) -> BaStatus {
    guard(|| {
        let path = path_arg(path)?;
        let out = out_ptr(out, "out")?;
        *out = boxed(BaStageModel(StageModel::load(path)?));
        Ok(())
    })
}

/// Classifies `n_rows` row-major input vectors of width `n_cols` (feature
/// rows or radial series, matching the model) into `out_stages`.
///
/// # Safety
/// `x` must point to `n_rows * n_cols` doubles and `out_stages` to `n_rows`
/// integers.
#[no_mangle]
pub unsafe extern "C" fn ba_stage_model_classify(
    model: *const BaStageModel,
    x: *const f64,
    n_rows: usize,
    n_cols: usize,
    out_stages: *mut i32,
) -> BaStatus {
    guard(|| {
        let model = handle(model, "model")?;
        let len = n_rows
            .checked_mul(n_cols)
            .ok_or_else(|| Fail(BaStatus::InvalidArgument, "size overflow".into()))?;
        let data = slice(x, len, "x")?;
        if n_rows > 0 && out_stages.is_null() {
            return Err(null("out_stages"));
        }
        let rows: Vec<Vec<f64>> = data.chunks(n_cols.max(1)).map(<[f64]>::to_vec).collect();
        let pred = model.0.classify(&rows)?;
        for (k, (s, _)) in pred.into_iter().enumerate() {
            *out_stages.add(k) = s.index() as i32;
        }
        Ok(())
    })
}

/// # Safety
/// `model` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ba_stage_model_free(model: *mut BaStageModel) {
    free(model)
}

/// Letter of stage index 0..=7 (`'B'..='I'`), or 0 when out of range.
#[no_mangle]
pub extern "C" fn ba_stage_letter(stage: i32) -> c_char {
    usize::try_from(stage)
        .ok()
        .and_then(TwStage::from_index)
        .map_or(0, |s| s.letter() as c_char)
}

fn feature_rows(ds: &Dataset) -> Result<Vec<FeatureRow>, Fail> {
    Ok(ds
        .records
        .iter()
        .map(FeatureRow::from_record)
        .collect::<boneage::Result<_>>()?)
}

/// Fits the per-bone age models on a labelled dataset.
///
/// # Safety
/// `ds` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ba_age_bank_train(
    ds: *const BaDataset,
    factors: i32,
    out: *mut *mut BaAgeBank,
) -> BaStatus {
    guard(|| {
        let ds = handle(ds, "dataset")?;
        let out = out_ptr(out, "out")?;
        let factors = match factors {
            x if x == BaFactors::None as i32 => FactorSet::None,
            x if x == BaFactors::Sex as i32 => FactorSet::Sex,
            x if x == BaFactors::SexEthnicity as i32 => FactorSet::SexEthnicity,
            other => {
                return Err(Fail(
                    BaStatus::InvalidArgument,
                    format!("unknown factor set {other}"),
                ))
            }
        };
        *out = boxed(BaAgeBank(train_bone_bank(&feature_rows(&ds.0)?, factors)?));
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ba_age_bank_load(
    path: *const c_char,
    out: *mut *mut BaAgeBank,
) -> BaStatus {
    guard(|| {
        let path = path_arg(path)?;
        let out = out_ptr(out, "out")?;
        *out = boxed(BaAgeBank(BoneAgeModelBank::load(path)?));
        Ok(())
    })
}

/// # Safety
/// `bank` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ba_age_bank_save(bank: *const BaAgeBank, path: *const c_char) -> BaStatus {
    guard(|| {
        let bank = handle(bank, "bank")?;
        bank.0.save(path_arg(path)?)?;
        Ok(())
    })
}

/// Fused age per subject, in order of first appearance in `ds`.
/// `*out_count` always receives the number of subjects; when it exceeds
/// `capacity` nothing is written and `BufferTooSmall` is returned.
///
/// # Safety
/// `bank` and `ds` must be live handles; `out_ages` must hold `capacity`
/// doubles; `out_count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ba_age_bank_predict(
    bank: *const BaAgeBank,
    ds: *const BaDataset,
    level: f64,
    out_ages: *mut f64,
    capacity: usize,
    out_count: *mut usize,
) -> BaStatus {
    guard(|| {
        let bank = handle(bank, "bank")?;
        let ds = handle(ds, "dataset")?;
        let count = out_ptr(out_count, "out_count")?;
        let preds = predict_ages(&bank.0, &feature_rows(&ds.0)?, level)?;
        *count = preds.len();
        if preds.len() > capacity {
            return Err(Fail(
                BaStatus::BufferTooSmall,
                format!("{} subjects, capacity {capacity}", preds.len()),
            ));
        }
        if !preds.is_empty() && out_ages.is_null() {
            return Err(null("out_ages"));
        }
        for (k, p) in preds.iter().enumerate() {
            *out_ages.add(k) = p.fused;
        }
        Ok(())
    })
}

/// # Safety
/// `bank` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ba_age_bank_free(bank: *mut BaAgeBank) {
    free(bank)
}

/// Fuses one to three per-bone age predictions.
///
/// # Safety
/// `preds` must point to `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ba_fuse(preds: *const f64, n: usize, out: *mut f64) -> BaStatus {
    guard(|| {
        let preds = slice(preds, n, "preds")?;
        let out = out_ptr(out, "out")?;
        *out = fuse_predictions(preds)?.value;
        Ok(())
    })
}
