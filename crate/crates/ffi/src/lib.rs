//! C ABI over `stap-core`.
//!
//! Objects cross the boundary as opaque handles that the caller releases
//! with the matching `*_free`. Every fallible call returns a [`StapStatus`];
//! the message of the most recent failure on the calling thread is available
//! from [`stap_last_error`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use stap_core::beamform::{HeatmapBuilder, HeatmapTensor};
use stap_core::dataset::normalize::{denormalize_labels, normalize_features};
use stap_core::dataset::{calibrated_scenario, generate_dataset, generate_example, Dataset, GenerateOptions};
use stap_core::eval::{baseline_predict, evaluate};
use stap_core::nn::checkpoint::Checkpoint;
use stap_core::nn::model::INPUT_SHAPE;
use stap_core::nn::train::{predict, train, TrainConfig, TrainingSet};
use stap_core::scene::ScenarioConfig;
use stap_core::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StapStatus {
    Ok = 0,
    NullPointer = 1,
    /// Bad configuration or argument (CLI exit code 2).
    Config = 2,
    /// Malformed data, shape or I/O problem (CLI exit code 3).
    Data = 3,
    /// Numerical failure (CLI exit code 4).
    Numerical = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

impl From<&Error> for StapStatus {
    fn from(e: &Error) -> Self {
        match e.exit_code() {
            2 => StapStatus::Config,
            4 => StapStatus::Numerical,
            _ => StapStatus::Data,
        }
    }
}

/// Scenario configuration.
pub struct StapScenario {
    config: ScenarioConfig,
}

/// Dataset loaded into memory.
pub struct StapDataset {
    dataset: Dataset,
}

/// Trained network plus the normalization it was trained under.
pub struct StapModel {
    checkpoint: Checkpoint,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn guard(f: impl FnOnce() -> Result<(), StapStatus>) -> StapStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => StapStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => {
            set_error("internal panic".into());
            StapStatus::Panic
        }
    }
}

fn fail(e: Error) -> StapStatus {
    let status = StapStatus::from(&e);
    set_error(e.to_string());
    status
}

fn null(what: &str) -> StapStatus {
    set_error(format!("{what} is null"));
    StapStatus::NullPointer
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, StapStatus> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_slice<'a>(p: *mut f64, len: usize, need: usize, what: &str) -> Result<&'a mut [f64], StapStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    if len < need {
        set_error(format!("{what} holds {len} values, {need} needed"));
        return Err(StapStatus::BufferTooSmall);
    }
    Ok(std::slice::from_raw_parts_mut(p, need))
}

unsafe fn in_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, StapStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        StapStatus::Config
    })
}

fn put<T>(out: *mut *mut T, value: T) -> Result<(), StapStatus> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    unsafe { *out = Box::into_raw(Box::new(value)) };
    Ok(())
}

fn tensor_len(config: &ScenarioConfig) -> usize {
    config.range_grid.n_bins * config.angle_grid.n_theta * config.angle_grid.n_phi
}

/// Copy the last error message on this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length in bytes.
#[no_mangle]
pub unsafe extern "C" fn stap_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn stap_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// The built-in reference scenario.
#[no_mangle]
pub unsafe extern "C" fn stap_scenario_reference(out: *mut *mut StapScenario) -> StapStatus {
    guard(|| {
        put(
            out,
            StapScenario {
                config: ScenarioConfig::reference(),
            },
        )
    })
}

/// Parse a scenario from JSON text.
#[no_mangle]
pub unsafe extern "C" fn stap_scenario_from_json(json: *const c_char, out: *mut *mut StapScenario) -> StapStatus {
    guard(|| {
        let text = in_str(json, "json")?;
        let config: ScenarioConfig = serde_json::from_str(text).map_err(|e| {
            set_error(format!("scenario JSON: {e}"));
            StapStatus::Config
        })?;
        config.validate().map_err(fail)?;
        put(out, StapScenario { config })
    })
}

#[no_mangle]
pub unsafe extern "C" fn stap_scenario_free(scenario: *mut StapScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Tensor dimensions `(bins, theta, phi)` for this scenario.
#[no_mangle]
pub unsafe extern "C" fn stap_scenario_tensor_shape(scenario: *const StapScenario, shape: *mut usize) -> StapStatus {
    guard(|| {
        let s = deref(scenario, "scenario")?;
        if shape.is_null() {
            return Err(null("shape"));
        }
        let dims = [
            s.config.range_grid.n_bins,
            s.config.angle_grid.n_theta,
            s.config.angle_grid.n_phi,
        ];
        ptr::copy_nonoverlapping(dims.as_ptr(), shape, 3);
        Ok(())
    })
}

/// Calibrate the amplitude scale to the scenario's SCNR target in place.
#[no_mangle]
pub unsafe extern "C" fn stap_scenario_calibrate(scenario: *mut StapScenario, master_seed: u64) -> StapStatus {
    guard(|| {
        let s = scenario.as_mut().ok_or_else(|| null("scenario"))?;
        s.config = calibrated_scenario(&s.config, master_seed).map_err(fail)?;
        Ok(())
    })
}

/// Simulate one example: linear-power tensor into `tensor` and the
/// Cartesian label into `label[3]`.
#[no_mangle]
pub unsafe extern "C" fn stap_simulate_example(
    scenario: *const StapScenario,
    master_seed: u64,
    id: u64,
    tensor: *mut f64,
    tensor_len_in: usize,
    label: *mut f64,
) -> StapStatus {
    guard(|| {
        let s = deref(scenario, "scenario")?;
        let out = out_slice(tensor, tensor_len_in, tensor_len(&s.config), "tensor")?;
        let lab = out_slice(label, 3, 3, "label")?;
        let c = &s.config;
        let builder = HeatmapBuilder::mvdr(&c.array, &c.angle_grid, c.loading_rel);
        let ex = generate_example(c, &builder, master_seed, id).map_err(fail)?;
        out.copy_from_slice(ex.tensor.values());
        lab.copy_from_slice(&ex.label.to_array());
        Ok(())
    })
}

/// Peak-cell baseline prediction for a raw tensor laid out `(bin, theta, phi)`.
#[no_mangle]
pub unsafe extern "C" fn stap_baseline_predict(
    scenario: *const StapScenario,
    tensor: *const f64,
    len: usize,
    position: *mut f64,
) -> StapStatus {
    guard(|| {
        let s = deref(scenario, "scenario")?;
        if tensor.is_null() {
            return Err(null("tensor"));
        }
        let c = &s.config;
        let values = std::slice::from_raw_parts(tensor, len).to_vec();
        let t = HeatmapTensor::new([c.range_grid.n_bins, c.angle_grid.n_theta, c.angle_grid.n_phi], values)
            .map_err(fail)?;
        let p = baseline_predict(&t, &c.range_grid, &c.angle_grid).map_err(fail)?;
        out_slice(position, 3, 3, "position")?.copy_from_slice(&p.to_array());
        Ok(())
    })
}

/// Generate a dataset on disk.
#[no_mangle]
pub unsafe extern "C" fn stap_dataset_generate(
    scenario: *const StapScenario,
    master_seed: u64,
    n: usize,
    dir: *const c_char,
    workers: usize,
    overwrite: bool,
) -> StapStatus {
    guard(|| {
        let s = deref(scenario, "scenario")?;
        let dir = PathBuf::from(in_str(dir, "dir")?);
        let options = GenerateOptions {
            workers: workers.max(1),
            overwrite,
            ..GenerateOptions::default()
        };
        generate_dataset(&s.config, master_seed, n, &dir, &options).map_err(fail)?;
        Ok(())
    })
}

/// Open and verify a dataset directory.
#[no_mangle]
pub unsafe extern "C" fn stap_dataset_open(dir: *const c_char, out: *mut *mut StapDataset) -> StapStatus {
    guard(|| {
        let dir = PathBuf::from(in_str(dir, "dir")?);
        let dataset = Dataset::open(&dir).map_err(fail)?;
        put(out, StapDataset { dataset })
    })
}

#[no_mangle]
pub unsafe extern "C" fn stap_dataset_free(dataset: *mut StapDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

#[no_mangle]
pub unsafe extern "C" fn stap_dataset_len(dataset: *const StapDataset, len: *mut usize) -> StapStatus {
    guard(|| {
        let d = deref(dataset, "dataset")?;
        if len.is_null() {
            return Err(null("len"));
        }
        *len = d.dataset.len();
        Ok(())
    })
}

/// Copy example `index` (linear power) and its label out of the dataset.
#[no_mangle]
pub unsafe extern "C" fn stap_dataset_example(
    dataset: *const StapDataset,
    index: usize,
    tensor: *mut f64,
    tensor_len_in: usize,
    label: *mut f64,
) -> StapStatus {
    guard(|| {
        let d = deref(dataset, "dataset")?;
        let ex = d.dataset.examples.get(index).ok_or_else(|| {
            fail(Error::Index {
                what: "example",
                index,
                len: d.dataset.len(),
            })
        })?;
        let out = out_slice(tensor, tensor_len_in, ex.tensor.values().len(), "tensor")?;
        out.copy_from_slice(ex.tensor.values());
        out_slice(label, 3, 3, "label")?.copy_from_slice(&ex.label.to_array());
        Ok(())
    })
}

/// Train on the dataset's training split. `epochs` or `batch_size` of 0
/// select the defaults.
#[no_mangle]
pub unsafe extern "C" fn stap_model_train(
    dataset: *const StapDataset,
    seed: u64,
    epochs: usize,
    batch_size: usize,
    out: *mut *mut StapModel,
) -> StapStatus {
    guard(|| {
        let d = deref(dataset, "dataset")?;
        let mut config = TrainConfig::new(seed);
        if epochs > 0 {
            config.epochs = epochs;
        }
        if batch_size > 0 {
            config.batch_size = batch_size;
        }
        let set = TrainingSet::from_dataset(&d.dataset).map_err(fail)?;
        let outcome = train(&set, &config).map_err(fail)?;
        put(
            out,
            StapModel {
                checkpoint: Checkpoint {
                    params: outcome.params,
                    normalization: d.dataset.normalization().clone(),
                },
            },
        )
    })
}

#[no_mangle]
pub unsafe extern "C" fn stap_model_load(path: *const c_char, out: *mut *mut StapModel) -> StapStatus {
    guard(|| {
        let path = PathBuf::from(in_str(path, "path")?);
        let checkpoint = Checkpoint::load(&path).map_err(fail)?;
        put(out, StapModel { checkpoint })
    })
}

#[no_mangle]
pub unsafe extern "C" fn stap_model_save(model: *const StapModel, path: *const c_char) -> StapStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let path = PathBuf::from(in_str(path, "path")?);
        m.checkpoint.save(&path).map_err(fail)
    })
}

#[no_mangle]
pub unsafe extern "C" fn stap_model_free(model: *mut StapModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Predict the target position in meters from a raw linear-power tensor of
/// shape `(5, 26, 21)`.
#[no_mangle]
pub unsafe extern "C" fn stap_model_predict(
    model: *const StapModel,
    tensor: *const f64,
    len: usize,
    position: *mut f64,
) -> StapStatus {
    guard(|| {
        let m = deref(model, "model")?;
        if tensor.is_null() {
            return Err(null("tensor"));
        }
        let values = std::slice::from_raw_parts(tensor, len).to_vec();
        let t = HeatmapTensor::new(INPUT_SHAPE, values).map_err(fail)?;
        let norm = &m.checkpoint.normalization;
        let features = normalize_features(&t, &norm.features).map_err(fail)?;
        let raw = predict(&m.checkpoint.params, &features, 1).map_err(fail)?;
        let p = denormalize_labels([raw[0], raw[1], raw[2]], &norm.labels);
        out_slice(position, 3, 3, "position")?.copy_from_slice(&p.to_array());
        Ok(())
    })
}

/// Mean test-split localization error in meters of the model and of the
/// peak-cell baseline.
#[no_mangle]
pub unsafe extern "C" fn stap_evaluate(
    model: *const StapModel,
    dataset: *const StapDataset,
    err_cnn_m: *mut f64,
    err_mvdr_m: *mut f64,
) -> StapStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let d = deref(dataset, "dataset")?;
        if err_cnn_m.is_null() || err_mvdr_m.is_null() {
            return Err(null("error output"));
        }
        let report = evaluate(&m.checkpoint, &d.dataset).map_err(fail)?;
        *err_cnn_m = report.err_cnn_m;
        *err_mvdr_m = report.err_mvdr_m;
        Ok(())
    })
}
