//! C interface to the scoring library. Handles are opaque boxes owned by the
//! caller and released through the matching `_free` function; every fallible
//! call returns a status code and records a message readable through
//! `ius_last_error_message` on the same thread.

use ius_core::data::{load_baseline, load_image, load_model, DataError};
use ius_core::ius::{ius_score, profile_of, utility_level, BaselineProfile, ScoreError, UtilityLevel};
use ius_core::neural::{EpuModel, NeuralError};
use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr};
use std::path::Path;
use std::ptr;

/// Outcome of a call. Anything but `Ok` leaves a message for
/// `ius_last_error_message`.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum IusStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// A file could not be read or written.
    Io = 3,
    /// An input file or argument was malformed or inconsistent.
    Data = 4,
    /// The computation produced a non-finite or out-of-range value.
    Numeric = 5,
}

/// A loaded classifier. Create with `ius_model_load`, release with
/// `ius_model_free`.
pub struct IusModel {
    inner: EpuModel<f32>,
}

/// A loaded baseline profile. Create with `ius_baseline_load`, release with
/// `ius_baseline_free`.
pub struct IusBaseline {
    inner: BaselineProfile,
}

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn done_ok() -> IusStatus {
    LAST_ERROR.with(|e| e.borrow_mut().clear());
    IusStatus::Ok
}

fn fail(status: IusStatus, msg: String) -> IusStatus {
    LAST_ERROR.with(|e| {
        let mut slot = e.borrow_mut();
        slot.clear();
        // Interior NULs would truncate the C string, so replace them.
        slot.extend(msg.bytes().map(|b| if b == 0 { b' ' } else { b }));
    });
    status
}

fn null_arg(name: &str) -> IusStatus {
    fail(IusStatus::NullArgument, format!("{name} must not be null"))
}

fn data_status(e: &DataError) -> IusStatus {
    if matches!(e, DataError::Io { .. }) {
        IusStatus::Io
    } else {
        IusStatus::Data
    }
}

fn neural_status(e: &NeuralError) -> IusStatus {
    if matches!(e, NeuralError::NonFinite(_)) {
        IusStatus::Numeric
    } else {
        IusStatus::Data
    }
}

fn score_status(e: &ScoreError) -> IusStatus {
    match e {
        ScoreError::DegenerateProfile { .. }
        | ScoreError::ScoreOutOfRange(_)
        | ScoreError::ComponentOutOfRange(_) => IusStatus::Numeric,
        ScoreError::Neural(n) => neural_status(n),
        _ => IusStatus::Data,
    }
}

/// # Safety
/// `ptr` must be null or point to a NUL-terminated string.
unsafe fn str_arg<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, IusStatus> {
    if ptr.is_null() {
        return Err(null_arg(name));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| fail(IusStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

/// Loads a model file written by the library. On success `*out` owns the
/// handle.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ius_model_load(path: *const c_char, out: *mut *mut IusModel) -> IusStatus {
    if out.is_null() {
        return null_arg("out");
    }
    *out = ptr::null_mut();
    let path = match str_arg(path, "path") {
        Ok(s) => Path::new(s),
        Err(status) => return status,
    };
    match load_model(path) {
        Ok(model) => {
            *out = Box::into_raw(Box::new(IusModel { inner: model }));
            done_ok()
        }
        Err(e) => fail(data_status(&e), e.to_string()),
    }
}

/// Releases a model handle. Null is a no-op.
///
/// # Safety
/// `model` must be null or a handle from `ius_model_load` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ius_model_free(model: *mut IusModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Loads a baseline file written by the library. On success `*out` owns the
/// handle.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ius_baseline_load(
    path: *const c_char,
    out: *mut *mut IusBaseline,
) -> IusStatus {
    if out.is_null() {
        return null_arg("out");
    }
    *out = ptr::null_mut();
    let path = match str_arg(path, "path") {
        Ok(s) => Path::new(s),
        Err(status) => return status,
    };
    match load_baseline(path) {
        Ok(baseline) => {
            *out = Box::into_raw(Box::new(IusBaseline { inner: baseline }));
            done_ok()
        }
        Err(e) => fail(data_status(&e), e.to_string()),
    }
}

/// Releases a baseline handle. Null is a no-op.
///
/// # Safety
/// `baseline` must be null or a handle from `ius_baseline_load` not yet
/// freed.
#[no_mangle]
pub unsafe extern "C" fn ius_baseline_free(baseline: *mut IusBaseline) {
    if !baseline.is_null() {
        drop(Box::from_raw(baseline));
    }
}

fn load_for_model(model: &EpuModel<f32>, path: &Path) -> Result<ius_core::pfm::Image, IusStatus> {
    load_image(path, model.pfm_config.color_space(), Some((model.input_h, model.input_w)))
        .map_err(|e| fail(data_status(&e), e.to_string()))
}

/// Scores one PNG file against a baseline. `class_name` selects the group of
/// a per-class baseline and must be null for a global one. The score lands
/// in [-1, 1].
///
/// # Safety
/// `model` and `baseline` must be live handles, `image_path` a
/// NUL-terminated string, `class_name` null or NUL-terminated, and
/// `out_score` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ius_score_image(
    model: *const IusModel,
    baseline: *const IusBaseline,
    image_path: *const c_char,
    class_name: *const c_char,
    out_score: *mut f64,
) -> IusStatus {
    if model.is_null() {
        return null_arg("model");
    }
    if baseline.is_null() {
        return null_arg("baseline");
    }
    if out_score.is_null() {
        return null_arg("out_score");
    }
    let path = match str_arg(image_path, "image_path") {
        Ok(s) => Path::new(s),
        Err(status) => return status,
    };
    let class = if class_name.is_null() {
        None
    } else {
        match str_arg(class_name, "class_name") {
            Ok(s) => Some(s),
            Err(status) => return status,
        }
    };
    let model = &(*model).inner;
    let image = match load_for_model(model, path) {
        Ok(image) => image,
        Err(status) => return status,
    };
    let outcome = profile_of(model, &image)
        .and_then(|profile| ius_score(&profile, &(*baseline).inner, class));
    match outcome {
        Ok(u) => {
            *out_score = u;
            done_ok()
        }
        Err(e) => fail(score_status(&e), e.to_string()),
    }
}

/// Computes the four contribution components of one PNG file, in the model's
/// map order. Each component lands in [-1, 1].
///
/// # Safety
/// `model` must be a live handle, `image_path` a NUL-terminated string, and
/// `out_components` must point to four doubles.
#[no_mangle]
pub unsafe extern "C" fn ius_profile_image(
    model: *const IusModel,
    image_path: *const c_char,
    out_components: *mut f64,
) -> IusStatus {
    if model.is_null() {
        return null_arg("model");
    }
    if out_components.is_null() {
        return null_arg("out_components");
    }
    let path = match str_arg(image_path, "image_path") {
        Ok(s) => Path::new(s),
        Err(status) => return status,
    };
    let model = &(*model).inner;
    let image = match load_for_model(model, path) {
        Ok(image) => image,
        Err(status) => return status,
    };
    match profile_of(model, &image) {
        Ok(profile) => {
            let components = profile.components();
            for (i, c) in components.iter().enumerate() {
                *out_components.add(i) = *c;
            }
            done_ok()
        }
        Err(e) => fail(score_status(&e), e.to_string()),
    }
}

/// Buckets a score into a level index: 0 very low through 4 very high. Fails
/// with a numeric status when the score is outside [-1, 1].
///
/// # Safety
/// `out_level` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ius_utility_level(score: f64, out_level: *mut c_int) -> IusStatus {
    if out_level.is_null() {
        return null_arg("out_level");
    }
    match utility_level(score) {
        Ok(level) => {
            *out_level = match level {
                UtilityLevel::VeryLow => 0,
                UtilityLevel::Low => 1,
                UtilityLevel::Medium => 2,
                UtilityLevel::High => 3,
                UtilityLevel::VeryHigh => 4,
            };
            done_ok()
        }
        Err(e) => fail(score_status(&e), e.to_string()),
    }
}

/// Copies this thread's last error message into `buf` as a NUL-terminated
/// string, truncating to `len - 1` bytes when needed, and returns the full
/// message length in bytes. Returns 0 when the previous call succeeded. A
/// null `buf` or zero `len` only queries the length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn ius_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string. Never null; do not
/// free.
#[no_mangle]
pub extern "C" fn ius_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
