//! C ABI for the gnnseg library.
//!
//! Every object crosses the boundary as an opaque pointer created by a
//! `gnnseg_*_new`, `_read`, `_load` or producing call and released with the
//! matching `_free` function. Fallible calls return a status code; on a
//! non-zero status the thread-local message from [`gnnseg_last_error`]
//! describes the failure. Panics never unwind into the caller.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use gnnseg::imagecore::{generate_phantom, LabelMask, PhantomSpec, Slice, Tissue};
use gnnseg::pipeline::{train, Control, GnnSegConfig, GnnSegModel, PreparedSlice, TrainConfig};
use gnnseg::{io, metrics};

/// Success.
pub const GNNSEG_OK: i32 = 0;
/// A required pointer was null, or the library failed internally.
pub const GNNSEG_ERR_INTERNAL: i32 = 1;
/// Invalid argument, shape mismatch or unparsable input.
pub const GNNSEG_ERR_INVALID: i32 = 2;
/// File system or image codec failure.
pub const GNNSEG_ERR_IO: i32 = 3;
/// A computation produced NaN or infinity.
pub const GNNSEG_ERR_NON_FINITE: i32 = 4;

/// A trained or freshly initialized segmentation model.
pub struct GnnsegModel {
    inner: GnnSegModel,
}

/// A multi-modality image slice.
pub struct GnnsegSlice {
    inner: Slice,
}

/// A per-pixel tissue label map (0 background, 1 CSF, 2 GM, 3 WM).
pub struct GnnsegMask {
    inner: LabelMask,
}

/// Trainable parameter counts of a model.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GnnsegParameterCount {
    pub structural: usize,
    pub classifier: usize,
    pub total: usize,
}

/// Scores of one tissue class. A metric that is not applicable to the
/// given masks is NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GnnsegClassMetrics {
    pub class_id: u8,
    pub dice: f64,
    pub tp: f64,
    /// Average perpendicular distance in pixels.
    pub apd: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

enum Failure {
    Internal(String),
    Lib(gnnseg::Error),
}

impl From<gnnseg::Error> for Failure {
    fn from(e: gnnseg::Error) -> Self {
        Failure::Lib(e)
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Lib(gnnseg::Error::validation(msg))
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

/// Run `f`, translate its outcome to a status code and record the message.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> i32 {
    let (code, msg) = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => (GNNSEG_OK, String::new()),
        Ok(Err(Failure::Internal(m))) => (GNNSEG_ERR_INTERNAL, m),
        Ok(Err(Failure::Lib(e))) => (e.exit_code(), e.to_string()),
        Err(payload) => {
            let detail = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            (GNNSEG_ERR_INTERNAL, format!("internal error: {detail}"))
        }
    };
    set_last_error(msg);
    code
}

unsafe fn obj<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure::Internal(format!("{what} is null")))
}

unsafe fn obj_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure::Internal(format!("{what} is null")))
}

unsafe fn path(p: *const c_char, what: &str) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(Failure::Internal(format!("{what} is null")));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not valid UTF-8")))?;
    Ok(PathBuf::from(s))
}

unsafe fn out_ptr<'a, T>(p: *mut *mut T, what: &str) -> Result<&'a mut *mut T, Failure> {
    let slot = obj_mut(p, what)?;
    *slot = std::ptr::null_mut();
    Ok(slot)
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gnnseg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message describing the last failed call on this thread, or an empty
/// string. The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn gnnseg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Generate a ring phantom of `size`×`size` pixels with two modalities.
/// `out_mask` may be null when the reference labels are not needed.
///
/// # Safety
/// `out_slice` must be valid for writes; `out_mask` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn gnnseg_phantom(
    size: usize,
    seed: u64,
    noise_sigma: f64,
    out_slice: *mut *mut GnnsegSlice,
    out_mask: *mut *mut GnnsegMask,
) -> i32 {
    guard(|| {
        let slot = out_ptr(out_slice, "out_slice")?;
        let spec = PhantomSpec { size, seed, noise_sigma, ..Default::default() };
        let (slice, mask) = generate_phantom(&spec)?;
        *slot = boxed(GnnsegSlice { inner: slice });
        if !out_mask.is_null() {
            *out_mask = boxed(GnnsegMask { inner: mask });
        }
        Ok(())
    })
}

/// Build a slice from `modalities` planes of `width`×`height` row-major
/// intensities stored one plane after another in `data`.
///
/// # Safety
/// `data` must point to `modalities * width * height` doubles.
#[no_mangle]
pub unsafe extern "C" fn gnnseg_slice_from_planes(
    width: usize,
    height: usize,
    modalities: usize,
    data: *const f64,
    out: *mut *mut GnnsegSlice,
) -> i32 {
    guard(|| {
        let slot = out_ptr(out, "out")?;
        if data.is_null() {
            return Err(Failure::Internal("data is null".into()));
        }
        let plane = width
            .checked_mul(height)
            .ok_or_else(|| invalid("slice dimensions overflow"))?;
        let total = plane
            .checked_mul(modalities)
            .ok_or_else(|| invalid("slice dimensions overflow"))?;
        let values = std::slice::from_raw_parts(data, total);
        let planes: Vec<Vec<f64>> = if plane == 0 {
            vec![Vec::new(); modalities]
        } else {
            values.chunks(plane).map(<[f64]>::to_vec).collect()
        };
        let names = (0..modalities).map(|k| format!("m{k}")).collect();
        *slot = boxed(GnnsegSlice { inner: Slice::new(width, height, planes, names)? });
        Ok(())
    })
}

/// Read a slice from one grayscale image file per modality.
///
/// # Safety
/// `paths` must point to `count` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn gnnseg_slice_read(paths: *const *const c_char, count: usize, out: *mut *mut GnnsegSlice) -> i32 {
    guard(|| {
        let slot = out_ptr(out, "out")?;
        if paths.is_null() {
            return Err(Failure::Internal("paths is null".into()));
        }
        let files = std::slice::from_raw_parts(paths, count)
            .iter()
            .map(|&p| path(p, "path"))
            .collect::<Result<Vec<_>, _>>()?;
        *slot = boxed(GnnsegSlice { inner: io::read_image(&files)? });
        Ok(())
    })
}

/// Width in pixels, or 0 for a null handle.
///
/// # Safety
/// `slice` must be null or a live slice handle.
#[no_mangle]
pub unsafe extern "C" fn gnnseg_slice_width(slice: *const GnnsegSlice) -> usize {
    slice.as_ref().map_or(0, |s| s.inner.width())
}

/// Height in pixels, or 0 for a null handle.
///
/// # Safety
/// `slice` must be null or a live slice handle.
#[no_mangle]
pub unsafe extern "C" fn gnnseg_slice_height(slice: *const GnnsegSlice) -> usize {
    slice.as_ref().map_or(0, |s| s.inner.height())
}

/// Number of modalities, or 0 for a null handle.
///
/// # Safety
/// `slice` must be null or a live slice handle.
#[no_mangle]
pub unsafe extern "C" fn gnnseg_slice_modality_count(slice: *const GnnsegSlice) -> usize {
    slice.as_ref().map_or(0, |s| s.inner.modality_count())
}

/// # Safety
/// `slice` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gnnseg_slice_free(slice: *mut GnnsegSlice) {
    if !slice.is_null() {
        drop(Box::from_raw(slice));
    }
}

/// Build a mask from `width * height` row-major labels in 0..=3.
///
/// # Safety
/// `labels` must point to `width * height` bytes.
#[no_mangle]
pub unsafe extern "C" fn gnnseg_mask_new(width: usize, height: usize, labels: *const u8, out: *mut *mut GnnsegMask) -> i32 {
    guard(|| {
        let slot = out_ptr(out, "out")?;
        if labels.is_null() {
            return Err(Failure::Internal("labels is null".into()));
        }
        let n = width
            .checked_mul(height)
            .ok_or_else(|| invalid("mask dimensions overflow"))?;
        let data = std::slice::from_raw_parts(labels, n).to_vec();
        *slot = boxed(GnnsegMask { inner: LabelMask::new(width, height, data)? });
        Ok(())
    })
}

/// Read a label mask image.
///
/// # Safety
/// `file` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gnnseg_mask_read(file: *const c_char, out: *mut *mut GnnsegMask) -> i32 {
    guard(|| {
        let slot = out_ptr(out, "out")?;
        let p = path(file, "path")?;
        *slot = boxed(GnnsegMask { inner: io::read_mask(&p)? });
        Ok(())
    })
}

/// Write a label mask as an 8-bit PNG.
///
/// # Safety
/// `mask` must be a live handle and `file` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn gnnseg_mask_write(mask: *const GnnsegMask, file: *const c_char) -> i32 {
    guard(|| {
        let m = obj(mask, "mask")?;
        let p = path(file, "path")?;
        io::write_mask(&m.inner, &p)?;
        Ok(())
    })
}

/// Width in pixels, or 0 for a null handle.
///
/// # Safety
/// `mask` must be null or a live mask handle.
#[no_mangle]
pub unsafe extern "C" fn gnnseg_mask_width(mask: *const GnnsegMask) -> usize {
    mask.as_ref().map_or(0, |m| m.inner.width())
}

/// Height in pixels, or 0 for a null handle.
///
/// # Safety
/// `mask` must be null or a live mask handle.
#[no_mangle]
pub unsafe extern "C" fn gnnseg_mask_height(mask: *const GnnsegMask) -> usize {
    mask.as_ref().map_or(0, |m| m.inner.height())
}

/// Copy the row-major labels into `buffer`, whose length `len` must equal
/// width × height.
///
/// # Safety
/// `buffer` must be valid for `len` byte writes.
#[no_mangle]
pub unsafe extern "C" fn gnnseg_mask_copy_labels(mask: *const GnnsegMask, buffer: *mut u8, len: usize) -> i32 {
    guard(|| {
        let m = obj(mask, "mask")?;
        if buffer.is_null() {
            return Err(Failure::Internal("buffer is null".into()));
        }
        let labels = m.inner.labels();
        if len != labels.len() {
            return Err(invalid(format!("buffer holds {len} labels, mask has {}", labels.len())));
        }
        std::slice::from_raw_parts_mut(buffer, len).copy_from_slice(labels);
        Ok(())
    })
}

/// # Safety
/// `mask` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gnnseg_mask_free(mask: *mut GnnsegMask) {
    if !mask.is_null() {
        drop(Box::from_raw(mask));
    }
}

/// Initialize a model. `config_json` is a JSON model configuration whose
/// missing fields take their defaults; null selects the default model.
///
/// # Safety
/// `config_json` must be null or NUL-terminated; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gnnseg_model_new(config_json: *const c_char, seed: u64, out: *mut *mut GnnsegModel) -> i32 {
    guard(|| {
        let slot = out_ptr(out, "out")?;
        let config: GnnSegConfig = if config_json.is_null() {
            GnnSegConfig::default()
        } else {
            let text = CStr::from_ptr(config_json)
                .to_str()
                .map_err(|_| invalid("config_json is not valid UTF-8"))?;
            serde_json::from_str(text).map_err(gnnseg::Error::from)?
        };
        *slot = boxed(GnnsegModel { inner: GnnSegModel::new(config, seed)? });
        Ok(())
    })
}

/// Load a checkpoint written by the command-line tool or `gnnseg_model_save`.
///
/// # Safety
/// `file` must be NUL-terminated and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gnnseg_model_load(file: *const c_char, out: *mut *mut GnnsegModel) -> i32 {
    guard(|| {
        let slot = out_ptr(out, "out")?;
        let p = path(file, "path")?;
        let (model, _) = GnnSegModel::load(&p)?;
        *slot = boxed(GnnsegModel { inner: model });
        Ok(())
    })
}

/// Write the model to a checkpoint file.
///
/// # Safety
/// `model` must be a live handle and `file` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn gnnseg_model_save(model: *const GnnsegModel, file: *const c_char) -> i32 {
    guard(|| {
        let m = obj(model, "model")?;
        let p = path(file, "path")?;
        m.inner.save(&p, 0)?;
        Ok(())
    })
}

/// Trainable parameter counts.
///
/// # Safety
/// `model` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gnnseg_model_parameter_count(model: *const GnnsegModel, out: *mut GnnsegParameterCount) -> i32 {
    guard(|| {
        let m = obj(model, "model")?;
        let o = obj_mut(out, "out")?;
        let c = m.inner.count_parameters();
        *o = GnnsegParameterCount { structural: c.structural, classifier: c.classifier, total: c.total };
        Ok(())
    })
}

/// Train in place on `count` labeled slices for `epochs` epochs.
/// `out_final_loss` may be null; otherwise it receives the mean loss of
/// the last epoch.
///
/// # Safety
/// `slices` and `masks` must each point to `count` live handles.
#[no_mangle]
pub unsafe extern "C" fn gnnseg_model_train(
    model: *mut GnnsegModel,
    slices: *const *const GnnsegSlice,
    masks: *const *const GnnsegMask,
    count: usize,
    epochs: usize,
    seed: u64,
    out_final_loss: *mut f64,
) -> i32 {
    guard(|| {
        let m = obj_mut(model, "model")?;
        if slices.is_null() || masks.is_null() {
            return Err(Failure::Internal("slices or masks is null".into()));
        }
        let s = std::slice::from_raw_parts(slices, count);
        let k = std::slice::from_raw_parts(masks, count);
        let mut prepared = Vec::with_capacity(count);
        for (&sp, &mp) in s.iter().zip(k) {
            let slice = obj(sp, "slice")?;
            let mask = obj(mp, "mask")?;
            prepared.push(PreparedSlice::new(&slice.inner, Some(&mask.inner), &m.inner.config)?);
        }
        let config = TrainConfig { epochs, seed, ..Default::default() };
        let report = train(&mut m.inner, &prepared, &config, |_, _| Control::Continue)?;
        if !out_final_loss.is_null() {
            *out_final_loss = report.epoch_losses.last().copied().unwrap_or(f64::NAN);
        }
        Ok(())
    })
}

/// Segment a slice.
///
/// # Safety
/// `model` and `slice` must be live handles; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gnnseg_infer(
    model: *const GnnsegModel,
    slice: *const GnnsegSlice,
    out: *mut *mut GnnsegMask,
) -> i32 {
    guard(|| {
        let slot = out_ptr(out, "out")?;
        let m = obj(model, "model")?;
        let s = obj(slice, "slice")?;
        let prep = PreparedSlice::new(&s.inner, None, &m.inner.config)?;
        *slot = boxed(GnnsegMask { inner: m.inner.infer(&prep)?.mask });
        Ok(())
    })
}

/// Score `pred` against `truth` for CSF, GM and WM, in that order.
/// `out` must hold at least three entries.
///
/// # Safety
/// `pred` and `truth` must be live handles; `out` valid for `out_len` writes.
#[no_mangle]
pub unsafe extern "C" fn gnnseg_evaluate(
    pred: *const GnnsegMask,
    truth: *const GnnsegMask,
    out: *mut GnnsegClassMetrics,
    out_len: usize,
) -> i32 {
    guard(|| {
        let p = obj(pred, "pred")?;
        let t = obj(truth, "truth")?;
        if out.is_null() {
            return Err(Failure::Internal("out is null".into()));
        }
        if out_len < Tissue::TARGETS.len() {
            return Err(invalid(format!("out holds {out_len} entries, 3 are needed")));
        }
        let report = metrics::evaluate(&p.inner, &t.inner)?;
        let dst = std::slice::from_raw_parts_mut(out, out_len);
        for (d, c) in dst.iter_mut().zip(&report.classes) {
            *d = GnnsegClassMetrics {
                class_id: c.class.id(),
                dice: c.dice.unwrap_or(f64::NAN),
                tp: c.tp.unwrap_or(f64::NAN),
                apd: c.apd.unwrap_or(f64::NAN),
            };
        }
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gnnseg_model_free(model: *mut GnnsegModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
