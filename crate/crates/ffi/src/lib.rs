//! C ABI over the evodyn library.
//!
//! Conventions:
//! - Every fallible function returns an [`EvodynStatus`]; outputs go through
//!   out-pointers that are written only on `Ok`.
//! - On any non-`Ok` status a message is stored per thread; read it with
//!   [`evodyn_last_error`]. The pointer stays valid until the next evodyn
//!   call on the same thread.
//! - Strings returned through out-pointers are owned by the caller and must
//!   be released with [`evodyn_string_free`]; handles with their `_free`
//!   function. [`evodyn_version`] and [`evodyn_last_error`] return borrowed
//!   pointers that must not be freed.
//! - Panics never cross the boundary; they surface as `EVODYN_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;
use std::sync::Arc;

use evodyn::data::Cohort;
use evodyn::eval::rank_sum_test;
use evodyn::gp::{evolve, GpConfig};
use evodyn::model::{
    mood_fixture_genotype, mood_fixture_schema, parse, ModelFile, ModelGenotype, StateSchema,
};
use evodyn::moo::{dominated_hypervolume, ObjectivePoint};
use evodyn::sim::ModelInstance;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvodynStatus {
    /// Success; out-pointers were written.
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// A size or value argument was rejected at the boundary.
    InvalidArgument = 3,
    /// The library reported an error; see `evodyn_last_error`.
    Failure = 4,
    /// An internal panic was caught at the boundary.
    Panic = 5,
}

/// A parsed model structure plus its state names.
pub struct EvodynModel {
    genotype: Arc<ModelGenotype>,
    names: Vec<String>,
}

/// A loaded patient cohort.
pub struct EvodynCohort(Cohort);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    let c = CString::new(msg).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn failure(e: impl std::fmt::Display) -> EvodynStatus {
    set_error(e.to_string());
    EvodynStatus::Failure
}

/// Runs `f` with a cleared error slot and a panic guard.
fn guard<F: FnOnce() -> EvodynStatus>(f: F) -> EvodynStatus {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            EvodynStatus::Panic
        }
    }
}

/// Null-checks and UTF-8-decodes a C string argument.
///
/// # Safety
/// `p` must be null or point to a NUL-terminated string.
unsafe fn text_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, EvodynStatus> {
    if p.is_null() {
        set_error(format!("{what} is null"));
        return Err(EvodynStatus::NullPointer);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        EvodynStatus::InvalidUtf8
    })
}

fn out_string(out: *mut *mut c_char, value: String) -> EvodynStatus {
    match CString::new(value.replace('\0', " ")) {
        Ok(c) => {
            unsafe { *out = c.into_raw() };
            EvodynStatus::Ok
        }
        Err(_) => {
            set_error("result contained an interior NUL");
            EvodynStatus::Failure
        }
    }
}

fn null_out<T>(out: *mut T, what: &str) -> Option<EvodynStatus> {
    if out.is_null() {
        set_error(format!("{what} is null"));
        Some(EvodynStatus::NullPointer)
    } else {
        None
    }
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn evodyn_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Message for the most recent failure on this thread, or null after a
/// success. Borrowed; valid until the next evodyn call on this thread.
#[no_mangle]
pub extern "C" fn evodyn_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned through an out-pointer. Null is a no-op.
///
/// # Safety
/// `s` must have been returned by this library and not freed before.
#[no_mangle]
pub unsafe extern "C" fn evodyn_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

// ---------------------------------------------------------------------------
// Models

fn model_out(out: *mut *mut EvodynModel, genotype: ModelGenotype, names: Vec<String>) -> EvodynStatus {
    let handle = Box::new(EvodynModel { genotype: Arc::new(genotype), names });
    unsafe { *out = Box::into_raw(handle) };
    EvodynStatus::Ok
}

/// Builds a model from its JSON document (schema, lambda_max, trees).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn evodyn_model_from_json(
    json: *const c_char,
    out: *mut *mut EvodynModel,
) -> EvodynStatus {
    guard(|| {
        if let Some(status) = null_out(out, "out") {
            return status;
        }
        let json = match text_arg(json, "json") {
            Ok(s) => s,
            Err(status) => return status,
        };
        let file = match ModelFile::from_json(json) {
            Ok(f) => f,
            Err(e) => return failure(e),
        };
        match file.to_genotype() {
            Ok(genotype) => model_out(out, genotype, file.schema),
            Err(e) => failure(e),
        }
    })
}

/// Parses rendered equation text (`name(t+1) = expr` lines) into a model.
/// `names` lists the state names in order; `lambda_max` sizes the shared
/// parameter pool.
///
/// # Safety
/// `text` must be NUL-terminated; `names` must point to `n_names` valid
/// NUL-terminated strings; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn evodyn_model_parse_text(
    text: *const c_char,
    names: *const *const c_char,
    n_names: usize,
    lambda_max: usize,
    out: *mut *mut EvodynModel,
) -> EvodynStatus {
    guard(|| {
        if let Some(status) = null_out(out, "out") {
            return status;
        }
        let text = match text_arg(text, "text") {
            Ok(s) => s,
            Err(status) => return status,
        };
        if names.is_null() || n_names == 0 {
            set_error("names must list at least one state");
            return EvodynStatus::InvalidArgument;
        }
        let mut owned = Vec::with_capacity(n_names);
        for (i, &name) in slice::from_raw_parts(names, n_names).iter().enumerate() {
            match text_arg(name, &format!("names[{i}]")) {
                Ok(s) => owned.push(s.to_string()),
                Err(status) => return status,
            }
        }
        // Targets and scales do not affect parsing; a placeholder schema
        // carries the names.
        let scales = vec![(0.0, 1.0); owned.len()];
        let schema = match StateSchema::new(owned.clone(), vec![0], scales) {
            Ok(s) => s,
            Err(e) => return failure(e),
        };
        match parse(text, &schema, lambda_max) {
            Ok(genotype) => model_out(out, genotype, owned),
            Err(e) => return failure(e),
        }
    })
}

/// The built-in seven-state self-report fixture model.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn evodyn_model_mood_fixture(out: *mut *mut EvodynModel) -> EvodynStatus {
    guard(|| {
        if let Some(status) = null_out(out, "out") {
            return status;
        }
        let schema = mood_fixture_schema();
        model_out(out, mood_fixture_genotype(), schema.names().to_vec())
    })
}

/// Serializes a model to its JSON document.
///
/// # Safety
/// `model` must be a live handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn evodyn_model_to_json(
    model: *const EvodynModel,
    out: *mut *mut c_char,
) -> EvodynStatus {
    guard(|| {
        if let Some(status) = null_out(out, "out") {
            return status;
        }
        let Some(model) = model.as_ref() else {
            set_error("model is null");
            return EvodynStatus::NullPointer;
        };
        let file = ModelFile::from_genotype(&model.genotype, &model.names);
        match file.to_json_pretty() {
            Ok(json) => out_string(out, json),
            Err(e) => failure(e),
        }
    })
}

/// Renders a model as one `name(t+1) = expr` line per state.
///
/// # Safety
/// `model` must be a live handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn evodyn_model_render(
    model: *const EvodynModel,
    out: *mut *mut c_char,
) -> EvodynStatus {
    guard(|| {
        if let Some(status) = null_out(out, "out") {
            return status;
        }
        let Some(model) = model.as_ref() else {
            set_error("model is null");
            return EvodynStatus::NullPointer;
        };
        out_string(out, model.genotype.render_with_names(&model.names))
    })
}

/// Number of state variables; 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn evodyn_model_state_count(model: *const EvodynModel) -> usize {
    model.as_ref().map_or(0, |m| m.genotype.state_count())
}

/// Number of distinct parameters referenced; 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn evodyn_model_param_count(model: *const EvodynModel) -> usize {
    model.as_ref().map_or(0, |m| m.genotype.distinct_params())
}

/// Advances the state one step. `params` supplies the model's distinct
/// parameters in ascending pool order; `state` and `next` hold one value per
/// state variable. With `clamp` set, outputs are clipped to [0, 1].
///
/// # Safety
/// `model` must be a live handle; the array arguments must match their
/// declared lengths; `next` must have room for `n_state` values.
#[no_mangle]
pub unsafe extern "C" fn evodyn_model_step(
    model: *const EvodynModel,
    params: *const f64,
    n_params: usize,
    state: *const f64,
    n_state: usize,
    clamp: bool,
    next: *mut f64,
) -> EvodynStatus {
    guard(|| {
        let Some(model) = model.as_ref() else {
            set_error("model is null");
            return EvodynStatus::NullPointer;
        };
        if next.is_null() || (params.is_null() && n_params > 0) || state.is_null() {
            set_error("array argument is null");
            return EvodynStatus::NullPointer;
        }
        if n_state != model.genotype.state_count() {
            set_error(format!(
                "state has {n_state} values but the model has {} states",
                model.genotype.state_count()
            ));
            return EvodynStatus::InvalidArgument;
        }
        let params = if n_params == 0 { &[][..] } else { slice::from_raw_parts(params, n_params) };
        let bounds = params.iter().map(|&p| (p, p)).collect();
        let instance =
            match ModelInstance::new(Arc::clone(&model.genotype), params.to_vec(), bounds) {
                Ok(i) => i,
                Err(e) => return failure(e),
            };
        let state = slice::from_raw_parts(state, n_state);
        let next = slice::from_raw_parts_mut(next, n_state);
        instance.step_into(state, clamp, next);
        EvodynStatus::Ok
    })
}

/// Releases a model handle. Null is a no-op.
///
/// # Safety
/// `model` must have been returned by this library and not freed before.
#[no_mangle]
pub unsafe extern "C" fn evodyn_model_free(model: *mut EvodynModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

// ---------------------------------------------------------------------------
// Cohorts and evolution

/// Loads a cohort JSON file from disk.
///
/// # Safety
/// `path` must be NUL-terminated; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn evodyn_cohort_load(
    path: *const c_char,
    out: *mut *mut EvodynCohort,
) -> EvodynStatus {
    guard(|| {
        if let Some(status) = null_out(out, "out") {
            return status;
        }
        let path = match text_arg(path, "path") {
            Ok(s) => s,
            Err(status) => return status,
        };
        match Cohort::load(Path::new(path)) {
            Ok(cohort) => {
                *out = Box::into_raw(Box::new(EvodynCohort(cohort)));
                EvodynStatus::Ok
            }
            Err(e) => failure(e),
        }
    })
}

/// Builds a cohort from its JSON document.
///
/// # Safety
/// `json` must be NUL-terminated; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn evodyn_cohort_from_json(
    json: *const c_char,
    out: *mut *mut EvodynCohort,
) -> EvodynStatus {
    guard(|| {
        if let Some(status) = null_out(out, "out") {
            return status;
        }
        let json = match text_arg(json, "json") {
            Ok(s) => s,
            Err(status) => return status,
        };
        match Cohort::from_json(json) {
            Ok(cohort) => {
                *out = Box::into_raw(Box::new(EvodynCohort(cohort)));
                EvodynStatus::Ok
            }
            Err(e) => failure(e),
        }
    })
}

/// Number of patients; 0 for a null handle.
///
/// # Safety
/// `cohort` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn evodyn_cohort_patient_count(cohort: *const EvodynCohort) -> usize {
    cohort.as_ref().map_or(0, |c| c.0.patients.len())
}

/// Releases a cohort handle. Null is a no-op.
///
/// # Safety
/// `cohort` must have been returned by this library and not freed before.
#[no_mangle]
pub unsafe extern "C" fn evodyn_cohort_free(cohort: *mut EvodynCohort) {
    if !cohort.is_null() {
        drop(Box::from_raw(cohort));
    }
}

/// Deep-merges `over` into `base`; objects merge per key, anything else is
/// replaced.
fn merge_json(base: &mut serde_json::Value, over: serde_json::Value) {
    match (base, over) {
        (serde_json::Value::Object(base), serde_json::Value::Object(over)) => {
            for (key, value) in over {
                match base.get_mut(&key) {
                    Some(slot) => merge_json(slot, value),
                    None => {
                        base.insert(key, value);
                    }
                }
            }
        }
        (slot, value) => *slot = value,
    }
}

/// Evolves a model on the cohort and returns the best model's JSON document.
/// `config_json` overrides individual evolution settings over the defaults
/// (e.g. `{"population": 20, "master_seed": 7}`); null keeps every default.
/// Deterministic for a fixed cohort and configuration.
///
/// # Safety
/// `cohort` must be a live handle; `config_json` must be null or
/// NUL-terminated; `out_model_json` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn evodyn_evolve_json(
    cohort: *const EvodynCohort,
    config_json: *const c_char,
    out_model_json: *mut *mut c_char,
) -> EvodynStatus {
    guard(|| {
        if let Some(status) = null_out(out_model_json, "out_model_json") {
            return status;
        }
        let Some(cohort) = cohort.as_ref() else {
            set_error("cohort is null");
            return EvodynStatus::NullPointer;
        };
        let mut config = match serde_json::to_value(GpConfig::default()) {
            Ok(v) => v,
            Err(e) => return failure(e),
        };
        if !config_json.is_null() {
            let text = match text_arg(config_json, "config_json") {
                Ok(s) => s,
                Err(status) => return status,
            };
            match serde_json::from_str(text) {
                Ok(over) => merge_json(&mut config, over),
                Err(e) => return failure(e),
            }
        }
        let cfg: GpConfig = match serde_json::from_value(config) {
            Ok(c) => c,
            Err(e) => return failure(e),
        };
        let outcome = match evolve(&cfg, &cohort.0.schema, &cohort.0.patients) {
            Ok(o) => o,
            Err(e) => return failure(e),
        };
        let file = ModelFile::from_genotype(&outcome.best, cohort.0.schema.names());
        match file.to_json_pretty() {
            Ok(json) => out_string(out_model_json, json),
            Err(e) => failure(e),
        }
    })
}

// ---------------------------------------------------------------------------
// Numerics

/// Exact dominated hypervolume of `n_points` rows of `n_objectives` values
/// against a reference point of the same width.
///
/// # Safety
/// `points` must hold `n_points * n_objectives` values; `reference` must
/// hold `n_objectives`; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn evodyn_hypervolume(
    points: *const f64,
    n_points: usize,
    n_objectives: usize,
    reference: *const f64,
    out: *mut f64,
) -> EvodynStatus {
    guard(|| {
        if out.is_null() || reference.is_null() || (points.is_null() && n_points > 0) {
            set_error("array argument is null");
            return EvodynStatus::NullPointer;
        }
        if n_objectives == 0 {
            set_error("n_objectives must be positive");
            return EvodynStatus::InvalidArgument;
        }
        let flat = if n_points == 0 {
            &[][..]
        } else {
            slice::from_raw_parts(points, n_points * n_objectives)
        };
        let front: Vec<ObjectivePoint> =
            flat.chunks_exact(n_objectives).map(|row| ObjectivePoint(row.to_vec())).collect();
        let reference = ObjectivePoint(slice::from_raw_parts(reference, n_objectives).to_vec());
        match dominated_hypervolume(&front, &reference) {
            Ok(hv) => {
                *out = hv;
                EvodynStatus::Ok
            }
            Err(e) => failure(e),
        }
    })
}

/// Two-sided Wilcoxon rank-sum test. Writes the first sample's rank-sum
/// statistic and the p-value (exact for small tie-free pools, otherwise a
/// tie-corrected normal approximation).
///
/// # Safety
/// `xs` and `ys` must hold their declared lengths; the out-pointers must be
/// valid.
#[no_mangle]
pub unsafe extern "C" fn evodyn_rank_sum(
    xs: *const f64,
    n_xs: usize,
    ys: *const f64,
    n_ys: usize,
    out_statistic: *mut f64,
    out_p: *mut f64,
) -> EvodynStatus {
    guard(|| {
        if xs.is_null() || ys.is_null() || out_statistic.is_null() || out_p.is_null() {
            set_error("array argument is null");
            return EvodynStatus::NullPointer;
        }
        let xs = slice::from_raw_parts(xs, n_xs);
        let ys = slice::from_raw_parts(ys, n_ys);
        match rank_sum_test(xs, ys) {
            Ok(result) => {
                *out_statistic = result.statistic;
                *out_p = result.p_value;
                EvodynStatus::Ok
            }
            Err(e) => failure(e),
        }
    })
}
