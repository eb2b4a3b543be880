//! C ABI for the archmap library.
//!
//! Models and mapping results are opaque handles owned by the caller and
//! released with the matching `_free` function. Every fallible function
//! returns an [`ArchmapStatus`]; on failure a description is available from
//! [`archmap_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use archmap::attract::count::{CountParams, WeightProfile};
use archmap::attract::{AfConfig, AfKind};
use archmap::experiment::{compute_metrics, run_batch, BatchOptions, InitialSpec, RecallMode, RunConfig};
use archmap::hugme::run_hugme;
use archmap::model::{load_model, MappingState, Origin, SystemModel};
use archmap::stats::wilcoxon_ranksum;
use archmap::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArchmapStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    InvalidModel = 4,
    Precondition = 5,
    Io = 6,
    Numeric = 7,
    OutOfRange = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArchmapAf {
    Count = 0,
    Ir = 1,
    Lsi = 2,
    Nb = 3,
}

impl From<ArchmapAf> for AfKind {
    fn from(af: ArchmapAf) -> Self {
        match af {
            ArchmapAf::Count => AfKind::Count,
            ArchmapAf::Ir => AfKind::Ir,
            ArchmapAf::Lsi => AfKind::Lsi,
            ArchmapAf::Nb => AfKind::Nb,
        }
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ArchmapOrigin {
    #[default]
    Unmapped = 0,
    Initial = 1,
    Auto = 2,
}

/// Parameters of one mapping run.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct ArchmapMapOptions {
    pub af: ArchmapAf,
    /// Add dependency-derived terms; ignored by the counting function.
    pub cda: bool,
    pub phi: f64,
    pub omega: f64,
    /// Classifier acceptance threshold.
    pub threshold: f64,
    /// Eleven dependency-type weights, or NULL for unit weights.
    pub weights: *const f64,
    /// Share of entities in the random ground-truth initial set.
    pub initial_fraction: f64,
    pub seed: u64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ArchmapAssignment {
    /// Module index, or -1 when unmapped.
    pub module: i64,
    pub origin: ArchmapOrigin,
    /// Winning attraction of an automatic mapping; NaN otherwise.
    pub confidence: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ArchmapMetrics {
    pub orphans: u64,
    pub auto_mapped: u64,
    pub correct: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ArchmapRankSum {
    pub n1: u64,
    pub n2: u64,
    pub u: f64,
    pub z: f64,
    pub p: f64,
    pub r: f64,
}

/// A loaded, validated system model.
pub struct ArchmapModel {
    model: SystemModel,
    entity_ids: Vec<CString>,
    module_names: Vec<CString>,
}

/// The outcome of one mapping run.
pub struct ArchmapMapping {
    initial: MappingState,
    state: MappingState,
    iterations: usize,
    metrics: ArchmapMetrics,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> ArchmapStatus {
    match err.root() {
        Error::Parse { .. } | Error::Json(_) => ArchmapStatus::Parse,
        Error::Validation(_) => ArchmapStatus::InvalidModel,
        Error::Precondition(_) | Error::EmptyVocabulary => ArchmapStatus::Precondition,
        Error::Io { .. } | Error::Csv(_) => ArchmapStatus::Io,
        Error::SvdNonConvergence(_) => ArchmapStatus::Numeric,
        Error::InvalidArgument(_) | Error::Context { .. } => ArchmapStatus::InvalidArgument,
    }
}

/// Runs `f`, translating errors and panics into a status and the
/// thread's last error.
fn guard(f: impl FnOnce() -> Result<(), (ArchmapStatus, String)>) -> ArchmapStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ArchmapStatus::Ok,
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {message}"));
            ArchmapStatus::Panic
        }
    }
}

fn fail(err: Error) -> (ArchmapStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(what: &str) -> (ArchmapStatus, String) {
    (ArchmapStatus::NullPointer, format!("{what} is NULL"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (ArchmapStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (ArchmapStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn wrap_model(model: SystemModel) -> Box<ArchmapModel> {
    let cstr = |s: &str| CString::new(s.replace('\0', " ")).expect("interior NULs removed");
    Box::new(ArchmapModel {
        entity_ids: model.entities().iter().map(|e| cstr(&e.id)).collect(),
        module_names: model.architecture().modules().iter().map(|m| cstr(m)).collect(),
        model,
    })
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn archmap_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Loads a model file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn archmap_model_load(path: *const c_char, out: *mut *mut ArchmapModel) -> ArchmapStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let path = str_arg(path, "path")?;
        let model = load_model(path).map_err(fail)?;
        *out = Box::into_raw(wrap_model(model));
        Ok(())
    })
}

/// Parses a model from JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn archmap_model_from_json(json: *const c_char, out: *mut *mut ArchmapModel) -> ArchmapStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let json = str_arg(json, "json")?;
        let model = SystemModel::from_json_str(json, &PathBuf::from("<memory>")).map_err(fail)?;
        *out = Box::into_raw(wrap_model(model));
        Ok(())
    })
}

/// # Safety
/// `model` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn archmap_model_free(model: *mut ArchmapModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn archmap_model_entity_count(model: *const ArchmapModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.entity_count())
}

/// # Safety
/// `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn archmap_model_module_count(model: *const ArchmapModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.module_count())
}

/// Id of an entity, or NULL when out of range. Owned by the model.
///
/// # Safety
/// `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn archmap_model_entity_id(model: *const ArchmapModel, entity: usize) -> *const c_char {
    model
        .as_ref()
        .and_then(|m| m.entity_ids.get(entity))
        .map_or(ptr::null(), |c| c.as_ptr())
}

/// Name of a module, or NULL when out of range. Owned by the model.
///
/// # Safety
/// `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn archmap_model_module_name(model: *const ArchmapModel, module: usize) -> *const c_char {
    model
        .as_ref()
        .and_then(|m| m.module_names.get(module))
        .map_or(ptr::null(), |c| c.as_ptr())
}

/// Options with the command-line defaults for `af`.
#[no_mangle]
pub extern "C" fn archmap_map_options_default(af: ArchmapAf) -> ArchmapMapOptions {
    ArchmapMapOptions {
        af,
        cda: false,
        phi: 0.5,
        omega: 0.5,
        threshold: archmap::attract::DEFAULT_NB_THRESHOLD,
        weights: ptr::null(),
        initial_fraction: 0.5,
        seed: 0,
    }
}

unsafe fn af_config(opts: &ArchmapMapOptions) -> Result<AfConfig, (ArchmapStatus, String)> {
    let cfg = match opts.af {
        ArchmapAf::Count => {
            let weights = if opts.weights.is_null() {
                WeightProfile::unit()
            } else {
                let mut w = [0.0; 11];
                w.copy_from_slice(std::slice::from_raw_parts(opts.weights, 11));
                WeightProfile::new(w).map_err(fail)?
            };
            AfConfig::Count(CountParams::new(opts.phi, opts.omega, weights).map_err(fail)?)
        }
        ArchmapAf::Ir => AfConfig::Ir { cda: opts.cda },
        ArchmapAf::Lsi => AfConfig::Lsi { cda: opts.cda },
        ArchmapAf::Nb => AfConfig::Nb {
            cda: opts.cda,
            threshold: opts.threshold,
        },
    };
    cfg.validate().map_err(fail)?;
    Ok(cfg)
}

/// Maps the orphans left by a random ground-truth initial set.
///
/// # Safety
/// `model` must be a live handle, `options` readable (with `weights` NULL
/// or pointing at eleven doubles) and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn archmap_map(
    model: *const ArchmapModel,
    options: *const ArchmapMapOptions,
    out: *mut *mut ArchmapMapping,
) -> ArchmapStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let model = &model.as_ref().ok_or_else(|| null("model"))?.model;
        let opts = options.as_ref().ok_or_else(|| null("options"))?;
        let cfg = af_config(opts)?;
        if !(0.0..=1.0).contains(&opts.initial_fraction) {
            return Err(fail(Error::InvalidArgument(format!(
                "initial fraction {} lies outside [0, 1]",
                opts.initial_fraction
            ))));
        }
        let initial = InitialSpec::Ground(opts.initial_fraction).resolve(model, opts.seed).map_err(fail)?;
        let outcome = run_hugme(model, initial.clone(), &cfg).map_err(fail)?;
        let m = compute_metrics(&outcome.state, &initial, model, RecallMode::Correct);
        let metrics = ArchmapMetrics {
            orphans: m.orphans as u64,
            auto_mapped: m.auto_mapped as u64,
            correct: m.correct as u64,
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
        };
        let iterations = outcome.iterations();
        *out = Box::into_raw(Box::new(ArchmapMapping {
            initial,
            state: outcome.state,
            iterations,
            metrics,
        }));
        Ok(())
    })
}

/// # Safety
/// `mapping` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn archmap_mapping_free(mapping: *mut ArchmapMapping) {
    if !mapping.is_null() {
        drop(Box::from_raw(mapping));
    }
}

/// # Safety
/// `mapping` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn archmap_mapping_get(mapping: *const ArchmapMapping, entity: usize, out: *mut ArchmapAssignment) -> ArchmapStatus {
    guard(|| {
        let mapping = mapping.as_ref().ok_or_else(|| null("mapping"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        if entity >= mapping.state.entity_count() {
            return Err((ArchmapStatus::OutOfRange, format!("entity index {entity} out of range")));
        }
        *out = match mapping.state.assignment(entity) {
            None => ArchmapAssignment {
                module: -1,
                origin: ArchmapOrigin::Unmapped,
                confidence: f64::NAN,
            },
            Some(a) => ArchmapAssignment {
                module: a.module as i64,
                origin: match a.origin {
                    Origin::Initial => ArchmapOrigin::Initial,
                    Origin::Auto => ArchmapOrigin::Auto,
                },
                confidence: match (a.origin, mapping.state.last_attraction(entity)) {
                    (Origin::Auto, Some(v)) => v[a.module],
                    _ => f64::NAN,
                },
            },
        };
        Ok(())
    })
}

/// Precision, recall and F1 of the automatic mappings.
///
/// # Safety
/// `mapping` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn archmap_mapping_metrics(mapping: *const ArchmapMapping, out: *mut ArchmapMetrics) -> ArchmapStatus {
    guard(|| {
        let mapping = mapping.as_ref().ok_or_else(|| null("mapping"))?;
        *out.as_mut().ok_or_else(|| null("out"))? = mapping.metrics;
        Ok(())
    })
}

/// Engine iterations, the final empty one included.
///
/// # Safety
/// `mapping` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn archmap_mapping_iterations(mapping: *const ArchmapMapping) -> usize {
    mapping.as_ref().map_or(0, |m| m.iterations)
}

/// Size of the initial set.
///
/// # Safety
/// `mapping` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn archmap_mapping_initial_size(mapping: *const ArchmapMapping) -> usize {
    mapping.as_ref().map_or(0, |m| m.initial.mapped_count())
}

/// Two-sided rank-sum test of `a` against `b`.
///
/// # Safety
/// `a` and `b` must point at `na` and `nb` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn archmap_ranksum(a: *const f64, na: usize, b: *const f64, nb: usize, out: *mut ArchmapRankSum) -> ArchmapStatus {
    guard(|| {
        if a.is_null() || b.is_null() {
            return Err(null("sample"));
        }
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let t = wilcoxon_ranksum(std::slice::from_raw_parts(a, na), std::slice::from_raw_parts(b, nb)).map_err(fail)?;
        *out = ArchmapRankSum {
            n1: t.n1 as u64,
            n2: t.n2 as u64,
            u: t.u,
            z: t.z,
            p: t.p,
            r: t.r,
        };
        Ok(())
    })
}

/// Runs `runs` repetitions of the listed functions and writes the results
/// CSV to `out_path`. `threads` of 0 uses the available parallelism.
///
/// # Safety
/// `model` must be a live handle, `afs` must point at `n_afs` values and
/// `out_path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn archmap_experiment(
    model: *const ArchmapModel,
    afs: *const ArchmapAf,
    n_afs: usize,
    seed: u64,
    runs: u64,
    threads: usize,
    out_path: *const c_char,
) -> ArchmapStatus {
    guard(|| {
        let model = &model.as_ref().ok_or_else(|| null("model"))?.model;
        if afs.is_null() {
            return Err(null("afs"));
        }
        let afs: Vec<AfKind> = std::slice::from_raw_parts(afs, n_afs).iter().map(|&a| a.into()).collect();
        let out = PathBuf::from(str_arg(out_path, "out_path")?);
        let cfg = RunConfig::new(afs, seed, runs);
        let options = BatchOptions {
            threads: (threads > 0).then_some(threads),
            stop_after: None,
        };
        run_batch(model, &cfg, &out, options).map_err(fail)?;
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_map_to_codes() {
        assert_eq!(status_of(&Error::Validation(vec![])), ArchmapStatus::InvalidModel);
        assert_eq!(status_of(&Error::SvdNonConvergence(3)), ArchmapStatus::Numeric);
        let wrapped = Error::Precondition("x".into()).context("run");
        assert_eq!(status_of(&wrapped), ArchmapStatus::Precondition);
    }

    #[test]
    fn panics_become_status() {
        let status = guard(|| panic!("boom"));
        assert_eq!(status, ArchmapStatus::Panic);
        let msg = unsafe { CStr::from_ptr(archmap_last_error()) };
        assert!(msg.to_str().unwrap().contains("boom"));
        assert_eq!(guard(|| Ok(())), ArchmapStatus::Ok);
        assert!(archmap_last_error().is_null());
    }
}
