//! C ABI over the `ofisp` library.
//!
//! Objects cross the boundary as opaque handles that the caller frees with
//! the matching `*_free` function. Every fallible call returns an
//! [`OfispStatus`]; on failure a message is available from
//! [`ofisp_last_error`] on the same thread. Panics never cross the boundary.
//! The declarations live in `include/ofisp.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ofisp::{
    brute_force, default_penalties, encode, select_solution, simulated_anneal, AnnealSchedule, Instance, PenaltyConfig,
    Policy, QuboModel, SampleSet,
};

/// Status code returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OfispStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    OutOfRange = 4,
    Infeasible = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OfispPolicy {
    MaxWeight = 0,
    MinSoft = 1,
}

impl From<OfispPolicy> for Policy {
    fn from(p: OfispPolicy) -> Self {
        match p {
            OfispPolicy::MaxWeight => Policy::MaxWeight,
            OfispPolicy::MinSoft => Policy::MinSoft,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OfispPenalties {
    pub p1: f64,
    pub p2: f64,
    pub p_pair: f64,
    pub p_elig: f64,
}

impl From<PenaltyConfig> for OfispPenalties {
    fn from(p: PenaltyConfig) -> Self {
        Self { p1: p.p1, p2: p.p2, p_pair: p.p_pair, p_elig: p.p_elig }
    }
}

impl From<OfispPenalties> for PenaltyConfig {
    fn from(p: OfispPenalties) -> Self {
        Self { p1: p.p1, p2: p.p2, p_pair: p.p_pair, p_elig: p.p_elig }
    }
}

/// Annealing schedule. A temperature `<= 0` is derived from the model.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OfispSchedule {
    pub reads: usize,
    pub sweeps: usize,
    pub t_init: f64,
    pub t_final: f64,
    pub seed: u64,
}

impl From<OfispSchedule> for AnnealSchedule {
    fn from(s: OfispSchedule) -> Self {
        let temp = |t: f64| (t > 0.0).then_some(t);
        Self { reads: s.reads, sweeps: s.sweeps, t_init: temp(s.t_init), t_final: temp(s.t_final), seed: s.seed }
    }
}

/// Selected sample reported by [`ofisp_select`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OfispSelection {
    pub sample_index: usize,
    pub weight: f64,
    pub hard_violations: usize,
    pub soft_violations: usize,
}

pub struct OfispInstance(Instance);
pub struct OfispModel(QuboModel);
pub struct OfispSampleSet(SampleSet);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<Vec<u8>>) {
    let mut bytes = msg.into();
    bytes.retain(|&b| b != 0);
    let msg = CString::new(bytes).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

struct Failure(OfispStatus, String);

impl From<ofisp::Error> for Failure {
    fn from(e: ofisp::Error) -> Self {
        Failure(OfispStatus::InvalidInput, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(OfispStatus::NullPointer, format!("{what} is null"))
}

/// Runs `body`, converting errors and panics into a status plus message.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> OfispStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error("");
            OfispStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            OfispStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|e| Failure(OfispStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

fn leak_string(s: String) -> *mut c_char {
    CString::new(s).map(CString::into_raw).unwrap_or(ptr::null_mut())
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn ofisp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ofisp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn ofisp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses and validates an instance document.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ofisp_instance_from_json(json: *const c_char, out: *mut *mut OfispInstance) -> OfispStatus {
    guard(|| {
        let inst = Instance::from_json(str_arg(json, "json")?)?;
        inst.ensure_valid()?;
        store(out, OfispInstance(inst))
    })
}

/// # Safety
/// `inst` must be null or a handle from [`ofisp_instance_from_json`].
#[no_mangle]
pub unsafe extern "C" fn ofisp_instance_free(inst: *mut OfispInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Number of jobs, or 0 for a null handle.
///
/// # Safety
/// `inst` must be null or a live instance handle.
#[no_mangle]
pub unsafe extern "C" fn ofisp_instance_num_jobs(inst: *const OfispInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.0.len())
}

/// # Safety
/// `inst` must be a live instance handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ofisp_default_penalties(inst: *const OfispInstance, out: *mut OfispPenalties) -> OfispStatus {
    guard(|| {
        let inst = borrow(inst, "instance")?;
        let out = out.as_mut().ok_or_else(|| null("output pointer"))?;
        *out = default_penalties(&inst.0)?.into();
        Ok(())
    })
}

/// Encodes `inst`; `penalties` may be null for the defaults.
///
/// # Safety
/// `inst` must be a live instance handle, `penalties` null or readable and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ofisp_encode(
    inst: *const OfispInstance,
    penalties: *const OfispPenalties,
    out: *mut *mut OfispModel,
) -> OfispStatus {
    guard(|| {
        let inst = &borrow(inst, "instance")?.0;
        let pen = match penalties.as_ref() {
            Some(p) => PenaltyConfig::from(*p),
            None => default_penalties(inst)?,
        };
        store(out, OfispModel(encode(inst, &pen)?))
    })
}

/// # Safety
/// `model` must be null or a handle from [`ofisp_encode`].
#[no_mangle]
pub unsafe extern "C" fn ofisp_model_free(model: *mut OfispModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of variables, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live model handle.
#[no_mangle]
pub unsafe extern "C" fn ofisp_model_num_vars(model: *const OfispModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.n_vars())
}

/// Energy of `len` bits (nonzero bytes are 1).
///
/// # Safety
/// `model` must be a live model handle, `bits` readable for `len` bytes and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ofisp_model_energy(
    model: *const OfispModel,
    bits: *const u8,
    len: usize,
    out: *mut f64,
) -> OfispStatus {
    guard(|| {
        let model = &borrow(model, "model")?.0;
        if bits.is_null() && len > 0 {
            return Err(null("bits"));
        }
        let raw = if len == 0 { &[][..] } else { std::slice::from_raw_parts(bits, len) };
        let bits: Vec<bool> = raw.iter().map(|&b| b != 0).collect();
        let energy = model.energy(&bits)?;
        *out.as_mut().ok_or_else(|| null("output pointer"))? = energy;
        Ok(())
    })
}

/// Coordinate-list text of the model; free with [`ofisp_string_free`].
///
/// # Safety
/// `model` must be a live model handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ofisp_model_to_coo(model: *const OfispModel, out: *mut *mut c_char) -> OfispStatus {
    guard(|| {
        let model = &borrow(model, "model")?.0;
        let out = out.as_mut().ok_or_else(|| null("output pointer"))?;
        *out = leak_string(model.to_coo());
        Ok(())
    })
}

/// The library's default schedule: 1000 reads of 1000 sweeps, derived
/// temperatures, seed 0.
#[no_mangle]
pub extern "C" fn ofisp_schedule_default() -> OfispSchedule {
    let s = AnnealSchedule::default();
    OfispSchedule { reads: s.reads, sweeps: s.sweeps, t_init: 0.0, t_final: 0.0, seed: s.seed }
}

/// # Safety
/// `model` must be a live model handle, `schedule` null (defaults) or
/// readable, and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ofisp_anneal(
    model: *const OfispModel,
    schedule: *const OfispSchedule,
    out: *mut *mut OfispSampleSet,
) -> OfispStatus {
    guard(|| {
        let model = &borrow(model, "model")?.0;
        let schedule = schedule.as_ref().copied().unwrap_or_else(|| ofisp_schedule_default());
        store(out, OfispSampleSet(simulated_anneal(model, &schedule.into())?))
    })
}

/// Exhaustive minimum as a one-sample set.
///
/// # Safety
/// `model` must be a live model handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ofisp_brute_force(model: *const OfispModel, out: *mut *mut OfispSampleSet) -> OfispStatus {
    guard(|| {
        let model = &borrow(model, "model")?.0;
        let (bits, _) = brute_force(model)?;
        store(out, OfispSampleSet(SampleSet::from_states(model, [bits])?))
    })
}

/// # Safety
/// `set` must be null or a handle from [`ofisp_anneal`] or [`ofisp_brute_force`].
#[no_mangle]
pub unsafe extern "C" fn ofisp_samples_free(set: *mut OfispSampleSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Number of distinct samples, or 0 for a null handle.
///
/// # Safety
/// `set` must be null or a live sample-set handle.
#[no_mangle]
pub unsafe extern "C" fn ofisp_samples_len(set: *const OfispSampleSet) -> usize {
    set.as_ref().map_or(0, |s| s.0.len())
}

/// Copies sample `index` (samples ascend by energy). `bits` receives one byte
/// per variable and must hold `bits_len >= num_vars` bytes; `energy` and
/// `occurrences` may be null.
///
/// # Safety
/// `set` must be a live sample-set handle, `bits` writable for `bits_len`
/// bytes, and `energy`/`occurrences` null or writable.
#[no_mangle]
pub unsafe extern "C" fn ofisp_sample_get(
    set: *const OfispSampleSet,
    index: usize,
    bits: *mut u8,
    bits_len: usize,
    energy: *mut f64,
    occurrences: *mut usize,
) -> OfispStatus {
    guard(|| {
        let set = &borrow(set, "sample set")?.0;
        let sample = set
            .samples()
            .get(index)
            .ok_or_else(|| Failure(OfispStatus::OutOfRange, format!("sample {index} of {}", set.len())))?;
        let n = sample.bits.len();
        if n > 0 {
            if bits.is_null() {
                return Err(null("bits"));
            }
            if bits_len < n {
                return Err(Failure(OfispStatus::OutOfRange, format!("bits buffer holds {bits_len}, need {n}")));
            }
            let dst = std::slice::from_raw_parts_mut(bits, n);
            for (d, &b) in dst.iter_mut().zip(&sample.bits) {
                *d = u8::from(b);
            }
        }
        if let Some(e) = energy.as_mut() {
            *e = sample.energy;
        }
        if let Some(o) = occurrences.as_mut() {
            *o = sample.occurrences;
        }
        Ok(())
    })
}

/// Applies a selection policy. Returns [`OfispStatus::Infeasible`] when no
/// sample is hard-feasible.
///
/// # Safety
/// All handles must be live and describe the same encoding; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ofisp_select(
    set: *const OfispSampleSet,
    model: *const OfispModel,
    inst: *const OfispInstance,
    policy: OfispPolicy,
    out: *mut OfispSelection,
) -> OfispStatus {
    guard(|| {
        let set = &borrow(set, "sample set")?.0;
        let model = &borrow(model, "model")?.0;
        let inst = &borrow(inst, "instance")?.0;
        let out = out.as_mut().ok_or_else(|| null("output pointer"))?;
        let chosen = select_solution(set, model, inst, policy.into())?
            .ok_or_else(|| Failure(OfispStatus::Infeasible, "no hard-feasible sample".into()))?;
        *out = OfispSelection {
            sample_index: chosen.sample_index,
            weight: chosen.report.total_weight,
            hard_violations: chosen.report.hard_violations,
            soft_violations: chosen.report.soft_violations,
        };
        Ok(())
    })
}
