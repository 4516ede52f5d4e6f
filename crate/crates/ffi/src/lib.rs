//! C ABI over `stochsep`.
//!
//! Every function returns a [`SepStatus`]; results come back through out-pointers.
//! On failure a message is kept per thread and can be read with
//! [`sep_last_error`]. Objects are opaque handles released with their `_free`
//! function. Panics never cross the boundary; they surface as `SEP_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use stochsep::bounds::{self, SeparationRegime};
use stochsep::corrector::{self, ComponentRule, CorrectorModel, WhiteningModel};
use stochsep::io::{self, MatrixFormat};
use stochsep::sampling::{sample, DistributionKind, DistributionSpec, FeatureMatrix, SeedSpec};
use stochsep::separability::census;
use stochsep::SepError;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SepStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    DimensionMismatch = 3,
    Unreachable = 4,
    IllConditioned = 5,
    Singular = 6,
    NotSeparable = 7,
    NonConvergence = 8,
    Incompatible = 9,
    Parse = 10,
    Format = 11,
    Io = 12,
    InvalidUtf8 = 13,
    Panic = 14,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SepDistribution {
    Ball = 0,
    Cube = 1,
    Gaussian = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SepMatrixFormat {
    Csv = 0,
    Bin = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SepRule {
    BrokenStick = 0,
    Kaiser = 1,
    /// Uses the accompanying `k`; `k = 0` keeps every component.
    Fixed = 2,
}

/// Row-major matrix of finite doubles.
pub struct SepMatrix {
    inner: FeatureMatrix,
}

/// A fitted corrector: whitening followed by a predicate cascade.
pub struct SepCorrector {
    inner: CorrectorModel,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(SepStatus, String);

impl From<SepError> for Failure {
    fn from(e: SepError) -> Self {
        let status = match &e {
            SepError::Domain(_) => SepStatus::Domain,
            SepError::DimensionMismatch { .. } => SepStatus::DimensionMismatch,
            SepError::Unreachable(_) => SepStatus::Unreachable,
            SepError::IllConditioned { .. } => SepStatus::IllConditioned,
            SepError::Singular(_) => SepStatus::Singular,
            SepError::NotSeparable(_) => SepStatus::NotSeparable,
            SepError::NonConvergence(_) => SepStatus::NonConvergence,
            SepError::Incompatible(_) => SepStatus::Incompatible,
            SepError::Parse { .. } => SepStatus::Parse,
            SepError::Format(_) | SepError::Json(_) => SepStatus::Format,
            SepError::Io(_) => SepStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(SepStatus::NullPointer, format!("{what} is null"))
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SepStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SepStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            SepStatus::Panic
        }
    }
}

/// # Safety
/// `p` is null or valid for writes of `T`.
unsafe fn write<T>(p: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(value);
    Ok(())
}

/// # Safety
/// `p` is null or points to `len` readable doubles.
unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// # Safety
/// `p` is null or a NUL-terminated string.
unsafe fn path(p: *const c_char) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(SepStatus::InvalidUtf8, "path is not valid UTF-8".into()))?;
    Ok(PathBuf::from(s))
}

/// # Safety
/// `h` is null or a live handle from this library.
unsafe fn matrix<'a>(h: *const SepMatrix) -> Result<&'a FeatureMatrix, Failure> {
    h.as_ref().map(|m| &m.inner).ok_or_else(|| null("matrix"))
}

/// # Safety
/// `h` is null or a live handle from this library.
unsafe fn model<'a>(h: *const SepCorrector) -> Result<&'a CorrectorModel, Failure> {
    h.as_ref().map(|m| &m.inner).ok_or_else(|| null("corrector"))
}

/// Message of the last failed call on this thread; empty if none. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sep_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sep_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Single-point separation bound at fixed `eps`.
///
/// # Safety
/// `value` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sep_bound_p1(n: usize, m: f64, eps: f64, value: *mut f64) -> SepStatus {
    guard(|| {
        let r = SeparationRegime::new(n, m, eps)?;
        write(value, bounds::p1_lower_bound(&r).value, "value")
    })
}

/// Single-point bound maximised over `eps`; `eps_used` may be null.
///
/// # Safety
/// `value` must be valid for writes; `eps_used` is null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sep_bound_p1_max(n: usize, m: f64, value: *mut f64, eps_used: *mut f64) -> SepStatus {
    guard(|| {
        let b = bounds::p1_lower_bound_max(n, m)?;
        if !eps_used.is_null() {
            eps_used.write(b.eps_used);
        }
        write(value, b.value, "value")
    })
}

/// All-points separation bound at fixed `eps` (requires `m >= 2`).
///
/// # Safety
/// `value` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sep_bound_pm(n: usize, m: f64, eps: f64, value: *mut f64) -> SepStatus {
    guard(|| {
        let r = SeparationRegime::new(n, m, eps)?;
        write(value, bounds::pm_lower_bound(&r)?.value, "value")
    })
}

/// Union bound `1 - M (1 - P1)` maximised over `eps`.
///
/// # Safety
/// `value` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sep_bound_pm_union(n: usize, m: f64, value: *mut f64) -> SepStatus {
    guard(|| write(value, bounds::pm_union_bound(n, m)?.value, "value"))
}

/// Two-neuron bound; pass `eps <= 0` to maximise over `eps`.
///
/// # Safety
/// `value` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sep_bound_two_neuron(n: usize, m: f64, eps: f64, value: *mut f64) -> SepStatus {
    guard(|| {
        let v = if eps <= 0.0 {
            bounds::two_neuron_bound_max(n, m)?.value
        } else {
            bounds::two_neuron_bound_given_eps(&SeparationRegime::new(n, m, eps)?).value
        };
        write(value, v, "value")
    })
}

/// Largest sample size keeping the single-point bound at or above `p`.
///
/// # Safety
/// `m_max` must be valid for writes; `asymptotic` is null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sep_capacity_single(
    n: usize,
    eps: f64,
    p: f64,
    m_max: *mut f64,
    asymptotic: *mut f64,
) -> SepStatus {
    guard(|| {
        let c = bounds::capacity_single(n, eps, p)?;
        if !asymptotic.is_null() {
            asymptotic.write(c.asymptotic);
        }
        write(m_max, c.m_max, "m_max")
    })
}

/// Largest sample size keeping the all-points bound at or above `q`.
///
/// # Safety
/// `m_max` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sep_capacity_all(n: usize, eps: f64, q: f64, m_max: *mut f64) -> SepStatus {
    guard(|| write(m_max, bounds::capacity_all(n, eps, q)?.m_max, "m_max"))
}

fn boxed(m: FeatureMatrix) -> *mut SepMatrix {
    Box::into_raw(Box::new(SepMatrix { inner: m }))
}

/// Copies `rows * cols` row-major doubles into a new matrix.
///
/// # Safety
/// `data` points to `rows * cols` readable doubles; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sep_matrix_new(
    rows: usize,
    cols: usize,
    data: *const f64,
    out: *mut *mut SepMatrix,
) -> SepStatus {
    guard(|| {
        let len = rows
            .checked_mul(cols)
            .ok_or_else(|| Failure(SepStatus::Domain, "matrix size overflows".into()))?;
        let m = FeatureMatrix::new(rows, cols, slice(data, len, "data")?.to_vec())?;
        write(out, boxed(m), "out")
    })
}

/// Draws `m` rows from the chosen distribution on stream `(seed, stream)`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sep_matrix_sample(
    dist: SepDistribution,
    n: usize,
    m: usize,
    seed: u64,
    stream: u64,
    out: *mut *mut SepMatrix,
) -> SepStatus {
    guard(|| {
        let kind = match dist {
            SepDistribution::Ball => DistributionKind::Ball,
            SepDistribution::Cube => DistributionKind::Cube,
            SepDistribution::Gaussian => DistributionKind::Gaussian,
        };
        let spec = DistributionSpec::new(kind, n)?;
        let x = sample(&spec, m, SeedSpec { master_seed: seed, stream_id: stream })?;
        write(out, boxed(x), "out")
    })
}

/// Uniform sample from the ellipsoid with the given `n` semi-axes.
///
/// # Safety
/// `axes` points to `n` readable doubles; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sep_matrix_sample_ellipsoid(
    axes: *const f64,
    n: usize,
    m: usize,
    seed: u64,
    stream: u64,
    out: *mut *mut SepMatrix,
) -> SepStatus {
    guard(|| {
        let spec = DistributionSpec::ellipsoid(slice(axes, n, "axes")?.to_vec())?;
        let x = sample(&spec, m, SeedSpec { master_seed: seed, stream_id: stream })?;
        write(out, boxed(x), "out")
    })
}

fn format_of(f: SepMatrixFormat) -> MatrixFormat {
    match f {
        SepMatrixFormat::Csv => MatrixFormat::Csv,
        SepMatrixFormat::Bin => MatrixFormat::Bin,
    }
}

/// # Safety
/// `file` is a NUL-terminated path; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sep_matrix_read(
    file: *const c_char,
    format: SepMatrixFormat,
    out: *mut *mut SepMatrix,
) -> SepStatus {
    guard(|| {
        let m = io::read_matrix(path(file)?, format_of(format))?;
        write(out, boxed(m), "out")
    })
}

/// # Safety
/// `m` is a live matrix handle; `file` is a NUL-terminated path.
#[no_mangle]
pub unsafe extern "C" fn sep_matrix_write(
    m: *const SepMatrix,
    file: *const c_char,
    format: SepMatrixFormat,
) -> SepStatus {
    guard(|| Ok(io::write_matrix(matrix(m)?, path(file)?, format_of(format))?))
}

/// Row count, or 0 for a null handle.
///
/// # Safety
/// `m` is null or a live matrix handle.
#[no_mangle]
pub unsafe extern "C" fn sep_matrix_rows(m: *const SepMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.inner.rows())
}

/// Column count, or 0 for a null handle.
///
/// # Safety
/// `m` is null or a live matrix handle.
#[no_mangle]
pub unsafe extern "C" fn sep_matrix_cols(m: *const SepMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.inner.cols())
}

/// Borrowed pointer to the row-major data, valid while the handle lives.
///
/// # Safety
/// `m` is null or a live matrix handle.
#[no_mangle]
pub unsafe extern "C" fn sep_matrix_data(m: *const SepMatrix) -> *const f64 {
    m.as_ref().map_or(ptr::null(), |m| m.inner.data().as_ptr())
}

/// # Safety
/// `m` is null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sep_matrix_free(m: *mut SepMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Separability census. `per_point` is null or has room for one bool per row.
///
/// # Safety
/// `m` is a live matrix handle; `count` and `f1` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sep_census(
    m: *const SepMatrix,
    count: *mut usize,
    f1: *mut f64,
    per_point: *mut bool,
) -> SepStatus {
    guard(|| {
        let x = matrix(m)?;
        let r = census(x)?;
        if !per_point.is_null() {
            let flags = r.per_point.as_deref().unwrap_or_default();
            std::slice::from_raw_parts_mut(per_point, x.rows()).copy_from_slice(flags);
        }
        write(count, r.separable_count, "count")?;
        write(f1, r.f1, "f1")
    })
}

fn rule_of(rule: SepRule, k: usize, n: usize) -> ComponentRule {
    match rule {
        SepRule::BrokenStick => ComponentRule::BrokenStick,
        SepRule::Kaiser => ComponentRule::Kaiser,
        SepRule::Fixed => ComponentRule::Fixed(if k == 0 { n } else { k }),
    }
}

fn boxed_model(m: CorrectorModel) -> *mut SepCorrector {
    Box::into_raw(Box::new(SepCorrector { inner: m }))
}

fn whitening(positives: &FeatureMatrix, rule: SepRule, k: usize, whiten: bool) -> Result<WhiteningModel, Failure> {
    Ok(corrector::build_whitening(positives, rule_of(rule, k, positives.cols()), whiten)?)
}

/// Spherical cap around the mean of `positives` through `query`.
///
/// # Safety
/// `positives` is a live handle; `query` points to `len` doubles; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sep_corrector_spherical_cap(
    positives: *const SepMatrix,
    query: *const f64,
    len: usize,
    out: *mut *mut SepCorrector,
) -> SepStatus {
    guard(|| {
        let c = corrector::spherical_cap_corrector(matrix(positives)?, slice(query, len, "query")?)?;
        write(out, boxed_model(c), "out")
    })
}

/// Fisher cap for one query in the whitened space fitted on `positives`.
///
/// # Safety
/// `positives` is a live handle; `query` points to `len` doubles; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sep_corrector_fisher_single(
    positives: *const SepMatrix,
    query: *const f64,
    len: usize,
    rule: SepRule,
    k: usize,
    whiten: bool,
    out: *mut *mut SepCorrector,
) -> SepStatus {
    guard(|| {
        let p = matrix(positives)?;
        let w = whitening(p, rule, k, whiten)?;
        let c = corrector::fisher_corrector_single(p, slice(query, len, "query")?, &w)?;
        write(out, boxed_model(c), "out")
    })
}

/// Pooled-covariance Fisher model flagging every row of `trash`.
///
/// # Safety
/// `positives` and `trash` are live handles; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sep_corrector_fisher_multi(
    positives: *const SepMatrix,
    trash: *const SepMatrix,
    rule: SepRule,
    k: usize,
    whiten: bool,
    out: *mut *mut SepCorrector,
) -> SepStatus {
    guard(|| {
        let p = matrix(positives)?;
        let w = whitening(p, rule, k, whiten)?;
        let c = corrector::fisher_corrector_multi(p, matrix(trash)?, &w)?;
        write(out, boxed_model(c), "out")
    })
}

/// Two-neuron corrector for one query.
///
/// # Safety
/// `positives` is a live handle; `query` points to `len` doubles; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sep_corrector_two_neuron(
    positives: *const SepMatrix,
    query: *const f64,
    len: usize,
    rule: SepRule,
    k: usize,
    whiten: bool,
    out: *mut *mut SepCorrector,
) -> SepStatus {
    guard(|| {
        let p = matrix(positives)?;
        let w = whitening(p, rule, k, whiten)?;
        let c = corrector::two_neuron_corrector(p, slice(query, len, "query")?, &w)?;
        write(out, boxed_model(c), "out")
    })
}

/// OR of `count` correctors sharing one whitening.
///
/// # Safety
/// `models` points to `count` live corrector handles; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sep_corrector_assemble(
    models: *const *const SepCorrector,
    count: usize,
    out: *mut *mut SepCorrector,
) -> SepStatus {
    guard(|| {
        if models.is_null() {
            return Err(null("models"));
        }
        let list = std::slice::from_raw_parts(models, count)
            .iter()
            .map(|h| model(*h).cloned())
            .collect::<Result<Vec<_>, _>>()?;
        write(out, boxed_model(corrector::assemble_cascade(&list)?), "out")
    })
}

/// Flags one vector of length `len`.
///
/// # Safety
/// `c` is a live handle; `x` points to `len` doubles; `flag` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sep_corrector_apply(
    c: *const SepCorrector,
    x: *const f64,
    len: usize,
    flag: *mut bool,
) -> SepStatus {
    guard(|| write(flag, model(c)?.apply(slice(x, len, "x")?)?, "flag"))
}

/// Flags every row of `m` into `flags`, which has room for one bool per row.
///
/// # Safety
/// `c` and `m` are live handles; `flags` points to `rows(m)` writable bools.
#[no_mangle]
pub unsafe extern "C" fn sep_corrector_apply_matrix(
    c: *const SepCorrector,
    m: *const SepMatrix,
    flags: *mut bool,
) -> SepStatus {
    guard(|| {
        let x = matrix(m)?;
        let result = model(c)?.apply_matrix(x)?;
        if flags.is_null() {
            return Err(null("flags"));
        }
        std::slice::from_raw_parts_mut(flags, x.rows()).copy_from_slice(&result);
        Ok(())
    })
}

/// Input dimension of the corrector, or 0 for a null handle.
///
/// # Safety
/// `c` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sep_corrector_input_dim(c: *const SepCorrector) -> usize {
    c.as_ref().map_or(0, |c| c.inner.input_dim())
}

/// # Safety
/// `file` is a NUL-terminated path; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sep_corrector_load(file: *const c_char, out: *mut *mut SepCorrector) -> SepStatus {
    guard(|| write(out, boxed_model(io::read_model(path(file)?)?), "out"))
}

/// # Safety
/// `c` is a live handle; `file` is a NUL-terminated path.
#[no_mangle]
pub unsafe extern "C" fn sep_corrector_save(c: *const SepCorrector, file: *const c_char) -> SepStatus {
    guard(|| Ok(io::write_model(model(c)?, path(file)?)?))
}

/// Serialises the model as JSON into a new string released with [`sep_string_free`].
///
/// # Safety
/// `c` is a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sep_corrector_to_json(c: *const SepCorrector, out: *mut *mut c_char) -> SepStatus {
    guard(|| {
        let text = io::model_to_json(model(c)?)?;
        let s = CString::new(text).map_err(|_| Failure(SepStatus::Format, "interior NUL".into()))?;
        write(out, s.into_raw(), "out")
    })
}

/// # Safety
/// `json` is a NUL-terminated UTF-8 string; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sep_corrector_from_json(json: *const c_char, out: *mut *mut SepCorrector) -> SepStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|_| Failure(SepStatus::InvalidUtf8, "json is not valid UTF-8".into()))?;
        write(out, boxed_model(io::model_from_json(text)?), "out")
    })
}

/// # Safety
/// `c` is null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sep_corrector_free(c: *mut SepCorrector) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// # Safety
/// `s` is null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sep_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
