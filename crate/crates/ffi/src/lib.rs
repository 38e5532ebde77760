//! C ABI over the `blindspot` library.
//!
//! Every function returns a [`BsStatus`] and writes results through out
//! pointers. Count tables live behind an opaque [`BsCountTable`] handle that
//! the caller releases with [`bs_count_table_free`]. After a non-`Ok`
//! status, [`bs_last_error_message`] describes the failure on the calling
//! thread. Panics never cross the boundary; they surface as
//! [`BsStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use blindspot::io::files::{read_counts_file, read_samples_file};
use blindspot::{
    accuracy_ceiling, blind_spot_curve, good_turing_unseen_mass, wilson_interval, CountTable, Error,
    EstimatorMode, StateKey,
};

/// Result of every `bs_*` call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    EmptyInput = 3,
    SchemaMismatch = 4,
    Io = 5,
    Parse = 6,
    Invariant = 7,
    BufferTooSmall = 8,
    InvalidUtf8 = 9,
    Panic = 10,
}

/// `mode` argument: plug-in blind mass.
pub const BS_MODE_PLUGIN: u32 = 0;
/// `mode` argument: plug-in blind mass plus the Good-Turing unseen term.
pub const BS_MODE_PLUGIN_UNSEEN: u32 = 1;
/// `mode` argument: generalized Good-Turing (extension).
pub const BS_MODE_GENERALIZED_GT: u32 = 2;

/// Opaque count table.
pub struct BsCountTable {
    inner: CountTable,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BsWilsonInterval {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Failure(BsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::EmptyInput(_) => BsStatus::EmptyInput,
            Error::SchemaMismatch { .. } | Error::UnknownFactor(_) | Error::UnknownState(_) => {
                BsStatus::SchemaMismatch
            }
            Error::Parse { .. } => BsStatus::Parse,
            Error::Io { .. } => BsStatus::Io,
            Error::Invariant(_) => BsStatus::Invariant,
            _ => BsStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn fail<T>(status: BsStatus, msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure(status, msg.into()))
}

/// Run `f`, record any failure for `bs_last_error_message`, and map panics.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> BsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            BsStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            BsStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure(BsStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| Failure(BsStatus::NullPointer, format!("{what} is null")))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return fail(BsStatus::NullPointer, format!("{what} is null"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(BsStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

fn mode(m: u32) -> Result<EstimatorMode, Failure> {
    match m {
        BS_MODE_PLUGIN => Ok(EstimatorMode::Plugin),
        BS_MODE_PLUGIN_UNSEEN => Ok(EstimatorMode::PluginUnseen),
        BS_MODE_GENERALIZED_GT => Ok(EstimatorMode::GeneralizedGoodTuring),
        other => fail(
            BsStatus::InvalidArgument,
            format!("unknown estimator mode {other}"),
        ),
    }
}

fn boxed(table: CountTable, out_table: &mut *mut BsCountTable) {
    *out_table = Box::into_raw(Box::new(BsCountTable { inner: table }));
}

/// Message for the last failed call on this thread, or NULL after a
/// successful one. The pointer stays valid until the next `bs_*` call on
/// the same thread.
#[no_mangle]
pub extern "C" fn bs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Build a single-factor table (factor `state`) from `len` labels and counts.
/// Repeated labels are summed; zero counts are ignored.
///
/// # Safety
/// `labels` and `counts` must point to `len` valid elements, each label a
/// NUL-terminated string. `out_table` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bs_count_table_from_counts(
    labels: *const *const c_char,
    counts: *const u64,
    len: usize,
    out_table: *mut *mut BsCountTable,
) -> BsStatus {
    guard(|| {
        let out_table = out(out_table, "out_table")?;
        *out_table = ptr::null_mut();
        if len == 0 {
            return fail(BsStatus::EmptyInput, "no states given");
        }
        if labels.is_null() || counts.is_null() {
            return fail(BsStatus::NullPointer, "labels or counts is null");
        }
        let labels = std::slice::from_raw_parts(labels, len);
        let counts = std::slice::from_raw_parts(counts, len);
        let mut pairs = Vec::with_capacity(len);
        for (i, (&l, &c)) in labels.iter().zip(counts).enumerate() {
            let label = c_str(l, &format!("labels[{i}]"))?;
            pairs.push((StateKey::single("state", label), c));
        }
        boxed(CountTable::from_counts(&["state"], pairs)?, out_table);
        Ok(())
    })
}

/// Load a table from a canonical samples CSV (`factor:<name>` columns).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out_table` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bs_count_table_from_samples_file(
    path: *const c_char,
    out_table: *mut *mut BsCountTable,
) -> BsStatus {
    guard(|| {
        let out_table = out(out_table, "out_table")?;
        *out_table = ptr::null_mut();
        let path = c_str(path, "path")?;
        let (schema, samples) = read_samples_file(Path::new(path))?;
        boxed(CountTable::build(&samples, &schema)?, out_table);
        Ok(())
    })
}

/// Load a table from a `(state columns..., count)` CSV.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out_table` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bs_count_table_from_counts_file(
    path: *const c_char,
    out_table: *mut *mut BsCountTable,
) -> BsStatus {
    guard(|| {
        let out_table = out(out_table, "out_table")?;
        *out_table = ptr::null_mut();
        let path = c_str(path, "path")?;
        boxed(read_counts_file(Path::new(path))?, out_table);
        Ok(())
    })
}

/// Release a table. NULL is a no-op.
///
/// # Safety
/// `table` must come from a `bs_count_table_*` constructor and not have
/// been freed already.
#[no_mangle]
pub unsafe extern "C" fn bs_count_table_free(table: *mut BsCountTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// Total sample count `n`.
///
/// # Safety
/// `table` must be a live handle; `out_n` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bs_count_table_n(table: *const BsCountTable, out_n: *mut u64) -> BsStatus {
    guard(|| {
        *out(out_n, "out_n")? = deref(table, "table")?.inner.n();
        Ok(())
    })
}

/// Number of distinct observed states.
///
/// # Safety
/// `table` must be a live handle; `out_k` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bs_count_table_k_eff(table: *const BsCountTable, out_k: *mut u64) -> BsStatus {
    guard(|| {
        *out(out_k, "out_k")? = deref(table, "table")?.inner.k_observed() as u64;
        Ok(())
    })
}

/// Estimated blind-spot mass at threshold `tau` (at least 1).
///
/// # Safety
/// `table` must be a live handle; `out_mass` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bs_blind_spot_mass(
    table: *const BsCountTable,
    mode_id: u32,
    tau: u64,
    out_mass: *mut f64,
) -> BsStatus {
    guard(|| {
        let table = deref(table, "table")?;
        let out_mass = out(out_mass, "out_mass")?;
        let curve = blind_spot_curve(&table.inner, mode(mode_id)?, tau)?;
        *out_mass = curve.at(tau).expect("curve covers tau_max");
        Ok(())
    })
}

/// Fill `buf[tau - 1]` with the estimate at each `tau` in `1..=tau_max`.
/// Fails with `BufferTooSmall` when `buf_len < tau_max`.
///
/// # Safety
/// `table` must be a live handle; `buf` must have room for `buf_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn bs_blind_spot_curve(
    table: *const BsCountTable,
    mode_id: u32,
    tau_max: u64,
    buf: *mut f64,
    buf_len: usize,
) -> BsStatus {
    guard(|| {
        let table = deref(table, "table")?;
        if buf.is_null() {
            return fail(BsStatus::NullPointer, "buf is null");
        }
        if (buf_len as u64) < tau_max {
            return fail(
                BsStatus::BufferTooSmall,
                format!("buffer holds {buf_len} values, curve needs {tau_max}"),
            );
        }
        let curve = blind_spot_curve(&table.inner, mode(mode_id)?, tau_max)?;
        let buf = std::slice::from_raw_parts_mut(buf, buf_len);
        for (slot, p) in buf.iter_mut().zip(&curve.points) {
            *slot = p.mass;
        }
        Ok(())
    })
}

/// Good-Turing unseen-mass estimate `f1 / n`.
///
/// # Safety
/// `table` must be a live handle; `out_mass` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bs_good_turing_unseen_mass(
    table: *const BsCountTable,
    out_mass: *mut f64,
) -> BsStatus {
    guard(|| {
        let table = deref(table, "table")?;
        *out(out_mass, "out_mass")? = good_turing_unseen_mass(&table.inner.freq_of_freqs());
        Ok(())
    })
}

/// Accuracy ceiling `(1 - b) + b * a` for blind mass `b` and blind-region
/// accuracy `a`, both in `[0, 1]`.
///
/// # Safety
/// `out_ceiling` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bs_accuracy_ceiling(
    blind_mass: f64,
    assumed_blind_accuracy: f64,
    out_ceiling: *mut f64,
) -> BsStatus {
    guard(|| {
        let out_ceiling = out(out_ceiling, "out_ceiling")?;
        *out_ceiling = accuracy_ceiling(blind_mass, assumed_blind_accuracy)?;
        Ok(())
    })
}

/// Wilson score interval for `successes` out of `trials`.
///
/// # Safety
/// `out_interval` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bs_wilson_interval(
    successes: u64,
    trials: u64,
    confidence: f64,
    out_interval: *mut BsWilsonInterval,
) -> BsStatus {
    guard(|| {
        let out_interval = out(out_interval, "out_interval")?;
        let w = wilson_interval(successes, trials, confidence)?;
        *out_interval = BsWilsonInterval {
            estimate: w.estimate,
            lower: w.lower,
            upper: w.upper,
        };
        Ok(())
    })
}
