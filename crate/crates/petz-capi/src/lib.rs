//! C interface to the petz library.
//!
//! Every function returns a [`petz_status`]; results travel through out
//! pointers. Handles are opaque and released with the matching `_free`
//! function (all of which accept NULL). Strings returned through `char **`
//! are NUL-terminated UTF-8 owned by the caller and released with
//! [`petz_string_free`]. After a failure, [`petz_last_error_message`]
//! describes what went wrong on the calling thread.
//!
//! Matrix buffers are row-major with interleaved components: entry `(i, j)`
//! of an `n×n` matrix occupies `data[2*(i*n + j)]` (real part) and
//! `data[2*(i*n + j) + 1]` (imaginary part).

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use num_complex::Complex64;

use petz::channels::{petz_dual, KrausChannel};
use petz::entropy::{build_markov_state, ssa_gap, MarkovSpec, TripartiteState};
use petz::io::{self, Document};
use petz::linalg::{ComplexMatrix, DensityMatrix, SubsystemDims};
use petz::report::{render_json, ssa_report, structure_report, CheckReport};
use petz::sufficiency::{
    check_sufficiency, synthesize_sufficient_instance, SufficiencyConfig, SyntheticSpec,
};
use petz::{Error, DEFAULT_T_GRID};

/// Call outcome. `PETZ_OK`, `PETZ_INVALID_INPUT`, and `PETZ_NUMERICAL`
/// carry the same meaning as the command-line tool's exit codes 0, 2, and 3;
/// value 1 is reserved (the tool uses it for negative verdicts, which this
/// interface reports through out parameters instead).
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
#[allow(non_camel_case_types)]
pub enum petz_status {
    /// The call succeeded.
    PETZ_OK = 0,
    /// Malformed or inconsistent input: an unparseable document, a matrix
    /// that is not a state, mismatched dimensions, a bad tolerance, or a
    /// precondition that does not hold.
    PETZ_INVALID_INPUT = 2,
    /// The computation could not be completed at working precision.
    PETZ_NUMERICAL = 3,
    /// A required pointer argument was NULL.
    PETZ_NULL_POINTER = 4,
    /// A string argument was not valid UTF-8.
    PETZ_INVALID_UTF8 = 5,
    /// An internal invariant failed; the library state is still consistent
    /// but the call produced nothing.
    PETZ_INTERNAL = 6,
}

use petz_status::*;

/// A density matrix.
#[allow(non_camel_case_types)]
pub struct petz_state(DensityMatrix);

/// A completely positive trace-preserving map in Kraus form.
#[allow(non_camel_case_types)]
pub struct petz_channel(KrausChannel);

/// A density matrix on a three-legged tensor product A ⊗ B ⊗ C.
#[allow(non_camel_case_types)]
pub struct petz_tripartite(TripartiteState);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let owned = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = owned);
}

fn fail(e: &Error) -> petz_status {
    set_error(&e.to_string());
    if e.exit_code() == 3 {
        PETZ_NUMERICAL
    } else {
        PETZ_INVALID_INPUT
    }
}

fn null_pointer(what: &str) -> petz_status {
    set_error(&format!("{what} is NULL"));
    PETZ_NULL_POINTER
}

fn guarded(f: impl FnOnce() -> petz_status) -> petz_status {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            PETZ_INTERNAL
        }
    }
}

macro_rules! nonnull {
    ($ptr:expr, $name:literal) => {
        match unsafe { $ptr.as_ref() } {
            Some(r) => r,
            None => return null_pointer($name),
        }
    };
}

/// `tol == 0` selects the default; anything else must be positive and finite.
fn resolve_tol(tol: f64) -> Result<f64, petz_status> {
    if tol == 0.0 {
        Ok(1e-8)
    } else if tol.is_finite() && tol > 0.0 {
        Ok(tol)
    } else {
        set_error(&format!("tolerance must be positive and finite (or 0 for the default), got {tol}"));
        Err(PETZ_INVALID_INPUT)
    }
}

fn config(tol: f64) -> SufficiencyConfig {
    SufficiencyConfig { tol, t_grid: DEFAULT_T_GRID.to_vec() }
}

unsafe fn write_out<T>(ptr: *mut T, value: T) {
    if let Some(slot) = unsafe { ptr.as_mut() } {
        *slot = value;
    }
}

unsafe fn utf8_arg<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, petz_status> {
    if ptr.is_null() {
        return Err(null_pointer(name));
    }
    unsafe { CStr::from_ptr(ptr) }.to_str().map_err(|_| {
        set_error(&format!("{name} is not valid UTF-8"));
        PETZ_INVALID_UTF8
    })
}

unsafe fn matrix_from_raw(n: usize, data: *const f64) -> ComplexMatrix {
    let flat = unsafe { std::slice::from_raw_parts(data, 2 * n * n) };
    ComplexMatrix::from_fn(n, n, |i, j| {
        Complex64::new(flat[2 * (i * n + j)], flat[2 * (i * n + j) + 1])
    })
}

fn give_string(text: String, out: *mut *mut c_char) -> petz_status {
    match CString::new(text) {
        Ok(owned) => {
            unsafe { write_out(out, owned.into_raw()) };
            PETZ_OK
        }
        Err(_) => {
            set_error("rendered text contained an interior NUL byte");
            PETZ_INTERNAL
        }
    }
}

fn give_handle<T>(value: T, out: *mut *mut T) -> petz_status {
    unsafe { write_out(out, Box::into_raw(Box::new(value))) };
    PETZ_OK
}

/// Version of the library, as a static string. Do not free.
#[no_mangle]
pub extern "C" fn petz_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message for the most recent failure on the calling thread, as a static
/// NUL-terminated string. Never NULL (empty before any failure); valid until
/// the next failing call on the same thread. Do not free.
#[no_mangle]
pub extern "C" fn petz_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Releases a string returned by this library. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn petz_string_free(text: *mut c_char) {
    if !text.is_null() {
        drop(unsafe { CString::from_raw(text) });
    }
}

/// Parses a `state` JSON document into a new handle.
#[no_mangle]
pub unsafe extern "C" fn petz_state_parse(
    json: *const c_char,
    out: *mut *mut petz_state,
) -> petz_status {
    guarded(|| {
        if out.is_null() {
            return null_pointer("out");
        }
        let text = match unsafe { utf8_arg(json, "json") } {
            Ok(t) => t,
            Err(status) => return status,
        };
        match io::parse_document(text).and_then(Document::into_state) {
            Ok(d) => give_handle(petz_state(d), out),
            Err(e) => fail(&e),
        }
    })
}

/// Builds a state from a row-major interleaved `dim×dim` buffer
/// (`2*dim*dim` doubles). The matrix must be Hermitian, positive
/// semidefinite, and of unit trace.
#[no_mangle]
pub unsafe extern "C" fn petz_state_new(
    dim: usize,
    data: *const f64,
    out: *mut *mut petz_state,
) -> petz_status {
    guarded(|| {
        if out.is_null() {
            return null_pointer("out");
        }
        if data.is_null() {
            return null_pointer("data");
        }
        if dim == 0 {
            set_error("state dimension must be positive");
            return PETZ_INVALID_INPUT;
        }
        match DensityMatrix::new(unsafe { matrix_from_raw(dim, data) }) {
            Ok(d) => give_handle(petz_state(d), out),
            Err(e) => fail(&e),
        }
    })
}

/// Renders the state as a `state` JSON document.
#[no_mangle]
pub unsafe extern "C" fn petz_state_to_json(
    state: *const petz_state,
    out: *mut *mut c_char,
) -> petz_status {
    guarded(|| {
        let state = nonnull!(state, "state");
        if out.is_null() {
            return null_pointer("out");
        }
        match io::render_document(&Document::state(&state.0)) {
            Ok(text) => give_string(text, out),
            Err(e) => fail(&e),
        }
    })
}

/// Dimension of the state's Hilbert space; 0 if `state` is NULL.
#[no_mangle]
pub unsafe extern "C" fn petz_state_dim(state: *const petz_state) -> usize {
    unsafe { state.as_ref() }.map_or(0, |s| s.0.matrix().rows())
}

/// Copies the state's matrix into `buffer` (row-major interleaved).
/// `len` must be exactly `2*dim*dim`.
#[no_mangle]
pub unsafe extern "C" fn petz_state_copy_data(
    state: *const petz_state,
    buffer: *mut f64,
    len: usize,
) -> petz_status {
    guarded(|| {
        let state = nonnull!(state, "state");
        if buffer.is_null() {
            return null_pointer("buffer");
        }
        let n = state.0.matrix().rows();
        if len != 2 * n * n {
            set_error(&format!("buffer holds {len} doubles, need exactly {}", 2 * n * n));
            return PETZ_INVALID_INPUT;
        }
        let out = unsafe { std::slice::from_raw_parts_mut(buffer, len) };
        for i in 0..n {
            for j in 0..n {
                let z = state.0.matrix()[(i, j)];
                out[2 * (i * n + j)] = z.re;
                out[2 * (i * n + j) + 1] = z.im;
            }
        }
        PETZ_OK
    })
}

/// Releases a state handle. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn petz_state_free(state: *mut petz_state) {
    if !state.is_null() {
        drop(unsafe { Box::from_raw(state) });
    }
}

/// Parses a `channel` JSON document into a new handle.
#[no_mangle]
pub unsafe extern "C" fn petz_channel_parse(
    json: *const c_char,
    out: *mut *mut petz_channel,
) -> petz_status {
    guarded(|| {
        if out.is_null() {
            return null_pointer("out");
        }
        let text = match unsafe { utf8_arg(json, "json") } {
            Ok(t) => t,
            Err(status) => return status,
        };
        match io::parse_document(text).and_then(Document::into_channel) {
            Ok(c) => give_handle(petz_channel(c), out),
            Err(e) => fail(&e),
        }
    })
}

/// Builds a channel from `kraus_terms` stacked coefficient matrices, each an
/// `out_dim×in_dim` row-major interleaved block of `2*out_dim*in_dim`
/// doubles. The family must satisfy the trace-preservation identity.
#[no_mangle]
pub unsafe extern "C" fn petz_channel_new(
    in_dim: usize,
    out_dim: usize,
    kraus_terms: usize,
    data: *const f64,
    out: *mut *mut petz_channel,
) -> petz_status {
    guarded(|| {
        if out.is_null() {
            return null_pointer("out");
        }
        if data.is_null() {
            return null_pointer("data");
        }
        if in_dim == 0 || out_dim == 0 || kraus_terms == 0 {
            set_error("channel dimensions and the number of kraus terms must be positive");
            return PETZ_INVALID_INPUT;
        }
        let stride = 2 * out_dim * in_dim;
        let flat = unsafe { std::slice::from_raw_parts(data, kraus_terms * stride) };
        let coeffs: Vec<ComplexMatrix> = (0..kraus_terms)
            .map(|t| {
                let block = &flat[t * stride..(t + 1) * stride];
                ComplexMatrix::from_fn(out_dim, in_dim, |i, j| {
                    Complex64::new(block[2 * (i * in_dim + j)], block[2 * (i * in_dim + j) + 1])
                })
            })
            .collect();
        match KrausChannel::new(in_dim, out_dim, coeffs) {
            Ok(c) => give_handle(petz_channel(c), out),
            Err(e) => fail(&e),
        }
    })
}

/// Renders the channel as a `channel` JSON document.
#[no_mangle]
pub unsafe extern "C" fn petz_channel_to_json(
    channel: *const petz_channel,
    out: *mut *mut c_char,
) -> petz_status {
    guarded(|| {
        let channel = nonnull!(channel, "channel");
        if out.is_null() {
            return null_pointer("out");
        }
        match io::render_document(&Document::channel(&channel.0)) {
            Ok(text) => give_string(text, out),
            Err(e) => fail(&e),
        }
    })
}

/// Input dimension; 0 if `channel` is NULL.
#[no_mangle]
pub unsafe extern "C" fn petz_channel_in_dim(channel: *const petz_channel) -> usize {
    unsafe { channel.as_ref() }.map_or(0, |c| c.0.in_dim())
}

/// Output dimension; 0 if `channel` is NULL.
#[no_mangle]
pub unsafe extern "C" fn petz_channel_out_dim(channel: *const petz_channel) -> usize {
    unsafe { channel.as_ref() }.map_or(0, |c| c.0.out_dim())
}

/// Number of Kraus coefficients; 0 if `channel` is NULL.
#[no_mangle]
pub unsafe extern "C" fn petz_channel_kraus_terms(channel: *const petz_channel) -> usize {
    unsafe { channel.as_ref() }.map_or(0, |c| c.0.coefficients().len())
}

/// Applies the channel to a state: `*out = T(state)`.
#[no_mangle]
pub unsafe extern "C" fn petz_channel_apply(
    channel: *const petz_channel,
    state: *const petz_state,
    out: *mut *mut petz_state,
) -> petz_status {
    guarded(|| {
        let channel = nonnull!(channel, "channel");
        let state = nonnull!(state, "state");
        if out.is_null() {
            return null_pointer("out");
        }
        match channel.0.apply_to_state(&state.0) {
            Ok(d) => give_handle(petz_state(d), out),
            Err(e) => fail(&e),
        }
    })
}

/// Petz dual of the channel with respect to a reference state. The channel's
/// image of the reference must be invertible.
#[no_mangle]
pub unsafe extern "C" fn petz_channel_petz_dual(
    channel: *const petz_channel,
    reference: *const petz_state,
    out: *mut *mut petz_channel,
) -> petz_status {
    guarded(|| {
        let channel = nonnull!(channel, "channel");
        let reference = nonnull!(reference, "reference");
        if out.is_null() {
            return null_pointer("out");
        }
        match petz_dual(&channel.0, &reference.0) {
            Ok(c) => give_handle(petz_channel(c), out),
            Err(e) => fail(&e),
        }
    })
}

/// Releases a channel handle. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn petz_channel_free(channel: *mut petz_channel) {
    if !channel.is_null() {
        drop(unsafe { Box::from_raw(channel) });
    }
}

/// Parses a `tripartite_state` JSON document into a new handle.
#[no_mangle]
pub unsafe extern "C" fn petz_tripartite_parse(
    json: *const c_char,
    out: *mut *mut petz_tripartite,
) -> petz_status {
    guarded(|| {
        if out.is_null() {
            return null_pointer("out");
        }
        let text = match unsafe { utf8_arg(json, "json") } {
            Ok(t) => t,
            Err(status) => return status,
        };
        match io::parse_document(text).and_then(Document::into_tripartite) {
            Ok(s) => give_handle(petz_tripartite(s), out),
            Err(e) => fail(&e),
        }
    })
}

/// Builds a tripartite state on A ⊗ B ⊗ C from a row-major interleaved
/// buffer of `2*(dim_a*dim_b*dim_c)²` doubles.
#[no_mangle]
pub unsafe extern "C" fn petz_tripartite_new(
    dim_a: usize,
    dim_b: usize,
    dim_c: usize,
    data: *const f64,
    out: *mut *mut petz_tripartite,
) -> petz_status {
    guarded(|| {
        if out.is_null() {
            return null_pointer("out");
        }
        if data.is_null() {
            return null_pointer("data");
        }
        if dim_a == 0 || dim_b == 0 || dim_c == 0 {
            set_error("all three leg dimensions must be positive");
            return PETZ_INVALID_INPUT;
        }
        let n = dim_a * dim_b * dim_c;
        let built = DensityMatrix::new(unsafe { matrix_from_raw(n, data) }).and_then(|d| {
            TripartiteState::new(d, SubsystemDims::new(vec![dim_a, dim_b, dim_c])?)
        });
        match built {
            Ok(s) => give_handle(petz_tripartite(s), out),
            Err(e) => fail(&e),
        }
    })
}

/// Renders the state as a `tripartite_state` JSON document.
#[no_mangle]
pub unsafe extern "C" fn petz_tripartite_to_json(
    state: *const petz_tripartite,
    out: *mut *mut c_char,
) -> petz_status {
    guarded(|| {
        let state = nonnull!(state, "state");
        if out.is_null() {
            return null_pointer("out");
        }
        match io::render_document(&Document::tripartite(&state.0)) {
            Ok(text) => give_string(text, out),
            Err(e) => fail(&e),
        }
    })
}

/// Leg dimensions of the tripartite state. Out pointers may be NULL.
#[no_mangle]
pub unsafe extern "C" fn petz_tripartite_dims(
    state: *const petz_tripartite,
    dim_a: *mut usize,
    dim_b: *mut usize,
    dim_c: *mut usize,
) -> petz_status {
    guarded(|| {
        let state = nonnull!(state, "state");
        unsafe {
            write_out(dim_a, state.0.dim_a());
            write_out(dim_b, state.0.dim_b());
            write_out(dim_c, state.0.dim_c());
        }
        PETZ_OK
    })
}

/// Releases a tripartite handle. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn petz_tripartite_free(state: *mut petz_tripartite) {
    if !state.is_null() {
        drop(unsafe { Box::from_raw(state) });
    }
}

/// Decides whether `channel` is sufficient for the pair `(state1, state2)`:
/// both the cocycle grid condition and the recovery round trip through the
/// Petz dual must hold within `tol` (pass 0 for the default 1e-8).
///
/// `sufficient` receives 1 or 0; `ns_max_deviation` the largest cocycle
/// deviation over the default t-grid; `recovery_deviation` the larger of the
/// two recovery round-trip deviations. Out pointers may be NULL.
#[no_mangle]
pub unsafe extern "C" fn petz_check(
    channel: *const petz_channel,
    state1: *const petz_state,
    state2: *const petz_state,
    tol: f64,
    sufficient: *mut c_int,
    ns_max_deviation: *mut f64,
    recovery_deviation: *mut f64,
) -> petz_status {
    guarded(|| {
        let channel = nonnull!(channel, "channel");
        let state1 = nonnull!(state1, "state1");
        let state2 = nonnull!(state2, "state2");
        let tol = match resolve_tol(tol) {
            Ok(t) => t,
            Err(status) => return status,
        };
        match check_sufficiency(&channel.0, &state1.0, &state2.0, &config(tol)) {
            Ok(rep) => {
                unsafe {
                    write_out(sufficient, c_int::from(rep.verdict));
                    write_out(ns_max_deviation, rep.ns_max_deviation);
                    write_out(recovery_deviation, rep.max_recovery_deviation());
                }
                PETZ_OK
            }
            Err(e) => fail(&e),
        }
    })
}

/// Like [`petz_check`], but returns the full JSON report through `json`
/// (the same document the command-line tool prints for `check --json`).
#[no_mangle]
pub unsafe extern "C" fn petz_check_report_json(
    channel: *const petz_channel,
    state1: *const petz_state,
    state2: *const petz_state,
    tol: f64,
    sufficient: *mut c_int,
    json: *mut *mut c_char,
) -> petz_status {
    guarded(|| {
        let channel = nonnull!(channel, "channel");
        let state1 = nonnull!(state1, "state1");
        let state2 = nonnull!(state2, "state2");
        if json.is_null() {
            return null_pointer("json");
        }
        let tol = match resolve_tol(tol) {
            Ok(t) => t,
            Err(status) => return status,
        };
        let rep = match check_sufficiency(&channel.0, &state1.0, &state2.0, &config(tol)) {
            Ok(rep) => rep,
            Err(e) => return fail(&e),
        };
        unsafe { write_out(sufficient, c_int::from(rep.verdict)) };
        let report = CheckReport::from_run("check", &channel.0, &rep, None);
        match render_json(&report) {
            Ok(text) => give_string(text, json),
            Err(e) => fail(&e),
        }
    })
}

/// Runs the sufficiency check and, when it passes, extracts the block
/// decomposition of the channel outputs and pulls it back through the
/// recovery map, returning the structure report as JSON. When the check
/// fails, `sufficient` receives 0 and `json` the failed check report
/// instead. With `emit_factors` nonzero, the per-block factor matrices are
/// embedded in the report.
#[no_mangle]
pub unsafe extern "C" fn petz_structure_report_json(
    channel: *const petz_channel,
    state1: *const petz_state,
    state2: *const petz_state,
    tol: f64,
    emit_factors: c_int,
    sufficient: *mut c_int,
    json: *mut *mut c_char,
) -> petz_status {
    guarded(|| {
        let channel = nonnull!(channel, "channel");
        let state1 = nonnull!(state1, "state1");
        let state2 = nonnull!(state2, "state2");
        if json.is_null() {
            return null_pointer("json");
        }
        let tol = match resolve_tol(tol) {
            Ok(t) => t,
            Err(status) => return status,
        };
        let cfg = config(tol);
        let rep = match check_sufficiency(&channel.0, &state1.0, &state2.0, &cfg) {
            Ok(rep) => rep,
            Err(e) => return fail(&e),
        };
        unsafe { write_out(sufficient, c_int::from(rep.verdict)) };
        let rendered = if rep.verdict {
            structure_report(
                &channel.0,
                &state1.0,
                &state2.0,
                &cfg,
                &rep,
                emit_factors != 0,
                None,
            )
            .and_then(|report| render_json(&report))
        } else {
            render_json(&CheckReport::from_run("structure", &channel.0, &rep, None))
        };
        match rendered {
            Ok(text) => give_string(text, json),
            Err(e) => fail(&e),
        }
    })
}

/// Strong-subadditivity gap `S(AB) + S(BC) − S(ABC) − S(B)` in nats.
/// `equality` receives 1 when the gap is below `tol` (0 for the default).
/// Out pointers may be NULL.
#[no_mangle]
pub unsafe extern "C" fn petz_ssa(
    state: *const petz_tripartite,
    tol: f64,
    gap: *mut f64,
    equality: *mut c_int,
) -> petz_status {
    guarded(|| {
        let state = nonnull!(state, "state");
        let tol = match resolve_tol(tol) {
            Ok(t) => t,
            Err(status) => return status,
        };
        match ssa_gap(&state.0) {
            Ok(value) => {
                unsafe {
                    write_out(gap, value);
                    write_out(equality, c_int::from(value < tol));
                }
                PETZ_OK
            }
            Err(e) => fail(&e),
        }
    })
}

/// Full strong-subadditivity report as JSON (the same document the
/// command-line tool prints for `ssa --json`). With `with_structure`
/// nonzero and the gap below `tol`, the Markov decomposition is embedded.
/// With `bits` nonzero the displayed entropies are converted to bits; the
/// tolerance and the verdict stay in nats.
#[no_mangle]
pub unsafe extern "C" fn petz_ssa_report_json(
    state: *const petz_tripartite,
    tol: f64,
    with_structure: c_int,
    bits: c_int,
    equality: *mut c_int,
    json: *mut *mut c_char,
) -> petz_status {
    guarded(|| {
        let state = nonnull!(state, "state");
        if json.is_null() {
            return null_pointer("json");
        }
        let tol = match resolve_tol(tol) {
            Ok(t) => t,
            Err(status) => return status,
        };
        match ssa_report(&state.0, tol, with_structure != 0, bits != 0, None) {
            Ok(report) => {
                unsafe { write_out(equality, c_int::from(report.equality)) };
                match render_json(&report) {
                    Ok(text) => give_string(text, json),
                    Err(e) => fail(&e),
                }
            }
            Err(e) => fail(&e),
        }
    })
}

/// Generates a tripartite state saturating strong subadditivity, with the
/// Markov blocks described by `blocks` in the form `"LxR:weight,..."`
/// (for example `"2x1:0.5,1x2:0.5"`). Weights must sum to 1.
#[no_mangle]
pub unsafe extern "C" fn petz_gen_markov(
    dim_a: usize,
    dim_c: usize,
    blocks: *const c_char,
    seed: u64,
    out: *mut *mut petz_tripartite,
) -> petz_status {
    guarded(|| {
        if out.is_null() {
            return null_pointer("out");
        }
        let blocks = match unsafe { utf8_arg(blocks, "blocks") } {
            Ok(t) => t,
            Err(status) => return status,
        };
        let built = io::parse_markov_blocks(blocks)
            .and_then(|blocks| build_markov_state(&MarkovSpec { dim_a, dim_c, blocks, seed }));
        match built {
            Ok(synth) => give_handle(petz_tripartite(synth.state), out),
            Err(e) => fail(&e),
        }
    })
}

/// Generates a channel together with two states for which it is sufficient.
/// `blocks` lists the block shapes as `"d,m:d,m:..."` (for example
/// `"2,2:1,3"`); `l1` and `l2` are the per-block weights of the two states,
/// each a comma-separated list summing to 1. `env_dim` of 0 selects the
/// default environment dimension 2.
#[no_mangle]
pub unsafe extern "C" fn petz_gen_sufficient(
    blocks: *const c_char,
    l1: *const c_char,
    l2: *const c_char,
    env_dim: usize,
    seed: u64,
    channel: *mut *mut petz_channel,
    state1: *mut *mut petz_state,
    state2: *mut *mut petz_state,
) -> petz_status {
    guarded(|| {
        if channel.is_null() {
            return null_pointer("channel");
        }
        if state1.is_null() {
            return null_pointer("state1");
        }
        if state2.is_null() {
            return null_pointer("state2");
        }
        let blocks = match unsafe { utf8_arg(blocks, "blocks") } {
            Ok(t) => t,
            Err(status) => return status,
        };
        let l1 = match unsafe { utf8_arg(l1, "l1") } {
            Ok(t) => t,
            Err(status) => return status,
        };
        let l2 = match unsafe { utf8_arg(l2, "l2") } {
            Ok(t) => t,
            Err(status) => return status,
        };
        let built = (|| {
            let spec = SyntheticSpec {
                blocks: io::parse_shape_blocks(blocks)?,
                weights: vec![
                    io::parse_weight_list(l1, "state-1 weight")?,
                    io::parse_weight_list(l2, "state-2 weight")?,
                ],
                env_dim: if env_dim == 0 { 2 } else { env_dim },
                seed,
                mismatched_r: false,
            };
            synthesize_sufficient_instance(&spec)
        })();
        match built {
            Ok(mut instance) => {
                let d2 = instance.states.pop().expect("two states");
                let d1 = instance.states.pop().expect("two states");
                unsafe {
                    write_out(channel, Box::into_raw(Box::new(petz_channel(instance.channel))));
                    write_out(state1, Box::into_raw(Box::new(petz_state(d1))));
                    write_out(state2, Box::into_raw(Box::new(petz_state(d2))));
                }
                PETZ_OK
            }
            Err(e) => fail(&e),
        }
    })
}
