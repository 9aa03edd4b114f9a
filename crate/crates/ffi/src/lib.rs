//! C ABI for locality-codes.
//!
//! Objects are opaque handles created by `lc_*_new` / `lc_instance_from_json`
//! and released with the matching `lc_*_free`. Every fallible call returns an
//! [`LcStatus`]; on failure a description is kept per thread and can be read
//! with [`lc_last_error`]. Strings returned by the library must be released
//! with [`lc_string_free`].
//!
//! Field elements cross the boundary as `uint32_t` bit patterns. Codeword
//! symbols of an instance are serialized as `lc_instance_symbol_bytes()`
//! bytes each: every field element little-endian in ceil(k/8) bytes.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use locality_codes::cli::{build_instance, instance_document, parse_config, CliError, Instance, Suite};
use locality_codes::code_api::write_csv;
use locality_codes::{CodeError, Field, FieldElement, RsCode};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DecodeFailure = 3,
    CorrectFailure = 4,
    Infeasible = 5,
    Unsupported = 6,
    /// Malformed JSON config.
    Schema = 7,
    /// An experiment suite assertion failed; the CSV is still produced.
    Assertion = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

/// Experiment suites; pass the value to [`lc_instance_run_suite`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LcSuite {
    Completeness = 0,
    LccContract = 1,
    QueryAudit = 2,
}

/// A binary extension field GF(2^k).
pub struct LcField {
    field: Field,
}

/// A Reed-Solomon code over evaluation points 0, 1, ... in enumeration order.
pub struct LcRsCode {
    code: RsCode,
}

/// Any code built from a JSON instance config.
pub struct LcInstance {
    inner: Box<dyn Instance>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

fn fail(status: LcStatus, msg: impl Into<String>) -> LcStatus {
    set_error(msg);
    status
}

fn code_status(e: &CodeError) -> LcStatus {
    match e {
        CodeError::InvalidArgument(_) => LcStatus::InvalidArgument,
        CodeError::DecodeFailure => LcStatus::DecodeFailure,
        CodeError::CorrectFailure(_) => LcStatus::CorrectFailure,
        CodeError::Infeasible(_) => LcStatus::Infeasible,
        CodeError::Unsupported(_) => LcStatus::Unsupported,
    }
}

fn from_code(e: CodeError) -> LcStatus {
    fail(code_status(&e), e.to_string())
}

fn from_cli(e: CliError) -> LcStatus {
    let status = match &e {
        CliError::Schema(_) | CliError::Io(_) => LcStatus::Schema,
        CliError::Infeasible(_) => LcStatus::Infeasible,
        CliError::Assertion(_) => LcStatus::Assertion,
    };
    fail(status, e.to_string())
}

/// Runs `f`, turning a panic into `LcStatus::Panic`.
fn guard(f: impl FnOnce() -> LcStatus) -> LcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(LcStatus::Panic, msg)
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize) -> Option<&'a [T]> {
    if len == 0 {
        return Some(&[]);
    }
    if p.is_null() {
        return None;
    }
    Some(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize) -> Option<&'a mut [T]> {
    if len == 0 {
        return Some(&mut []);
    }
    if p.is_null() {
        return None;
    }
    Some(std::slice::from_raw_parts_mut(p, len))
}

fn into_c_string(s: String, out: *mut *mut c_char) -> LcStatus {
    match CString::new(s) {
        Ok(c) => {
            unsafe { *out = c.into_raw() };
            LcStatus::Ok
        }
        Err(_) => fail(LcStatus::InvalidArgument, "string contains a NUL byte"),
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// The message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn lc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn lc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Creates GF(2^k) with the built-in modulus, 1 <= k <= 32.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lc_field_new(k: u32, out: *mut *mut LcField) -> LcStatus {
    guard(|| {
        if out.is_null() {
            return fail(LcStatus::NullPointer, "out is NULL");
        }
        match Field::new(k) {
            Ok(field) => {
                *out = Box::into_raw(Box::new(LcField { field }));
                LcStatus::Ok
            }
            Err(e) => from_code(e),
        }
    })
}

/// # Safety
/// `f` must be NULL or a handle from `lc_field_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lc_field_free(f: *mut LcField) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Field order 2^k, or 0 for a NULL handle.
///
/// # Safety
/// `f` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lc_field_order(f: *const LcField) -> u64 {
    f.as_ref().map_or(0, |f| f.field.order())
}

/// # Safety
/// `f` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn lc_field_mul(f: *const LcField, a: u32, b: u32, out: *mut u32) -> LcStatus {
    guard(|| {
        let (Some(f), false) = (f.as_ref(), out.is_null()) else {
            return fail(LcStatus::NullPointer, "NULL argument");
        };
        match (f.field.element(a), f.field.element(b)) {
            (Ok(x), Ok(y)) => {
                *out = f.field.mul(x, y).bits();
                LcStatus::Ok
            }
            (Err(e), _) | (_, Err(e)) => from_code(e),
        }
    })
}

/// Multiplicative inverse; zero has none.
///
/// # Safety
/// `f` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn lc_field_inv(f: *const LcField, a: u32, out: *mut u32) -> LcStatus {
    guard(|| {
        let (Some(f), false) = (f.as_ref(), out.is_null()) else {
            return fail(LcStatus::NullPointer, "NULL argument");
        };
        match f.field.element(a) {
            Ok(x) if x.is_zero() => fail(LcStatus::InvalidArgument, "zero has no inverse"),
            Ok(x) => {
                *out = f.field.inv(x).bits();
                LcStatus::Ok
            }
            Err(e) => from_code(e),
        }
    })
}

/// RS_{k,n} over GF(2^field_k).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lc_rs_new(field_k: u32, n: usize, k: usize, out: *mut *mut LcRsCode) -> LcStatus {
    guard(|| {
        if out.is_null() {
            return fail(LcStatus::NullPointer, "out is NULL");
        }
        match Field::new(field_k).and_then(|f| RsCode::new(&f, n, k)) {
            Ok(code) => {
                *out = Box::into_raw(Box::new(LcRsCode { code }));
                LcStatus::Ok
            }
            Err(e) => from_code(e),
        }
    })
}

/// # Safety
/// `c` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lc_rs_free(c: *mut LcRsCode) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Encodes `k` message elements into `n` codeword elements.
///
/// # Safety
/// `msg` must hold `msg_len` elements and `out` room for `out_len`.
#[no_mangle]
pub unsafe extern "C" fn lc_rs_encode(
    c: *const LcRsCode,
    msg: *const u32,
    msg_len: usize,
    out: *mut u32,
    out_len: usize,
) -> LcStatus {
    guard(|| {
        let (Some(c), Some(msg), Some(out)) = (c.as_ref(), slice(msg, msg_len), slice_mut(out, out_len)) else {
            return fail(LcStatus::NullPointer, "NULL argument");
        };
        if out.len() < c.code.n() {
            return fail(LcStatus::BufferTooSmall, format!("need {} output elements", c.code.n()));
        }
        let f = c.code.field();
        let m: Result<Vec<FieldElement>, _> = msg.iter().map(|&b| f.element(b)).collect();
        match m.and_then(|m| c.code.encode(&m)) {
            Ok(cw) => {
                for (o, x) in out.iter_mut().zip(cw) {
                    *o = x.bits();
                }
                LcStatus::Ok
            }
            Err(e) => from_code(e),
        }
    })
}

/// Unique decoding of `n` received elements into `k` message elements.
/// Returns `DecodeFailure` when no codeword is within (n-k)/2.
///
/// # Safety
/// `received` must hold `len` elements and `msg_out` room for `msg_len`.
#[no_mangle]
pub unsafe extern "C" fn lc_rs_decode(
    c: *const LcRsCode,
    received: *const u32,
    len: usize,
    msg_out: *mut u32,
    msg_len: usize,
) -> LcStatus {
    guard(|| {
        let (Some(c), Some(rx), Some(out)) = (c.as_ref(), slice(received, len), slice_mut(msg_out, msg_len)) else {
            return fail(LcStatus::NullPointer, "NULL argument");
        };
        if out.len() < c.code.k() {
            return fail(LcStatus::BufferTooSmall, format!("need {} output elements", c.code.k()));
        }
        let f = c.code.field();
        let w: Result<Vec<FieldElement>, _> = rx.iter().map(|&b| f.element(b)).collect();
        match w.and_then(|w| c.code.decode_unique(&w)) {
            Ok(m) => {
                for (o, x) in out.iter_mut().zip(m) {
                    *o = x.bits();
                }
                LcStatus::Ok
            }
            Err(e) => from_code(e),
        }
    })
}

/// Builds any code from a JSON instance config (the CLI `build` schema).
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lc_instance_from_json(json: *const c_char, out: *mut *mut LcInstance) -> LcStatus {
    guard(|| {
        if json.is_null() || out.is_null() {
            return fail(LcStatus::NullPointer, "NULL argument");
        }
        let Ok(text) = CStr::from_ptr(json).to_str() else {
            return fail(LcStatus::Schema, "config is not UTF-8");
        };
        match parse_config(text).and_then(|c| build_instance(&c)) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(LcInstance { inner }));
                LcStatus::Ok
            }
            Err(e) => from_cli(e),
        }
    })
}

/// # Safety
/// `i` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lc_instance_free(i: *mut LcInstance) {
    if !i.is_null() {
        drop(Box::from_raw(i));
    }
}

/// Block length n, or 0 for NULL.
///
/// # Safety
/// `i` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lc_instance_block_length(i: *const LcInstance) -> usize {
    i.as_ref().map_or(0, |i| i.inner.block_length())
}

/// Number of message elements, or 0 for NULL.
///
/// # Safety
/// `i` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lc_instance_message_len(i: *const LcInstance) -> usize {
    i.as_ref().map_or(0, |i| i.inner.message_len())
}

/// Bytes per serialized codeword symbol, or 0 for NULL.
///
/// # Safety
/// `i` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lc_instance_symbol_bytes(i: *const LcInstance) -> usize {
    i.as_ref().map_or(0, |i| i.inner.symbol_bytes())
}

/// Summary and certification artifacts as a JSON document; release with
/// `lc_string_free`.
///
/// # Safety
/// `i` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn lc_instance_describe(i: *const LcInstance, out: *mut *mut c_char) -> LcStatus {
    guard(|| {
        let (Some(i), false) = (i.as_ref(), out.is_null()) else {
            return fail(LcStatus::NullPointer, "NULL argument");
        };
        let doc = serde_json::json!({
            "summary": i.inner.summary(),
            "artifacts": i.inner.artifacts(),
        });
        into_c_string(doc.to_string(), out)
    })
}

/// Encodes a message into `block_length * symbol_bytes` bytes.
///
/// # Safety
/// `msg` must hold `msg_len` elements and `out` room for `out_len` bytes.
#[no_mangle]
pub unsafe extern "C" fn lc_instance_encode(
    i: *const LcInstance,
    msg: *const u32,
    msg_len: usize,
    out: *mut u8,
    out_len: usize,
) -> LcStatus {
    guard(|| {
        let (Some(i), Some(msg), Some(out)) = (i.as_ref(), slice(msg, msg_len), slice_mut(out, out_len)) else {
            return fail(LcStatus::NullPointer, "NULL argument");
        };
        let need = i.inner.block_length() * i.inner.symbol_bytes();
        if out.len() < need {
            return fail(LcStatus::BufferTooSmall, format!("need {need} output bytes"));
        }
        match i.inner.encode_bytes(msg) {
            Ok(cw) => {
                out[..cw.len()].copy_from_slice(&cw);
                LcStatus::Ok
            }
            Err(e) => from_code(e),
        }
    })
}

/// Locally corrects symbol `index` of a serialized word. The corrected
/// symbol goes to `symbol_out` and the number of queries to `queries_out`
/// (which may be NULL). `CorrectFailure` is an ordinary outcome.
///
/// # Safety
/// `word` must hold `word_len` bytes and `symbol_out` room for `symbol_len`.
#[no_mangle]
pub unsafe extern "C" fn lc_instance_local_correct(
    i: *const LcInstance,
    word: *const u8,
    word_len: usize,
    index: usize,
    seed: u64,
    symbol_out: *mut u8,
    symbol_len: usize,
    queries_out: *mut u64,
) -> LcStatus {
    guard(|| {
        let (Some(i), Some(word), Some(out)) = (i.as_ref(), slice(word, word_len), slice_mut(symbol_out, symbol_len))
        else {
            return fail(LcStatus::NullPointer, "NULL argument");
        };
        if out.len() < i.inner.symbol_bytes() {
            return fail(LcStatus::BufferTooSmall, format!("need {} symbol bytes", i.inner.symbol_bytes()));
        }
        match i.inner.correct_bytes(word, index, seed) {
            Ok((sym, q)) => {
                out[..sym.len()].copy_from_slice(&sym);
                if !queries_out.is_null() {
                    *queries_out = q;
                }
                LcStatus::Ok
            }
            Err(e) => from_code(e),
        }
    })
}

/// One run of the local tester; `*accept` is 1 on accept and 0 on reject.
///
/// # Safety
/// `word` must hold `word_len` bytes and `accept` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lc_instance_local_test(
    i: *const LcInstance,
    word: *const u8,
    word_len: usize,
    seed: u64,
    accept: *mut i32,
) -> LcStatus {
    guard(|| {
        let (Some(i), Some(word), false) = (i.as_ref(), slice(word, word_len), accept.is_null()) else {
            return fail(LcStatus::NullPointer, "NULL argument");
        };
        match i.inner.test_bytes(word, seed) {
            Ok(a) => {
                *accept = i32::from(a);
                LcStatus::Ok
            }
            Err(e) => from_code(e),
        }
    })
}

/// Runs an experiment suite (an `LcSuite` value) and returns its CSV in `*csv_out` (release with
/// `lc_string_free`). Returns `Assertion` when a row fails; the CSV is
/// produced either way.
///
/// # Safety
/// `i` and `csv_out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn lc_instance_run_suite(
    i: *const LcInstance,
    suite: i32,
    trials: usize,
    seed: u64,
    csv_out: *mut *mut c_char,
) -> LcStatus {
    guard(|| {
        let (Some(i), false) = (i.as_ref(), csv_out.is_null()) else {
            return fail(LcStatus::NullPointer, "NULL argument");
        };
        let suite = match suite {
            x if x == LcSuite::Completeness as i32 => Suite::Completeness,
            x if x == LcSuite::LccContract as i32 => Suite::LccContract,
            x if x == LcSuite::QueryAudit as i32 => Suite::QueryAudit,
            x => return fail(LcStatus::InvalidArgument, format!("unknown suite {x}")),
        };
        let result = match i.inner.run_suite(suite, trials, seed) {
            Ok(r) => r,
            Err(e) => return from_cli(e),
        };
        let mut buf = Vec::new();
        if let Err(e) = write_csv(&result.rows, &mut buf) {
            return fail(LcStatus::InvalidArgument, e.to_string());
        }
        let status = into_c_string(String::from_utf8_lossy(&buf).into_owned(), csv_out);
        match result.failures.first() {
            Some(f) if status == LcStatus::Ok => fail(LcStatus::Assertion, f.clone()),
            _ => status,
        }
    })
}

/// The full instance file (config, summary, artifacts) for a JSON config, as
/// the CLI `build` command writes it.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lc_instance_document(json: *const c_char, out: *mut *mut c_char) -> LcStatus {
    guard(|| {
        if json.is_null() || out.is_null() {
            return fail(LcStatus::NullPointer, "NULL argument");
        }
        let Ok(text) = CStr::from_ptr(json).to_str() else {
            return fail(LcStatus::Schema, "config is not UTF-8");
        };
        let config = match parse_config(text) {
            Ok(c) => c,
            Err(e) => return from_cli(e),
        };
        match build_instance(&config) {
            Ok(inst) => into_c_string(instance_document(&config, inst.as_ref()).to_string(), out),
            Err(e) => from_cli(e),
        }
    })
}
