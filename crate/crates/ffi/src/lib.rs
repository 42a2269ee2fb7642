//! C ABI for tagscope.
//!
//! Handles are opaque pointers created by `*_new`/`*_run` functions and
//! released with the matching `*_free`. Every fallible call returns a
//! [`TsStatus`]; on failure [`ts_last_error`] describes the most recent
//! error on the calling thread.
//!
//! External ciphers plug in through SUPERCOP-shaped callbacks with an extra
//! leading context pointer.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, c_void, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;
use std::sync::Arc;

use tagscope::aead::{
    encrypt, roundtrip_check, Aead, AeadInputs, CheckOutcome, CipherSpec, Registry,
};
use tagscope::stats::{run_battery, BatteryConfig, BatteryReport, Verdict};
use tagscope::stream::{generate_stream, PmnMode, StreamConfig};
use tagscope::Error;

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    LengthMismatch = 3,
    AuthFailure = 4,
    UnknownCipher = 5,
    DuplicateCipher = 6,
    InsufficientData = 7,
    InvalidConfig = 8,
    BufferTooSmall = 9,
    Io = 10,
    Internal = 11,
    Panic = 12,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TsPmnMode {
    Zero = 0,
    Counter = 1,
    Random = 2,
}

impl From<TsPmnMode> for PmnMode {
    fn from(m: TsPmnMode) -> Self {
        match m {
            TsPmnMode::Zero => PmnMode::Zero,
            TsPmnMode::Counter => PmnMode::Counter,
            TsPmnMode::Random => PmnMode::Random,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TsVerdict {
    Pass = 0,
    Reject = 1,
}

/// `crypto_aead_encrypt` with a leading context pointer. Writes
/// `mlen + tag_len` bytes to `c` and their count to `clen`; returns 0 on
/// success.
pub type TsEncryptFn = Option<
    unsafe extern "C" fn(
        ctx: *mut c_void,
        c: *mut u8,
        clen: *mut u64,
        m: *const u8,
        mlen: u64,
        ad: *const u8,
        adlen: u64,
        nsec: *const u8,
        npub: *const u8,
        k: *const u8,
    ) -> c_int,
>;

/// `crypto_aead_decrypt` with a leading context pointer. Returns 0 when the
/// tag verifies, nonzero otherwise.
pub type TsDecryptFn = Option<
    unsafe extern "C" fn(
        ctx: *mut c_void,
        m: *mut u8,
        mlen: *mut u64,
        nsec: *mut u8,
        c: *const u8,
        clen: u64,
        ad: *const u8,
        adlen: u64,
        npub: *const u8,
        k: *const u8,
    ) -> c_int,
>;

type EncryptCallback = <TsEncryptFn as IntoIterator>::Item;
type DecryptCallback = <TsDecryptFn as IntoIterator>::Item;

/// Opaque cipher registry.
pub struct TsRegistry {
    inner: Registry,
}

/// Opaque battery report.
pub struct TsBatteryReport {
    inner: BatteryReport,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &Error) -> TsStatus {
    match err {
        Error::LengthMismatch { .. } => TsStatus::LengthMismatch,
        Error::AuthFailure => TsStatus::AuthFailure,
        Error::UnknownCipher(_) => TsStatus::UnknownCipher,
        Error::DuplicateCipher(_) => TsStatus::DuplicateCipher,
        Error::InsufficientData { .. } => TsStatus::InsufficientData,
        Error::InvalidConfig(_) | Error::InvalidSpec(_) | Error::PlanInvalid(_) => {
            TsStatus::InvalidConfig
        }
        Error::Io(_) => TsStatus::Io,
        _ => TsStatus::Internal,
    }
}

fn fail(status: TsStatus, msg: impl Into<String>) -> TsStatus {
    set_error(msg);
    status
}

/// Runs `f`, translating errors and panics into status codes.
fn ffi_call(f: impl FnOnce() -> Result<(), TsStatus>) -> TsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TsStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(TsStatus::Panic, "panic inside tagscope"),
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, TsStatus>;
}

impl<T> OrStatus<T> for tagscope::Result<T> {
    fn or_status(self) -> Result<T, TsStatus> {
        self.map_err(|e| fail(status_of(&e), e.to_string()))
    }
}

unsafe fn bytes<'a>(p: *const u8, len: usize) -> Result<&'a [u8], TsStatus> {
    if len == 0 {
        Ok(&[])
    } else if p.is_null() {
        Err(fail(
            TsStatus::NullPointer,
            "null buffer with nonzero length",
        ))
    } else {
        Ok(slice::from_raw_parts(p, len))
    }
}

unsafe fn name_arg<'a>(p: *const c_char) -> Result<&'a str, TsStatus> {
    if p.is_null() {
        return Err(fail(TsStatus::NullPointer, "null cipher name"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(TsStatus::InvalidArgument, "cipher name is not UTF-8"))
}

unsafe fn registry_arg<'a>(p: *const TsRegistry) -> Result<&'a Registry, TsStatus> {
    p.as_ref()
        .map(|r| &r.inner)
        .ok_or_else(|| fail(TsStatus::NullPointer, "null registry"))
}

/// Copies `data` into the caller's buffer; `out_len` always receives the
/// full size so callers can retry with a larger buffer.
unsafe fn write_out(
    data: &[u8],
    out: *mut u8,
    cap: usize,
    out_len: *mut usize,
) -> Result<(), TsStatus> {
    if out_len.is_null() {
        return Err(fail(TsStatus::NullPointer, "null length pointer"));
    }
    *out_len = data.len();
    if data.len() > cap {
        return Err(fail(
            TsStatus::BufferTooSmall,
            format!("need {} bytes, buffer holds {cap}", data.len()),
        ));
    }
    if !data.is_empty() {
        if out.is_null() {
            return Err(fail(TsStatus::NullPointer, "null output buffer"));
        }
        ptr::copy_nonoverlapping(data.as_ptr(), out, data.len());
    }
    Ok(())
}

struct ExternalCipher {
    spec: CipherSpec,
    encrypt: EncryptCallback,
    decrypt: DecryptCallback,
    ctx: *mut c_void,
}

// The registering caller guarantees that the callbacks and `ctx` may be used
// from several threads at once.
unsafe impl Send for ExternalCipher {}
unsafe impl Sync for ExternalCipher {}

fn ptr_or_dangling(s: &[u8]) -> *const u8 {
    if s.is_empty() {
        ptr::NonNull::dangling().as_ptr()
    } else {
        s.as_ptr()
    }
}

impl Aead for ExternalCipher {
    fn spec(&self) -> &CipherSpec {
        &self.spec
    }

    fn seal(&self, key: &[u8], smn: &[u8], pmn: &[u8], adata: &[u8], plaintext: &[u8]) -> Vec<u8> {
        let mut out = vec![0u8; plaintext.len() + self.spec.tag_len];
        let mut clen = 0u64;
        let rc = unsafe {
            (self.encrypt)(
                self.ctx,
                out.as_mut_ptr(),
                &mut clen,
                ptr_or_dangling(plaintext),
                plaintext.len() as u64,
                ptr_or_dangling(adata),
                adata.len() as u64,
                ptr_or_dangling(smn),
                ptr_or_dangling(pmn),
                ptr_or_dangling(key),
            )
        };
        if rc != 0 {
            // An empty result fails the length check in `encrypt`.
            return Vec::new();
        }
        out.truncate(clen.min(out.len() as u64) as usize);
        out
    }

    fn open(&self, key: &[u8], smn: &[u8], pmn: &[u8], adata: &[u8], ct: &[u8]) -> Option<Vec<u8>> {
        let mut out = vec![0u8; ct.len()];
        let mut mlen = 0u64;
        let mut nsec = smn.to_vec();
        let rc = unsafe {
            (self.decrypt)(
                self.ctx,
                out.as_mut_ptr(),
                &mut mlen,
                if nsec.is_empty() {
                    ptr::NonNull::dangling().as_ptr()
                } else {
                    nsec.as_mut_ptr()
                },
                ptr_or_dangling(ct),
                ct.len() as u64,
                ptr_or_dangling(adata),
                adata.len() as u64,
                ptr_or_dangling(pmn),
                ptr_or_dangling(key),
            )
        };
        if rc != 0 {
            return None;
        }
        out.truncate(mlen.min(out.len() as u64) as usize);
        Some(out)
    }
}

/// Copies the calling thread's last error message, NUL-terminated and
/// truncated to `cap` bytes. Returns the untruncated message length.
///
/// # Safety
/// `buf` must be valid for `cap` bytes or null with `cap == 0`.
#[no_mangle]
pub unsafe extern "C" fn ts_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ts_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// New registry holding the built-in ciphers (aes128gcm, aes256gcm, prftag,
/// xortag). Free with [`ts_registry_free`].
#[no_mangle]
pub extern "C" fn ts_registry_new() -> *mut TsRegistry {
    Box::into_raw(Box::new(TsRegistry {
        inner: Registry::with_builtins(),
    }))
}

/// # Safety
/// `registry` must come from [`ts_registry_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ts_registry_free(registry: *mut TsRegistry) {
    if !registry.is_null() {
        drop(Box::from_raw(registry));
    }
}

/// Registers an external cipher under `name`. `ctx` is passed to every
/// callback and must stay valid, and safe to share across threads, until
/// the registry is freed.
///
/// # Safety
/// Pointers must be valid; the callbacks must honour the SUPERCOP contract.
#[no_mangle]
pub unsafe extern "C" fn ts_registry_register(
    registry: *mut TsRegistry,
    name: *const c_char,
    key_len: usize,
    pmn_len: usize,
    smn_len: usize,
    tag_len: usize,
    encrypt_fn: TsEncryptFn,
    decrypt_fn: TsDecryptFn,
    ctx: *mut c_void,
) -> TsStatus {
    ffi_call(|| {
        let registry = registry
            .as_mut()
            .ok_or_else(|| fail(TsStatus::NullPointer, "null registry"))?;
        let name = name_arg(name)?;
        let (Some(encrypt), Some(decrypt)) = (encrypt_fn, decrypt_fn) else {
            return Err(fail(TsStatus::NullPointer, "null cipher callback"));
        };
        let spec = CipherSpec::new(name, key_len, pmn_len, smn_len, tag_len).or_status()?;
        registry
            .inner
            .register(Arc::new(ExternalCipher {
                spec,
                encrypt,
                decrypt,
                ctx,
            }))
            .or_status()
    })
}

/// Reports the tag length of a registered cipher.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ts_cipher_tag_len(
    registry: *const TsRegistry,
    name: *const c_char,
    tag_len: *mut usize,
) -> TsStatus {
    ffi_call(|| {
        let cipher = registry_arg(registry)?.get(name_arg(name)?).or_status()?;
        if tag_len.is_null() {
            return Err(fail(TsStatus::NullPointer, "null tag_len"));
        }
        *tag_len = cipher.spec().tag_len;
        Ok(())
    })
}

/// Encrypts with a zero-length SMN and writes `ciphertext || tag`.
///
/// # Safety
/// Each buffer must be valid for its stated length.
#[no_mangle]
pub unsafe extern "C" fn ts_encrypt(
    registry: *const TsRegistry,
    name: *const c_char,
    key: *const u8,
    key_len: usize,
    pmn: *const u8,
    pmn_len: usize,
    adata: *const u8,
    adata_len: usize,
    plaintext: *const u8,
    plaintext_len: usize,
    out: *mut u8,
    out_cap: usize,
    out_len: *mut usize,
) -> TsStatus {
    ffi_call(|| {
        let cipher = registry_arg(registry)?.get(name_arg(name)?).or_status()?;
        let smn = vec![0u8; cipher.spec().smn_len];
        let inputs = AeadInputs {
            key: bytes(key, key_len)?,
            smn: &smn,
            pmn: bytes(pmn, pmn_len)?,
            adata: bytes(adata, adata_len)?,
            plaintext: bytes(plaintext, plaintext_len)?,
        };
        let output = encrypt(cipher.as_ref(), &inputs).or_status()?;
        write_out(&output.ciphertext_with_tag, out, out_cap, out_len)
    })
}

/// Encrypt/decrypt sanity check; `passed` receives 1 or 0.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ts_roundtrip_check(
    registry: *const TsRegistry,
    name: *const c_char,
    trials: usize,
    seed: u64,
    passed: *mut c_int,
) -> TsStatus {
    ffi_call(|| {
        let cipher = registry_arg(registry)?.get(name_arg(name)?).or_status()?;
        if passed.is_null() {
            return Err(fail(TsStatus::NullPointer, "null result pointer"));
        }
        if trials == 0 {
            return Err(fail(TsStatus::InvalidArgument, "trials must be at least 1"));
        }
        let outcome = roundtrip_check(cipher.as_ref(), trials, seed);
        if let CheckOutcome::Fail { trial, reason } = &outcome {
            set_error(format!("trial {trial}: {reason}"));
        }
        *passed = matches!(outcome, CheckOutcome::Pass) as c_int;
        Ok(())
    })
}

/// Writes the concatenated tags of `num_tags` encryptions
/// (`num_tags * tag_len` bytes).
///
/// # Safety
/// `out` must be valid for `out_cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn ts_generate_stream(
    registry: *const TsRegistry,
    name: *const c_char,
    mode: TsPmnMode,
    num_tags: usize,
    master_seed: u64,
    out: *mut u8,
    out_cap: usize,
    out_len: *mut usize,
) -> TsStatus {
    ffi_call(|| {
        let registry = registry_arg(registry)?;
        let config = StreamConfig::new(name_arg(name)?, mode.into(), num_tags, master_seed);
        let stream = generate_stream(registry, &config).or_status()?;
        write_out(&stream.bytes, out, out_cap, out_len)
    })
}

/// Runs the statistical battery on `seq_count` sequences of `seq_len` bits
/// taken from `data`. Free the report with [`ts_battery_report_free`].
///
/// # Safety
/// `data` must be valid for `len` bytes; `report` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ts_battery_run(
    data: *const u8,
    len: usize,
    seq_len: usize,
    seq_count: usize,
    alpha: f64,
    report: *mut *mut TsBatteryReport,
) -> TsStatus {
    ffi_call(|| {
        if report.is_null() {
            return Err(fail(TsStatus::NullPointer, "null report pointer"));
        }
        *report = ptr::null_mut();
        let config = BatteryConfig {
            alpha,
            seq_len,
            seq_count,
            ..BatteryConfig::default()
        };
        let inner = run_battery(bytes(data, len)?, &config).or_status()?;
        *report = Box::into_raw(Box::new(TsBatteryReport { inner }));
        Ok(())
    })
}

/// # Safety
/// `report` must be a live report handle.
#[no_mangle]
pub unsafe extern "C" fn ts_battery_report_verdict(report: *const TsBatteryReport) -> TsVerdict {
    match report.as_ref().map(|r| r.inner.verdict) {
        Some(Verdict::Pass) => TsVerdict::Pass,
        _ => TsVerdict::Reject,
    }
}

/// Tests that passed both the proportion and uniformity checks.
///
/// # Safety
/// `report` must be a live report handle.
#[no_mangle]
pub unsafe extern "C" fn ts_battery_report_tests_passed(report: *const TsBatteryReport) -> usize {
    report.as_ref().map_or(0, |r| r.inner.tests_passed)
}

/// # Safety
/// `report` must be a live report handle.
#[no_mangle]
pub unsafe extern "C" fn ts_battery_report_tests_run(report: *const TsBatteryReport) -> usize {
    report.as_ref().map_or(0, |r| r.inner.tests_run)
}

/// Writes the report as JSON (not NUL-terminated).
///
/// # Safety
/// `out` must be valid for `out_cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn ts_battery_report_json(
    report: *const TsBatteryReport,
    out: *mut u8,
    out_cap: usize,
    out_len: *mut usize,
) -> TsStatus {
    ffi_call(|| {
        let report = report
            .as_ref()
            .ok_or_else(|| fail(TsStatus::NullPointer, "null report"))?;
        let json = report.inner.to_json().or_status()?;
        write_out(json.as_bytes(), out, out_cap, out_len)
    })
}

/// # Safety
/// `report` must come from [`ts_battery_run`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ts_battery_report_free(report: *mut TsBatteryReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}
