use std::ffi::{c_char, c_int, c_void, CStr};
use std::path::Path;
use std::process::Command;
use std::ptr;

use tagscope_ffi::*;

const TAG: usize = 16;

/// A toy external cipher: ct = pt XOR k[0], tag = k[0..16] XOR npub[0..16].
unsafe extern "C" fn toy_encrypt(
    ctx: *mut c_void,
    c: *mut u8,
    clen: *mut u64,
    m: *const u8,
    mlen: u64,
    _ad: *const u8,
    _adlen: u64,
    _nsec: *const u8,
    npub: *const u8,
    k: *const u8,
) -> c_int {
    assert_eq!(*(ctx as *const u32), 0xC0FFEE);
    for i in 0..mlen as usize {
        *c.add(i) = *m.add(i) ^ *k;
    }
    for i in 0..TAG {
        *c.add(mlen as usize + i) = *k.add(i) ^ *npub.add(i);
    }
    *clen = mlen + TAG as u64;
    0
}

unsafe extern "C" fn toy_decrypt(
    _ctx: *mut c_void,
    m: *mut u8,
    mlen: *mut u64,
    _nsec: *mut u8,
    c: *const u8,
    clen: u64,
    _ad: *const u8,
    _adlen: u64,
    npub: *const u8,
    k: *const u8,
) -> c_int {
    let n = clen as usize - TAG;
    for i in 0..TAG {
        if *c.add(n + i) != *k.add(i) ^ *npub.add(i) {
            return -1;
        }
    }
    for i in 0..n {
        *m.add(i) = *c.add(i) ^ *k;
    }
    *mlen = n as u64;
    0
}

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    unsafe {
        ts_last_error(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

static CTX: u32 = 0xC0FFEE;

fn with_toy() -> *mut TsRegistry {
    let reg = ts_registry_new();
    let status = unsafe {
        ts_registry_register(
            reg,
            c"toy".as_ptr(),
            16,
            16,
            0,
            16,
            Some(toy_encrypt),
            Some(toy_decrypt),
            &CTX as *const u32 as *mut c_void,
        )
    };
    assert_eq!(status, TsStatus::Ok, "{}", last_error());
    reg
}

#[test]
fn builtin_encrypt_matches_known_answer() {
    let reg = ts_registry_new();
    let mut out = [0u8; 32];
    let mut len = 0usize;
    let status = unsafe {
        ts_encrypt(
            reg,
            c"aes128gcm".as_ptr(),
            [0u8; 16].as_ptr(),
            16,
            [0u8; 12].as_ptr(),
            12,
            ptr::null(),
            0,
            [0u8; 16].as_ptr(),
            16,
            out.as_mut_ptr(),
            out.len(),
            &mut len,
        )
    };
    assert_eq!(status, TsStatus::Ok);
    assert_eq!(len, 32);
    assert_eq!(
        out.iter().map(|b| format!("{b:02x}")).collect::<String>(),
        "0388dace60b6a392f328c2b971b2fe78ab6e47d42cec13bdf53a67b21257bddf"
    );
    unsafe { ts_registry_free(reg) };
}

#[test]
fn external_cipher_roundtrips_and_streams() {
    let reg = with_toy();
    let mut passed: c_int = 0;
    let status = unsafe { ts_roundtrip_check(reg, c"toy".as_ptr(), 100, 7, &mut passed) };
    assert_eq!(status, TsStatus::Ok);
    assert_eq!(passed, 1);

    let mut tag_len = 0usize;
    assert_eq!(
        unsafe { ts_cipher_tag_len(reg, c"toy".as_ptr(), &mut tag_len) },
        TsStatus::Ok
    );
    assert_eq!(tag_len, 16);

    // Zero PMN: every tag equals the key.
    let mut buf = vec![0u8; 4 * 16];
    let mut len = 0usize;
    let status = unsafe {
        ts_generate_stream(
            reg,
            c"toy".as_ptr(),
            TsPmnMode::Zero,
            4,
            1,
            buf.as_mut_ptr(),
            buf.len(),
            &mut len,
        )
    };
    assert_eq!(status, TsStatus::Ok);
    assert_eq!(len, 64);
    assert!(buf.chunks(16).all(|t| t == &buf[..16]));
    unsafe { ts_registry_free(reg) };
}

#[test]
fn error_codes() {
    let reg = with_toy();
    let dup = unsafe {
        ts_registry_register(
            reg,
            c"toy".as_ptr(),
            16,
            16,
            0,
            16,
            Some(toy_encrypt),
            Some(toy_decrypt),
            ptr::null_mut(),
        )
    };
    assert_eq!(dup, TsStatus::DuplicateCipher);
    assert!(last_error().contains("toy"));

    let bad_tag = unsafe {
        ts_registry_register(
            reg,
            c"odd".as_ptr(),
            16,
            16,
            0,
            5,
            Some(toy_encrypt),
            Some(toy_decrypt),
            ptr::null_mut(),
        )
    };
    assert_eq!(bad_tag, TsStatus::InvalidConfig);
    let no_cb = unsafe {
        ts_registry_register(
            reg,
            c"nocb".as_ptr(),
            16,
            16,
            0,
            16,
            None,
            None,
            ptr::null_mut(),
        )
    };
    assert_eq!(no_cb, TsStatus::NullPointer);

    let mut len = 0usize;
    let unknown = unsafe {
        ts_generate_stream(
            reg,
            c"missing".as_ptr(),
            TsPmnMode::Zero,
            1,
            1,
            ptr::null_mut(),
            0,
            &mut len,
        )
    };
    assert_eq!(unknown, TsStatus::UnknownCipher);

    let small = unsafe {
        ts_generate_stream(
            reg,
            c"toy".as_ptr(),
            TsPmnMode::Zero,
            2,
            1,
            ptr::null_mut(),
            0,
            &mut len,
        )
    };
    assert_eq!(small, TsStatus::BufferTooSmall);
    assert_eq!(len, 32);

    let mismatch = unsafe {
        ts_encrypt(
            reg,
            c"aes128gcm".as_ptr(),
            [0u8; 15].as_ptr(),
            15,
            [0u8; 12].as_ptr(),
            12,
            ptr::null(),
            0,
            ptr::null(),
            0,
            ptr::null_mut(),
            0,
            &mut len,
        )
    };
    assert_eq!(mismatch, TsStatus::LengthMismatch);
    assert_eq!(
        unsafe { ts_cipher_tag_len(ptr::null(), c"toy".as_ptr(), &mut len) },
        TsStatus::NullPointer
    );
    unsafe { ts_registry_free(reg) };
}

#[test]
fn battery_through_handles() {
    let reg = ts_registry_new();
    let tags = 20 * 10_000 / 128 + 1;
    let mut buf = vec![0u8; tags * 16];
    let mut len = 0usize;
    let status = unsafe {
        ts_generate_stream(
            reg,
            c"xortag".as_ptr(),
            TsPmnMode::Zero,
            tags,
            3,
            buf.as_mut_ptr(),
            buf.len(),
            &mut len,
        )
    };
    assert_eq!(status, TsStatus::Ok);

    let mut report: *mut TsBatteryReport = ptr::null_mut();
    let status = unsafe { ts_battery_run(buf.as_ptr(), len, 10_000, 20, 0.01, &mut report) };
    assert_eq!(status, TsStatus::Ok, "{}", last_error());
    unsafe {
        assert_eq!(ts_battery_report_verdict(report), TsVerdict::Reject);
        assert_eq!(ts_battery_report_tests_run(report), 10);
        assert!(ts_battery_report_tests_passed(report) < 10);
        let mut json_len = 0usize;
        assert_eq!(
            ts_battery_report_json(report, ptr::null_mut(), 0, &mut json_len),
            TsStatus::BufferTooSmall
        );
        let mut json = vec![0u8; json_len];
        assert_eq!(
            ts_battery_report_json(report, json.as_mut_ptr(), json.len(), &mut json_len),
            TsStatus::Ok
        );
        assert!(String::from_utf8(json)
            .unwrap()
            .contains("\"verdict\": \"REJECT\""));
        ts_battery_report_free(report);
    }

    let mut report: *mut TsBatteryReport = ptr::null_mut();
    let status = unsafe { ts_battery_run(buf.as_ptr(), 100, 10_000, 20, 0.01, &mut report) };
    assert_eq!(status, TsStatus::InsufficientData);
    assert!(report.is_null());
    unsafe { ts_registry_free(reg) };
}

#[test]
fn version_is_static_string() {
    let v = unsafe { CStr::from_ptr(ts_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_api_and_compiles() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/tagscope.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "ts_registry_new",
        "ts_registry_register",
        "ts_generate_stream",
        "ts_battery_run",
        "ts_battery_report_free",
        "TS_STATUS_AUTH_FAILURE",
        "typedef struct TsRegistry TsRegistry",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }
    // Syntax-check the header as C when a compiler is around.
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("check.c");
    std::fs::write(
        &src,
        "#include \"tagscope.h\"\nint main(void) { TsRegistry *r = ts_registry_new(); ts_registry_free(r); return 0; }\n",
    )
    .unwrap();
    let include = format!("-I{}", header.parent().unwrap().display());
    match Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", &include])
        .arg(&src)
        .output()
    {
        Ok(out) => assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        ),
        Err(_) => eprintln!("no C compiler; skipped header compile"),
    }
}
