use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use locality_codes_ffi::*;

fn last_error() -> String {
    let p = lc_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn field_arithmetic() {
    unsafe {
        let mut f = ptr::null_mut();
        assert_eq!(lc_field_new(8, &mut f), LcStatus::Ok);
        assert_eq!(lc_field_order(f), 256);
        let mut x = 0;
        // x * x^-1 = 1 for every nonzero element.
        for a in 1..256 {
            let mut inv = 0;
            assert_eq!(lc_field_inv(f, a, &mut inv), LcStatus::Ok);
            assert_eq!(lc_field_mul(f, a, inv, &mut x), LcStatus::Ok);
            assert_eq!(x, 1);
        }
        assert_eq!(lc_field_inv(f, 0, &mut x), LcStatus::InvalidArgument);
        assert_eq!(lc_field_mul(f, 256, 1, &mut x), LcStatus::InvalidArgument);
        assert!(last_error().contains("not an element"));
        assert_eq!(lc_field_mul(ptr::null(), 1, 1, &mut x), LcStatus::NullPointer);
        lc_field_free(f);
        lc_field_free(ptr::null_mut());
        assert_eq!(lc_field_new(0, &mut f), LcStatus::InvalidArgument);
        assert_eq!(lc_field_order(ptr::null()), 0);
    }
}

#[test]
fn rs_roundtrip_with_errors() {
    unsafe {
        let mut c = ptr::null_mut();
        assert_eq!(lc_rs_new(3, 7, 3, &mut c), LcStatus::Ok);
        let msg = [5u32, 0, 7];
        let mut cw = [0u32; 7];
        assert_eq!(lc_rs_encode(c, msg.as_ptr(), 3, cw.as_mut_ptr(), 7), LcStatus::Ok);
        let mut short = [0u32; 6];
        assert_eq!(lc_rs_encode(c, msg.as_ptr(), 3, short.as_mut_ptr(), 6), LcStatus::BufferTooSmall);
        cw[1] ^= 3;
        cw[4] ^= 1;
        let mut out = [0u32; 3];
        assert_eq!(lc_rs_decode(c, cw.as_ptr(), 7, out.as_mut_ptr(), 3), LcStatus::Ok);
        assert_eq!(out, msg);
        cw[6] ^= 2;
        cw[0] ^= 2;
        let s = lc_rs_decode(c, cw.as_ptr(), 7, out.as_mut_ptr(), 3);
        // Four errors exceed the radius: either no codeword is close, or a
        // different one is.
        assert!(s == LcStatus::DecodeFailure || out != msg);
        lc_rs_free(c);
        assert_eq!(lc_rs_new(3, 9, 3, &mut c), LcStatus::InvalidArgument);
    }
}

fn instance(json: &str) -> Result<*mut LcInstance, (LcStatus, String)> {
    let cfg = CString::new(json).unwrap();
    let mut out = ptr::null_mut();
    match unsafe { lc_instance_from_json(cfg.as_ptr(), &mut out) } {
        LcStatus::Ok => Ok(out),
        s => Err((s, last_error())),
    }
}

fn take_string(p: *mut std::ffi::c_char) -> String {
    let s = unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned();
    unsafe { lc_string_free(p) };
    s
}

#[test]
fn instance_errors_map_to_status() {
    let (s, msg) = instance(r#"{"family":"rs","field":{"k":3},"n":7,"k":3,"x":1}"#).unwrap_err();
    assert_eq!(s, LcStatus::Schema);
    assert!(msg.contains("unknown field"));
    let infeasible = r#"{"family":"amplified",
        "inner":{"family":"multiplicity","field":{"k":5},"m":2,"s":1,"d":8},
        "amplifier":{"contract":"lcc","target":0.3,"eps":0.45,
                     "sampler":{"kind":"seeded_random","degree":32,"seed":1}}}"#;
    let (s, msg) = instance(infeasible).unwrap_err();
    assert_eq!(s, LcStatus::Infeasible);
    assert!(msg.contains("2*tau + eps"));
}

#[test]
fn multiplicity_instance_corrects_through_the_abi() {
    let inst = instance(r#"{"family":"multiplicity","field":{"k":5},"m":2,"s":1,"d":8}"#).unwrap();
    unsafe {
        let n = lc_instance_block_length(inst);
        let k = lc_instance_message_len(inst);
        let sb = lc_instance_symbol_bytes(inst);
        assert_eq!((n, k, sb), (1024, 45, 1));
        let msg: Vec<u32> = (0..k as u32).map(|i| (i * 7 + 3) % 32).collect();
        let mut word = vec![0u8; n * sb];
        assert_eq!(lc_instance_encode(inst, msg.as_ptr(), k, word.as_mut_ptr(), word.len()), LcStatus::Ok);
        let clean = word.clone();
        for i in (0..n).step_by(41) {
            word[i] ^= 1;
        }
        let mut sym = [0u8; 1];
        let mut queries = 0u64;
        for (idx, seed) in [(0usize, 1u64), (41, 2), (500, 3)] {
            let s = lc_instance_local_correct(
                inst,
                word.as_ptr(),
                word.len(),
                idx,
                seed,
                sym.as_mut_ptr(),
                1,
                &mut queries,
            );
            assert_eq!(s, LcStatus::Ok);
            assert_eq!(sym[0], clean[idx]);
            assert!(queries <= 96);
        }
        assert_eq!(
            lc_instance_local_correct(inst, word.as_ptr(), word.len() - 1, 0, 1, sym.as_mut_ptr(), 1, ptr::null_mut()),
            LcStatus::InvalidArgument
        );
        let mut accept = 0;
        assert_eq!(lc_instance_local_test(inst, word.as_ptr(), word.len(), 1, &mut accept), LcStatus::Unsupported);

        let mut desc = ptr::null_mut();
        assert_eq!(lc_instance_describe(inst, &mut desc), LcStatus::Ok);
        let doc: serde_json::Value = serde_json::from_str(&take_string(desc)).unwrap();
        assert_eq!(doc["summary"]["code_id"], "mult(q=32,m=2,s=1,d=8)");
        lc_instance_free(inst);
    }
}

#[test]
fn tensor_instance_tests_and_runs_suites() {
    let inst = instance(r#"{"family":"tensor","field":{"k":3},"ell":8,"k":4,"m":3}"#).unwrap();
    unsafe {
        let n = lc_instance_block_length(inst);
        let k = lc_instance_message_len(inst);
        let msg: Vec<u32> = (0..k as u32).map(|i| i % 8).collect();
        let mut word = vec![0u8; n];
        assert_eq!(lc_instance_encode(inst, msg.as_ptr(), k, word.as_mut_ptr(), n), LcStatus::Ok);
        let mut accept = -1;
        assert_eq!(lc_instance_local_test(inst, word.as_ptr(), n, 5, &mut accept), LcStatus::Ok);
        assert_eq!(accept, 1);

        let mut csv = ptr::null_mut();
        assert_eq!(lc_instance_run_suite(inst, LcSuite::Completeness as i32, 50, 2, &mut csv), LcStatus::Ok);
        let text = take_string(csv);
        assert!(text.starts_with("code_id,channel,rate,trials,successes"));
        assert!(text.contains(",50,50,"));
        assert_eq!(lc_instance_run_suite(inst, 17, 5, 2, &mut csv), LcStatus::InvalidArgument);
        assert_eq!(lc_instance_run_suite(inst, LcSuite::LccContract as i32, 5, 2, &mut csv), LcStatus::Schema);
        lc_instance_free(inst);
    }
}

#[test]
fn instance_document_matches_cli_shape() {
    let cfg = CString::new(r#"{"family":"rs","field":{"k":3},"n":7,"k":3}"#).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { lc_instance_document(cfg.as_ptr(), &mut out) }, LcStatus::Ok);
    let doc: serde_json::Value = serde_json::from_str(&take_string(out)).unwrap();
    assert_eq!(doc["format"], "locality-codes-instance/1");
    assert_eq!(doc["summary"]["rate"], "3/7");
    assert_eq!(doc["config"]["family"], "rs");
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(lc_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/locality_codes.h")
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "locality_codes.h"

int main(void) {
    LcField *f = NULL;
    uint32_t x = 0;
    if (lc_field_new(4, &f) != LC_STATUS_OK) return 1;
    if (lc_field_mul(f, 2, 9, &x) != LC_STATUS_OK) return 2;
    lc_field_free(f);

    LcRsCode *rs = NULL;
    uint32_t msg[3] = {1, 2, 3}, cw[7], back[3];
    if (lc_rs_new(3, 7, 3, &rs) != LC_STATUS_OK) return 3;
    if (lc_rs_encode(rs, msg, 3, cw, 7) != LC_STATUS_OK) return 4;
    cw[2] ^= 5;
    if (lc_rs_decode(rs, cw, 7, back, 3) != LC_STATUS_OK) return 5;
    if (memcmp(msg, back, sizeof msg) != 0) return 6;
    lc_rs_free(rs);

    LcInstance *inst = NULL;
    if (lc_instance_from_json("{\"family\":\"rs\",\"field\":{\"k\":3},\"n\":7,\"k\":4,\"bad\":0}", &inst)
        != LC_STATUS_SCHEMA) return 7;
    if (lc_last_error() == NULL) return 8;
    char *json = NULL;
    if (lc_instance_from_json("{\"family\":\"rs\",\"field\":{\"k\":3},\"n\":7,\"k\":3}", &inst) != LC_STATUS_OK)
        return 9;
    if (lc_instance_describe(inst, &json) != LC_STATUS_OK) return 10;
    printf("%s %u\n", lc_version(), x);
    lc_string_free(json);
    lc_instance_free(inst);
    return 0;
}
"#;

#[test]
fn header_compiles_as_c() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let inc = header().parent().unwrap().to_path_buf();
    let o = Command::new("cc")
        .args(["-std=c11", "-Wall", "-Wextra", "-Werror", "-fsyntax-only", "-I"])
        .arg(&inc)
        .arg(&src)
        .output();
    let Ok(o) = o else {
        eprintln!("no C compiler available; skipping");
        return;
    };
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    // Link and run when the static library sits next to the test binary.
    let exe = std::env::current_exe().unwrap();
    let lib = exe.parent().and_then(Path::parent).map(|p| p.join("liblocality_codes_ffi.a"));
    let Some(lib) = lib.filter(|l| l.exists()) else {
        eprintln!("static library not found; link step skipped");
        return;
    };
    let bin = dir.path().join("use");
    let o = Command::new("cc")
        .args(["-std=c11", "-I"])
        .arg(&inc)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    let out = String::from_utf8_lossy(&run.stdout);
    assert!(out.starts_with(env!("CARGO_PKG_VERSION")), "{out}");
}
