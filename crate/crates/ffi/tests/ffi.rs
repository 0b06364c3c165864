use std::ffi::{c_char, c_int, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use codoc_ffi::*;

fn cs(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(codoc_last_error()) }.to_string_lossy().into_owned()
}

unsafe fn take_string(p: *mut c_char) -> String {
    let s = CStr::from_ptr(p).to_str().unwrap().to_owned();
    codoc_string_free(p);
    s
}

unsafe fn take_ids(p: *mut u32, n: usize) -> Vec<u32> {
    let v = std::slice::from_raw_parts(p, n).to_vec();
    codoc_ids_free(p, n);
    v
}

fn train_vocab() -> *mut CodocVocab {
    let docs = [cs("def add(a, b):\n    return a + b\n"), cs("def sub(a, b):\n    return a - b\n")];
    let ptrs: Vec<*const c_char> = docs.iter().map(|d| d.as_ptr()).collect();
    let mut v = ptr::null_mut();
    let st = unsafe { codoc_vocab_train(ptrs.as_ptr(), ptrs.len(), 450, &mut v) };
    assert_eq!(st, CodocStatus::Ok, "{}", last_error());
    v
}

#[test]
fn syntax_check() {
    let mut valid: c_int = -1;
    unsafe {
        assert_eq!(codoc_check_syntax(cs("def f():\n    return 1\n").as_ptr(), &mut valid), CodocStatus::Ok);
        assert_eq!(valid, 1);
        assert_eq!(codoc_check_syntax(cs("def f(:\n").as_ptr(), &mut valid), CodocStatus::Ok);
        assert_eq!(valid, 0);
        assert_eq!(codoc_check_syntax(ptr::null(), &mut valid), CodocStatus::NullPointer);
    }
    assert!(last_error().contains("source"));
}

#[test]
fn classify_and_clean() {
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(codoc_classify(cs("Add numbers.").as_ptr(), &mut out), CodocStatus::Ok);
        assert_eq!(take_string(out), "oneline");
        assert_eq!(codoc_clean(cs("See https://x.org now  ").as_ptr(), &mut out), CodocStatus::Ok);
        assert_eq!(take_string(out), "See <URL> now");
        let bad = [0xffu8, 0];
        assert_eq!(codoc_clean(bad.as_ptr() as *const c_char, &mut out), CodocStatus::InvalidUtf8);
    }
}

#[test]
fn extract_json() {
    unsafe {
        let mut out = ptr::null_mut();
        let src = cs("def f(x):\n    'doc'\n    return x\n\ndef g():\n    pass\n");
        assert_eq!(codoc_extract_json(src.as_ptr(), cs("r").as_ptr(), cs("a.py").as_ptr(), &mut out), CodocStatus::Ok);
        let text = take_string(out);
        let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0]["docstring"], "doc");
        assert_eq!(lines[1]["name"], "g");
        let bad = cs("def f(:\n    pass\n");
        assert_eq!(codoc_extract_json(bad.as_ptr(), cs("r").as_ptr(), cs("a.py").as_ptr(), &mut out), CodocStatus::ParseError);
        assert!(!last_error().is_empty());
    }
}

#[test]
fn metrics() {
    unsafe {
        let h = [cs("the cat sat on the mat")];
        let hp: Vec<*const c_char> = h.iter().map(|s| s.as_ptr()).collect();
        let mut b = -1.0;
        assert_eq!(codoc_bleu(hp.as_ptr(), hp.as_ptr(), 1, &mut b), CodocStatus::Ok);
        assert_eq!(b, 100.0);
        assert_eq!(codoc_bleu(hp.as_ptr(), hp.as_ptr(), 0, &mut b), CodocStatus::InvalidArgument);
        let mut r = CodocRouge::default();
        assert_eq!(codoc_rouge(cs("a b c").as_ptr(), cs("a x c").as_ptr(), &mut r), CodocStatus::Ok);
        assert!((r.rl_f1 - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.r2_f1, 0.0);
    }
}

#[test]
fn vocab_roundtrip_and_noise() {
    let v = train_vocab();
    unsafe {
        let size = codoc_vocab_size(v);
        assert!(size > 399 && size <= 450, "{size}");
        let text = "def mul(a, b):\n        return a * b [MASK1]\n";
        let (mut ids, mut n) = (ptr::null_mut(), 0usize);
        assert_eq!(codoc_vocab_encode(v, cs(text).as_ptr(), &mut ids, &mut n), CodocStatus::Ok);
        let ids = take_ids(ids, n);
        let mut out = ptr::null_mut();
        assert_eq!(codoc_vocab_decode(v, ids.as_ptr(), ids.len(), &mut out), CodocStatus::Ok);
        assert_eq!(take_string(out), text);
        let bad = [1_000_000u32];
        assert_eq!(codoc_vocab_decode(v, bad.as_ptr(), 1, &mut out), CodocStatus::UnknownId);

        let plain: Vec<u32> = (0..200).map(|i| i % 250).collect();
        let (mut s, mut sn, mut t, mut tn) = (ptr::null_mut(), 0, ptr::null_mut(), 0);
        assert_eq!(codoc_noise(v, plain.as_ptr(), plain.len(), 0.3, 9, &mut s, &mut sn, &mut t, &mut tn), CodocStatus::Ok);
        let (s, t) = (take_ids(s, sn), take_ids(t, tn));
        assert!(!t.is_empty());
        let (mut back, mut bn) = (ptr::null_mut(), 0);
        assert_eq!(codoc_denoise(v, s.as_ptr(), s.len(), t.as_ptr(), t.len(), &mut back, &mut bn), CodocStatus::Ok);
        assert_eq!(take_ids(back, bn), plain);
        assert_eq!(
            codoc_noise(v, plain.as_ptr(), plain.len(), 1.5, 9, &mut ptr::null_mut(), &mut 0, &mut ptr::null_mut(), &mut 0),
            CodocStatus::InvalidArgument
        );

        let dir = tempfile::tempdir().unwrap();
        let m = cs(dir.path().join("m.txt").to_str().unwrap());
        let tk = cs(dir.path().join("t.tsv").to_str().unwrap());
        assert_eq!(codoc_vocab_save(v, m.as_ptr(), tk.as_ptr()), CodocStatus::Ok);
        let mut loaded = ptr::null_mut();
        assert_eq!(codoc_vocab_load(m.as_ptr(), tk.as_ptr(), &mut loaded), CodocStatus::Ok);
        assert_eq!(codoc_vocab_size(loaded), size);
        codoc_vocab_free(loaded);
        let missing = cs(dir.path().join("none").to_str().unwrap());
        assert_eq!(codoc_vocab_load(missing.as_ptr(), tk.as_ptr(), &mut loaded), CodocStatus::IoError);
        codoc_vocab_free(v);
        codoc_vocab_free(ptr::null_mut());
    }
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/codoc.h")).unwrap();
    for name in [
        "typedef struct CodocVocab CodocVocab;",
        "CODOC_STATUS_OK = 0",
        "codoc_last_error(void)",
        "codoc_check_syntax(",
        "codoc_classify(",
        "codoc_clean(",
        "codoc_extract_json(",
        "codoc_bleu(",
        "codoc_rouge(",
        "codoc_vocab_load(",
        "codoc_vocab_train(",
        "codoc_vocab_encode(",
        "codoc_vocab_decode(",
        "codoc_vocab_free(",
        "codoc_noise(",
        "codoc_denoise(",
        "codoc_string_free(",
        "codoc_ids_free(",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

/// Build a small C program against the header and the static library.
#[test]
fn c_program_links_and_runs() {
    let deps = std::env::current_exe().unwrap().parent().unwrap().to_path_buf();
    let profile_dir = deps.parent().unwrap();
    let lib = profile_dir.join("libcodoc_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let c_file = dir.path().join("smoke.c");
    std::fs::write(
        &c_file,
        r#"#include <stdio.h>
#include <string.h>
#include "codoc.h"

int main(void) {
    int valid = -1;
    if (codoc_check_syntax("def f():\n    return 1\n", &valid) != CODOC_STATUS_OK || valid != 1) return 1;
    char *style = NULL;
    if (codoc_classify("Add numbers.", &style) != CODOC_STATUS_OK) return 2;
    if (strcmp(style, "oneline") != 0) return 3;
    codoc_string_free(style);
    if (codoc_check_syntax(NULL, &valid) != CODOC_STATUS_NULL_POINTER) return 4;
    if (strlen(codoc_last_error()) == 0) return 5;
    printf("ok\n");
    return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.path().join("smoke");
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = Command::new("cc")
        .arg(&c_file)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("run cc");
    assert!(status.success(), "C compile failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "smoke exited with {:?}", out.status);
    assert_eq!(String::from_utf8_lossy(&out.stdout), "ok\n");
}
