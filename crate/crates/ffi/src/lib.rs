//! C ABI over the codoc library.
//!
//! Every function returns a [`CodocStatus`]. On failure a message is kept in
//! thread-local storage and can be read with [`codoc_last_error`]. Strings
//! returned through out-parameters are owned by the caller and must be
//! released with [`codoc_string_free`]; id arrays with [`codoc_ids_free`].

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use codoc::bpe::{self, BpeVocab};
use codoc::{clean, extract, metrics, noise, pytok, style};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodocStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    IoError = 4,
    ParseError = 5,
    UnknownId = 6,
    Panic = 7,
}

/// Opaque BPE vocabulary.
pub struct CodocVocab {
    inner: BpeVocab,
}

/// ROUGE precision, recall and F1 for unigrams, bigrams and the longest
/// common subsequence.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CodocRouge {
    pub r1_precision: f64,
    pub r1_recall: f64,
    pub r1_f1: f64,
    pub r2_precision: f64,
    pub r2_recall: f64,
    pub r2_f1: f64,
    pub rl_precision: f64,
    pub rl_recall: f64,
    pub rl_f1: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).unwrap_or_default());
}

struct Failure(CodocStatus, String);

type FfiResult = Result<(), Failure>;

fn fail<T>(status: CodocStatus, msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure(status, msg.into()))
}

fn guard(f: impl FnOnce() -> FfiResult) -> CodocStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            CodocStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside codoc");
            CodocStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return fail(CodocStatus::NullPointer, format!("{name} is null"));
    }
    CStr::from_ptr(p)
        .to_str()
        .or_else(|_| fail(CodocStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

unsafe fn str_array<'a>(p: *const *const c_char, n: usize, name: &str) -> Result<Vec<&'a str>, Failure> {
    if n == 0 {
        return Ok(Vec::new());
    }
    if p.is_null() {
        return fail(CodocStatus::NullPointer, format!("{name} is null"));
    }
    std::slice::from_raw_parts(p, n)
        .iter()
        .enumerate()
        .map(|(i, s)| str_arg(*s, &format!("{name}[{i}]")))
        .collect()
}

unsafe fn id_slice<'a>(p: *const u32, n: usize, name: &str) -> Result<&'a [u32], Failure> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return fail(CodocStatus::NullPointer, format!("{name} is null"));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

fn check_out<T>(p: *mut T, name: &str) -> FfiResult {
    if p.is_null() {
        return fail(CodocStatus::NullPointer, format!("{name} is null"));
    }
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> FfiResult {
    let c = CString::new(s).or_else(|_| fail(CodocStatus::InvalidArgument, "result contains a NUL byte"))?;
    *out = c.into_raw();
    Ok(())
}

unsafe fn put_ids(out: *mut *mut u32, out_len: *mut usize, ids: Vec<u32>) {
    let boxed = ids.into_boxed_slice();
    *out_len = boxed.len();
    *out = Box::into_raw(boxed) as *mut u32;
}

unsafe fn vocab_ref<'a>(v: *const CodocVocab) -> Result<&'a BpeVocab, Failure> {
    if v.is_null() {
        return fail(CodocStatus::NullPointer, "vocab is null");
    }
    Ok(&(*v).inner)
}

/// Message for the last failed call on this thread ("" after a success).
/// The pointer stays valid until the next codoc call on the same thread.
#[no_mangle]
pub extern "C" fn codoc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from a codoc function and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn codoc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Release an id array returned by this library. Null is ignored.
///
/// # Safety
/// `ids` and `len` must be exactly as returned.
#[no_mangle]
pub unsafe extern "C" fn codoc_ids_free(ids: *mut u32, len: usize) {
    if !ids.is_null() {
        drop(Box::from_raw(ptr::slice_from_raw_parts_mut(ids, len)));
    }
}

/// Structural validity of Python source; `*valid_out` is 1 or 0.
///
/// # Safety
/// `source` must be a NUL-terminated string; `valid_out` writable.
#[no_mangle]
pub unsafe extern "C" fn codoc_check_syntax(source: *const c_char, valid_out: *mut c_int) -> CodocStatus {
    guard(|| {
        let src = str_arg(source, "source")?;
        check_out(valid_out, "valid_out")?;
        *valid_out = c_int::from(pytok::check_source(src).valid);
        Ok(())
    })
}

/// Style label of a docstring ("oneline", "numpydoc", ...).
///
/// # Safety
/// `docstring` must be a NUL-terminated string; `style_out` writable.
#[no_mangle]
pub unsafe extern "C" fn codoc_classify(docstring: *const c_char, style_out: *mut *mut c_char) -> CodocStatus {
    guard(|| {
        let doc = str_arg(docstring, "docstring")?;
        check_out(style_out, "style_out")?;
        put_string(style_out, style::classify(doc).as_str().to_string())
    })
}

/// Clean a docstring with the default placeholders.
///
/// # Safety
/// `docstring` must be a NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn codoc_clean(docstring: *const c_char, out: *mut *mut c_char) -> CodocStatus {
    guard(|| {
        let doc = str_arg(docstring, "docstring")?;
        check_out(out, "out")?;
        put_string(out, clean::clean_docstring(doc, &clean::CleanConfig::default()))
    })
}

/// Extract methods from one source file as JSON lines.
///
/// # Safety
/// All strings must be NUL-terminated; `json_out` writable.
#[no_mangle]
pub unsafe extern "C" fn codoc_extract_json(
    source: *const c_char,
    repo: *const c_char,
    path: *const c_char,
    json_out: *mut *mut c_char,
) -> CodocStatus {
    guard(|| {
        let src = str_arg(source, "source")?;
        let repo = str_arg(repo, "repo")?;
        let path = str_arg(path, "path")?;
        check_out(json_out, "json_out")?;
        let records = extract::extract_methods(src, repo, path).or_else(|e| fail(CodocStatus::ParseError, e.to_string()))?;
        let mut s = String::new();
        for r in &records {
            s.push_str(&serde_json::to_string(r).or_else(|e| fail(CodocStatus::InvalidArgument, e.to_string()))?);
            s.push('\n');
        }
        put_string(json_out, s)
    })
}

/// Corpus BLEU (0 to 100) over `n` hypothesis/reference pairs.
///
/// # Safety
/// `hyps` and `refs` must point to `n` NUL-terminated strings each.
#[no_mangle]
pub unsafe extern "C" fn codoc_bleu(
    hyps: *const *const c_char,
    refs: *const *const c_char,
    n: usize,
    out: *mut f64,
) -> CodocStatus {
    guard(|| {
        let h = str_array(hyps, n, "hyps")?;
        let r = str_array(refs, n, "refs")?;
        check_out(out, "out")?;
        *out = metrics::bleu(&h, &r).or_else(|e| fail(CodocStatus::InvalidArgument, e.to_string()))?;
        Ok(())
    })
}

/// ROUGE-1, ROUGE-2 and ROUGE-L for one pair.
///
/// # Safety
/// Both strings must be NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn codoc_rouge(hyp: *const c_char, reference: *const c_char, out: *mut CodocRouge) -> CodocStatus {
    guard(|| {
        let h = str_arg(hyp, "hyp")?;
        let r = str_arg(reference, "reference")?;
        check_out(out, "out")?;
        let s = metrics::rouge(h, r);
        *out = CodocRouge {
            r1_precision: s.rouge1.precision,
            r1_recall: s.rouge1.recall,
            r1_f1: s.rouge1.f1,
            r2_precision: s.rouge2.precision,
            r2_recall: s.rouge2.recall,
            r2_f1: s.rouge2.f1,
            rl_precision: s.rouge_l.precision,
            rl_recall: s.rouge_l.recall,
            rl_f1: s.rouge_l.f1,
        };
        Ok(())
    })
}

/// Load a vocabulary saved as a merges file and a token table.
///
/// # Safety
/// Paths must be NUL-terminated; `out` writable. Free with [`codoc_vocab_free`].
#[no_mangle]
pub unsafe extern "C" fn codoc_vocab_load(
    merges_path: *const c_char,
    tokens_path: *const c_char,
    out: *mut *mut CodocVocab,
) -> CodocStatus {
    guard(|| {
        let m = str_arg(merges_path, "merges_path")?;
        let t = str_arg(tokens_path, "tokens_path")?;
        check_out(out, "out")?;
        let inner = BpeVocab::load(Path::new(m), Path::new(t)).or_else(|e| {
            let status = match e {
                bpe::BpeError::Io(_) => CodocStatus::IoError,
                _ => CodocStatus::ParseError,
            };
            fail(status, e.to_string())
        })?;
        *out = Box::into_raw(Box::new(CodocVocab { inner }));
        Ok(())
    })
}

/// Train a vocabulary on `n` documents.
///
/// # Safety
/// `docs` must point to `n` NUL-terminated strings; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn codoc_vocab_train(
    docs: *const *const c_char,
    n: usize,
    vocab_size: usize,
    out: *mut *mut CodocVocab,
) -> CodocStatus {
    guard(|| {
        let d = str_array(docs, n, "docs")?;
        check_out(out, "out")?;
        let inner = bpe::train(&d, vocab_size).or_else(|e| fail(CodocStatus::InvalidArgument, e.to_string()))?;
        *out = Box::into_raw(Box::new(CodocVocab { inner }));
        Ok(())
    })
}

/// Write the vocabulary to a merges file and a token table.
///
/// # Safety
/// `vocab` must be a live handle; paths NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn codoc_vocab_save(
    vocab: *const CodocVocab,
    merges_path: *const c_char,
    tokens_path: *const c_char,
) -> CodocStatus {
    guard(|| {
        let v = vocab_ref(vocab)?;
        let m = str_arg(merges_path, "merges_path")?;
        let t = str_arg(tokens_path, "tokens_path")?;
        v.save(Path::new(m), Path::new(t)).or_else(|e| fail(CodocStatus::IoError, e.to_string()))
    })
}

/// Number of tokens in the vocabulary, or 0 for a null handle.
///
/// # Safety
/// `vocab` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn codoc_vocab_size(vocab: *const CodocVocab) -> usize {
    if vocab.is_null() {
        0
    } else {
        (*vocab).inner.len()
    }
}

/// # Safety
/// `vocab` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn codoc_vocab_free(vocab: *mut CodocVocab) {
    if !vocab.is_null() {
        drop(Box::from_raw(vocab));
    }
}

/// Encode text to token ids.
///
/// # Safety
/// `vocab` live, `text` NUL-terminated, out-parameters writable.
#[no_mangle]
pub unsafe extern "C" fn codoc_vocab_encode(
    vocab: *const CodocVocab,
    text: *const c_char,
    ids_out: *mut *mut u32,
    len_out: *mut usize,
) -> CodocStatus {
    guard(|| {
        let v = vocab_ref(vocab)?;
        let t = str_arg(text, "text")?;
        check_out(ids_out, "ids_out")?;
        check_out(len_out, "len_out")?;
        put_ids(ids_out, len_out, v.encode(t));
        Ok(())
    })
}

/// Decode token ids to text.
///
/// # Safety
/// `vocab` live, `ids` valid for `len` reads, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn codoc_vocab_decode(
    vocab: *const CodocVocab,
    ids: *const u32,
    len: usize,
    out: *mut *mut c_char,
) -> CodocStatus {
    guard(|| {
        let v = vocab_ref(vocab)?;
        let ids = id_slice(ids, len, "ids")?;
        check_out(out, "out")?;
        let text = v.decode(ids).or_else(|e| {
            let status = match e {
                bpe::BpeError::UnknownId(_) => CodocStatus::UnknownId,
                _ => CodocStatus::InvalidUtf8,
            };
            fail(status, e.to_string())
        })?;
        put_string(out, text)
    })
}

/// Span-mask `ids` using the vocabulary's mask tokens.
///
/// # Safety
/// `vocab` live, `ids` valid for `len` reads, out-parameters writable.
#[no_mangle]
pub unsafe extern "C" fn codoc_noise(
    vocab: *const CodocVocab,
    ids: *const u32,
    len: usize,
    mask_rate: f64,
    seed: u64,
    source_out: *mut *mut u32,
    source_len: *mut usize,
    target_out: *mut *mut u32,
    target_len: *mut usize,
) -> CodocStatus {
    guard(|| {
        let v = vocab_ref(vocab)?;
        let ids = id_slice(ids, len, "ids")?;
        for (p, name) in [(source_out, "source_out"), (target_out, "target_out")] {
            check_out(p, name)?;
        }
        for (p, name) in [(source_len, "source_len"), (target_len, "target_len")] {
            check_out(p, name)?;
        }
        let ex = noise::noise(ids, mask_rate, seed, &v.mask_ids())
            .or_else(|e| fail(CodocStatus::InvalidArgument, e.to_string()))?;
        put_ids(source_out, source_len, ex.source);
        put_ids(target_out, target_len, ex.target);
        Ok(())
    })
}

/// Inverse of [`codoc_noise`].
///
/// # Safety
/// `vocab` live, arrays valid for their lengths, out-parameters writable.
#[no_mangle]
pub unsafe extern "C" fn codoc_denoise(
    vocab: *const CodocVocab,
    source: *const u32,
    source_len: usize,
    target: *const u32,
    target_len: usize,
    ids_out: *mut *mut u32,
    len_out: *mut usize,
) -> CodocStatus {
    guard(|| {
        let v = vocab_ref(vocab)?;
        let s = id_slice(source, source_len, "source")?;
        let t = id_slice(target, target_len, "target")?;
        check_out(ids_out, "ids_out")?;
        check_out(len_out, "len_out")?;
        let ids = noise::denoise(s, t, &v.mask_ids()).or_else(|e| fail(CodocStatus::InvalidArgument, e.to_string()))?;
        put_ids(ids_out, len_out, ids);
        Ok(())
    })
}
