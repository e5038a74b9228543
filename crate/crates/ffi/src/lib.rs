//! C ABI over the evrank library.
//!
//! Every fallible function returns an [`EvrStatus`] and writes results
//! through out-pointers. On failure, [`evr_last_error`] returns a message
//! for the calling thread. Handles are opaque and must be released with
//! the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use evrank::corpus::{load_corpus, ClaimId, Corpus};
use evrank::lexical::{
    bm25_search_text, build_index, read_index, write_index, Bm25Config, IndexOptions,
    InvertedIndex,
};
use evrank::run::RankedList;
use evrank::scoring::{combo_score, normalize_relevance, verification_feedback, LabelProbabilities};
use evrank::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvrStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Io = 4,
    Parse = 5,
    Config = 6,
    Protocol = 7,
    Stale = 8,
    OutOfRange = 9,
    Panic = 10,
}

/// Parsed corpus.
pub struct EvrCorpus {
    inner: Corpus,
}

/// BM25 inverted index.
pub struct EvrIndex {
    inner: InvertedIndex,
}

/// Ranked documents for one query, best first.
pub struct EvrRankedList {
    inner: RankedList,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> EvrStatus {
    match err {
        Error::Io { .. } => EvrStatus::Io,
        Error::Parse { .. } | Error::DuplicateDoc(_) | Error::DuplicateClaim(_) | Error::UnknownLabel(_) => {
            EvrStatus::Parse
        }
        Error::Config(_) => EvrStatus::Config,
        Error::Protocol(_) => EvrStatus::Protocol,
        Error::Stale { .. } => EvrStatus::Stale,
        _ => EvrStatus::InvalidArgument,
    }
}

struct Fail(EvrStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

/// Runs `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> EvrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            EvrStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            EvrStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(EvrStatus::NullArgument, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(EvrStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Message for the last failed call on this thread, or NULL after a
/// successful call. Valid until the next call into this library.
#[no_mangle]
pub extern "C" fn evr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn evr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a JSONL corpus. `strict` non-zero aborts on malformed lines.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out_corpus` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn evr_corpus_load(
    path: *const c_char,
    strict: i32,
    out_corpus: *mut *mut EvrCorpus,
) -> EvrStatus {
    guard(|| {
        let slot = out(out_corpus, "out_corpus")?;
        let path = str_arg(path, "path")?;
        let inner = load_corpus(Path::new(path), strict != 0)?;
        *slot = Box::into_raw(Box::new(EvrCorpus { inner }));
        Ok(())
    })
}

/// # Safety
/// `corpus` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn evr_corpus_len(corpus: *const EvrCorpus) -> usize {
    corpus.as_ref().map_or(0, |c| c.inner.len())
}

/// # Safety
/// `corpus` must come from `evr_corpus_load` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn evr_corpus_free(corpus: *mut EvrCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

/// Builds an index over title and abstract with no stopwords.
///
/// # Safety
/// `corpus` must be a live handle and `out_index` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn evr_index_build(
    corpus: *const EvrCorpus,
    out_index: *mut *mut EvrIndex,
) -> EvrStatus {
    guard(|| {
        let slot = out(out_index, "out_index")?;
        let corpus = handle(corpus, "corpus")?;
        let inner = build_index(&corpus.inner, IndexOptions::default());
        *slot = Box::into_raw(Box::new(EvrIndex { inner }));
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out_index` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn evr_index_read(
    path: *const c_char,
    out_index: *mut *mut EvrIndex,
) -> EvrStatus {
    guard(|| {
        let slot = out(out_index, "out_index")?;
        let path = Path::new(str_arg(path, "path")?);
        let f = std::fs::File::open(path).map_err(|e| Fail(EvrStatus::Io, format!("{}: {e}", path.display())))?;
        let inner = read_index(std::io::BufReader::new(f), path)?;
        *slot = Box::into_raw(Box::new(EvrIndex { inner }));
        Ok(())
    })
}

/// # Safety
/// `index` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn evr_index_write(index: *const EvrIndex, path: *const c_char) -> EvrStatus {
    guard(|| {
        let index = handle(index, "index")?;
        let path = str_arg(path, "path")?;
        let io = |e: std::io::Error| Fail(EvrStatus::Io, format!("{path}: {e}"));
        let f = std::fs::File::create(path).map_err(io)?;
        let mut w = std::io::BufWriter::new(f);
        write_index(&index.inner, &mut w).map_err(io)?;
        std::io::Write::flush(&mut w).map_err(io)?;
        Ok(())
    })
}

/// # Safety
/// `index` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn evr_index_num_docs(index: *const EvrIndex) -> usize {
    index.as_ref().map_or(0, |i| i.inner.num_docs())
}

/// # Safety
/// `index` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn evr_index_free(index: *mut EvrIndex) {
    if !index.is_null() {
        drop(Box::from_raw(index));
    }
}

/// BM25 top-`k` for free text with the given parameters. Only documents
/// with a positive score are returned.
///
/// # Safety
/// `index` must be a live handle, `query` a NUL-terminated string and
/// `out_list` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn evr_bm25_search(
    index: *const EvrIndex,
    query: *const c_char,
    k: usize,
    k1: f64,
    b: f64,
    out_list: *mut *mut EvrRankedList,
) -> EvrStatus {
    guard(|| {
        let slot = out(out_list, "out_list")?;
        let index = handle(index, "index")?;
        let query = str_arg(query, "query")?;
        let cfg = Bm25Config {
            k1,
            b,
            pad_with_zero: false,
        };
        let inner = bm25_search_text(&index.inner, ClaimId(0), query, k, &cfg)?;
        *slot = Box::into_raw(Box::new(EvrRankedList { inner }));
        Ok(())
    })
}

/// # Safety
/// `list` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn evr_ranked_list_len(list: *const EvrRankedList) -> usize {
    list.as_ref().map_or(0, |l| l.inner.len())
}

/// Entry at zero-based `position`.
///
/// # Safety
/// `list` must be a live handle; out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn evr_ranked_list_get(
    list: *const EvrRankedList,
    position: usize,
    out_doc_id: *mut u64,
    out_score: *mut f64,
) -> EvrStatus {
    guard(|| {
        let list = handle(list, "list")?;
        let doc = out(out_doc_id, "out_doc_id")?;
        let score = out(out_score, "out_score")?;
        let e = list.inner.entries().get(position).ok_or_else(|| {
            Fail(
                EvrStatus::OutOfRange,
                format!("position {position} out of range for {} entries", list.inner.len()),
            )
        })?;
        *doc = e.doc_id.0;
        *score = e.score;
        Ok(())
    })
}

/// # Safety
/// `list` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn evr_ranked_list_free(list: *mut EvrRankedList) {
    if !list.is_null() {
        drop(Box::from_raw(list));
    }
}

/// p_support + p_refute of a validated label distribution.
///
/// # Safety
/// `out_value` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn evr_verification_feedback(
    p_support: f64,
    p_refute: f64,
    p_nei: f64,
    out_value: *mut f64,
) -> EvrStatus {
    guard(|| {
        let slot = out(out_value, "out_value")?;
        let probs = LabelProbabilities::new(p_support, p_refute, p_nei)?;
        *slot = verification_feedback(&probs);
        Ok(())
    })
}

/// Sigmoid of a relevance logit, kept inside (0, 1).
///
/// # Safety
/// `out_value` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn evr_normalize_relevance(logit: f64, out_value: *mut f64) -> EvrStatus {
    guard(|| {
        let slot = out(out_value, "out_value")?;
        *slot = normalize_relevance(logit)?;
        Ok(())
    })
}

/// alpha * s_v + (1 - alpha) * s_r with all inputs in [0, 1].
///
/// # Safety
/// `out_value` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn evr_combo_score(
    s_v: f64,
    s_r: f64,
    alpha: f64,
    out_value: *mut f64,
) -> EvrStatus {
    guard(|| {
        let slot = out(out_value, "out_value")?;
        *slot = combo_score(s_v, s_r, alpha)?;
        Ok(())
    })
}
