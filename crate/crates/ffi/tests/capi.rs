use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use evrank_ffi::*;

fn fixture_corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/seed0/corpus.jsonl")
}

fn cstr(p: &Path) -> CString {
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> Option<String> {
    let p = evr_last_error();
    (!p.is_null()).then(|| unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned())
}

struct Loaded {
    corpus: *mut EvrCorpus,
    index: *mut EvrIndex,
}

impl Drop for Loaded {
    fn drop(&mut self) {
        unsafe {
            evr_index_free(self.index);
            evr_corpus_free(self.corpus);
        }
    }
}

fn load() -> Loaded {
    let mut corpus = ptr::null_mut();
    let mut index = ptr::null_mut();
    unsafe {
        assert_eq!(evr_corpus_load(cstr(&fixture_corpus()).as_ptr(), 1, &mut corpus), EvrStatus::Ok);
        assert_eq!(evr_index_build(corpus, &mut index), EvrStatus::Ok);
    }
    Loaded { corpus, index }
}

fn search(index: *const EvrIndex, q: &str, k: usize) -> Vec<(u64, f64)> {
    let q = CString::new(q).unwrap();
    let mut list = ptr::null_mut();
    unsafe {
        assert_eq!(evr_bm25_search(index, q.as_ptr(), k, 0.9, 0.4, &mut list), EvrStatus::Ok);
        let out = (0..evr_ranked_list_len(list))
            .map(|i| {
                let (mut d, mut s) = (0u64, 0f64);
                assert_eq!(evr_ranked_list_get(list, i, &mut d, &mut s), EvrStatus::Ok);
                (d, s)
            })
            .collect();
        evr_ranked_list_free(list);
        out
    }
}

#[test]
fn search_matches_the_library() {
    let h = load();
    let via_ffi = search(h.index, "Statin therapy lowers LDL cholesterol in adults with diabetes.", 5);

    let corpus = evrank::corpus::load_corpus(&fixture_corpus(), true).unwrap();
    let index = evrank::lexical::build_index(&corpus, Default::default());
    let direct = evrank::lexical::bm25_search_text(
        &index,
        evrank::corpus::ClaimId(0),
        "Statin therapy lowers LDL cholesterol in adults with diabetes.",
        5,
        &Default::default(),
    )
    .unwrap();
    let direct: Vec<(u64, f64)> = direct.entries().iter().map(|e| (e.doc_id.0, e.score)).collect();
    assert_eq!(via_ffi, direct);
    unsafe { assert_eq!(evr_corpus_len(h.corpus), 20) };
}

#[test]
fn index_file_round_trip() {
    let h = load();
    let dir = tempfile::tempdir().unwrap();
    let p = cstr(&dir.path().join("index.txt"));
    let mut back = ptr::null_mut();
    unsafe {
        assert_eq!(evr_index_write(h.index, p.as_ptr()), EvrStatus::Ok);
        assert_eq!(evr_index_read(p.as_ptr(), &mut back), EvrStatus::Ok);
        assert_eq!(evr_index_num_docs(back), 20);
    }
    assert_eq!(search(back, "vitamin d", 10), search(h.index, "vitamin d", 10));
    unsafe { evr_index_free(back) };
}

#[test]
fn errors_set_status_and_message() {
    let mut corpus = ptr::null_mut();
    let missing = CString::new("/nonexistent/corpus.jsonl").unwrap();
    unsafe {
        assert_eq!(evr_corpus_load(missing.as_ptr(), 1, &mut corpus), EvrStatus::Io);
        assert!(corpus.is_null());
        assert!(last_error().unwrap().contains("/nonexistent/corpus.jsonl"));

        assert_eq!(evr_corpus_load(ptr::null(), 1, &mut corpus), EvrStatus::NullArgument);
        assert_eq!(evr_corpus_load(missing.as_ptr(), 1, ptr::null_mut()), EvrStatus::NullArgument);

        let bad = [0xffu8, 0];
        assert_eq!(evr_corpus_load(bad.as_ptr().cast(), 1, &mut corpus), EvrStatus::InvalidUtf8);

        let mut v = 0.0;
        assert_eq!(evr_verification_feedback(0.5, 0.5, 0.5, &mut v), EvrStatus::InvalidArgument);
        assert!(last_error().is_some());
        assert_eq!(evr_verification_feedback(0.25, 0.5, 0.25, &mut v), EvrStatus::Ok);
        assert_eq!(v, 0.75);
        assert!(last_error().is_none());

        assert_eq!(evr_normalize_relevance(0.0, &mut v), EvrStatus::Ok);
        assert_eq!(v, 0.5);
        assert_eq!(evr_normalize_relevance(f64::NAN, &mut v), EvrStatus::InvalidArgument);

        // Null handles are tolerated by the query and free functions.
        assert_eq!(evr_corpus_len(ptr::null()), 0);
        evr_corpus_free(ptr::null_mut());
        let mut list = ptr::null_mut();
        let q = CString::new("x").unwrap();
        assert_eq!(
            evr_bm25_search(ptr::null(), q.as_ptr(), 1, 0.9, 0.4, &mut list),
            EvrStatus::NullArgument
        );
    }
}

#[test]
fn k_zero_is_rejected() {
    let h = load();
    let q = CString::new("vitamin").unwrap();
    let mut list = ptr::null_mut();
    let status = unsafe { evr_bm25_search(h.index, q.as_ptr(), 0, 0.9, 0.4, &mut list) };
    assert_eq!(status, EvrStatus::InvalidArgument);
    assert!(list.is_null());
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(evr_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/evrank.h")).unwrap();
    for name in [
        "typedef struct EvrCorpus EvrCorpus;",
        "typedef struct EvrIndex EvrIndex;",
        "typedef struct EvrRankedList EvrRankedList;",
        "EVR_STATUS_OK = 0",
        "EVR_STATUS_PANIC = 10",
        "evr_last_error(void)",
        "evr_corpus_load(",
        "evr_bm25_search(",
        "evr_combo_score(",
    ] {
        assert!(header.contains(name), "header is missing {name}");
    }
}

/// Compiles `tests/smoke.c` against the generated header and the static
/// library, then runs it on the fixture corpus.
#[test]
fn c_program_links_and_runs() {
    let target_dir = std::env::current_exe()
        .unwrap()
        .parent()
        .and_then(Path::parent)
        .unwrap()
        .to_path_buf();
    let lib = target_dir.join("libevrank_ffi.a");
    assert!(lib.exists(), "static library not found at {}", lib.display());
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let out_dir = tempfile::tempdir().unwrap();
    let exe = out_dir.path().join("smoke");
    let status = Command::new(std::env::var("CC").unwrap_or_else(|_| "cc".into()))
        .arg(manifest.join("tests/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("a C compiler is required for this test");
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&exe).arg(fixture_corpus()).output().unwrap();
    assert!(
        out.status.success(),
        "smoke program failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let top = search(load().index, "statin therapy LDL cholesterol", 1)[0].0;
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), top.to_string());
}
