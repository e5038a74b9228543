use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::corpus::{Claim, ClaimId};
use crate::error::{Error, Result};
use crate::run::{RankedList, Run};

use super::index::InvertedIndex;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Config {
    pub k1: f64,
    pub b: f64,
    /// Fill short result lists with zero-score documents (ascending doc_id).
    pub pad_with_zero: bool,
}

impl Default for Bm25Config {
    fn default() -> Self {
        Bm25Config {
            k1: 0.9,
            b: 0.4,
            pad_with_zero: false,
        }
    }
}

/// Robertson–Sparck-Jones IDF with 0.5 smoothing, floored at zero so terms
/// in more than half the collection contribute nothing.
pub fn idf(num_docs: usize, doc_freq: usize) -> f64 {
    let n = num_docs as f64;
    let df = doc_freq as f64;
    ((n - df + 0.5) / (df + 0.5)).ln().max(0.0)
}

pub fn bm25_search(
    index: &InvertedIndex,
    claim: &Claim,
    k: usize,
    cfg: &Bm25Config,
) -> Result<RankedList> {
    bm25_search_text(index, claim.claim_id, &claim.text, k, cfg)
}

/// Scores every document sharing a term with `query`. Each distinct query
/// term counts once; terms are accumulated in lexicographic order.
pub fn bm25_search_text(
    index: &InvertedIndex,
    claim_id: ClaimId,
    query: &str,
    k: usize,
    cfg: &Bm25Config,
) -> Result<RankedList> {
    if k == 0 {
        return Err(Error::Invalid("k must be at least 1".into()));
    }
    let terms: BTreeSet<String> = index.tokenize(query).into_iter().collect();
    let n = index.num_docs();
    let avgdl = index.avg_doc_len();
    let mut acc = vec![0.0f64; n];
    let mut touched: Vec<u32> = Vec::new();

    for term in &terms {
        let Some(postings) = index.postings.get(term) else {
            continue;
        };
        let w = idf(n, postings.len());
        for p in postings {
            let slot = p.doc as usize;
            if acc[slot] == 0.0 {
                touched.push(p.doc);
            }
            let tf = f64::from(p.tf);
            let len = f64::from(index.doc_lens[slot]);
            let norm = cfg.k1 * (1.0 - cfg.b + cfg.b * len / avgdl);
            acc[slot] += w * tf * (cfg.k1 + 1.0) / (tf + norm);
        }
    }

    touched.sort_unstable();
    touched.dedup();
    let mut scored: Vec<_> = touched
        .iter()
        .filter(|&&o| acc[o as usize] > 0.0)
        .map(|&o| (index.doc_ids[o as usize], acc[o as usize]))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(k);

    if cfg.pad_with_zero && scored.len() < k {
        let present: BTreeSet<_> = scored.iter().map(|(d, _)| *d).collect();
        let fill = index
            .doc_ids
            .iter()
            .filter(|d| !present.contains(d))
            .take(k - scored.len())
            .map(|d| (*d, 0.0))
            .collect::<Vec<_>>();
        scored.extend(fill);
    }
    Ok(RankedList::from_sorted_unchecked(claim_id, scored))
}

/// Searches every claim in parallel; results are keyed by claim_id.
pub fn search_all(
    index: &InvertedIndex,
    claims: &[Claim],
    k: usize,
    cfg: &Bm25Config,
) -> Result<Run> {
    let lists: Result<Vec<RankedList>> = claims
        .par_iter()
        .map(|c| bm25_search(index, c, k, cfg))
        .collect();
    Ok(lists?.into_iter().map(|l| (l.claim_id, l)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Corpus, DocId, Document};
    use crate::lexical::{build_index, IndexOptions};

    fn corpus(texts: &[(u64, &str)]) -> Corpus {
        Corpus::from_documents(texts.iter().map(|(id, t)| Document {
            doc_id: DocId(*id),
            title: String::new(),
            abstract_sentences: vec![t.to_string()],
        }))
        .unwrap()
    }

    fn claim(text: &str) -> Claim {
        Claim {
            claim_id: ClaimId(1),
            text: text.into(),
        }
    }

    #[test]
    fn idf_floor() {
        assert_eq!(idf(2, 2), 0.0);
        assert!(idf(5, 2) > 0.0);
    }

    // Golden values evaluated by hand from the BM25 formula (k1 = 0.9,
    // b = 0.4, avgdl = 9/5, idf = ln(3.5 / 2.5)).
    #[test]
    fn shorter_document_ranks_first() {
        let c = corpus(&[(1, "a b"), (2, "a b c d"), (3, "e"), (4, "f"), (5, "g")]);
        let idx = build_index(&c, IndexOptions::default());
        let res = bm25_search(&idx, &claim("a"), 10, &Bm25Config::default()).unwrap();
        let got: Vec<_> = res.entries().iter().map(|e| (e.doc_id.0, e.score)).collect();
        assert_eq!(got.len(), 2);
        assert_eq!(got[0].0, 1);
        assert_eq!(got[1].0, 2);
        assert!((got[0].1 - 0.3295346647321157).abs() < 1e-12);
        assert!((got[1].1 - 0.2732039528120959).abs() < 1e-12);
    }

    #[test]
    fn no_overlap_is_empty() {
        let c = corpus(&[(1, "a b"), (2, "b c")]);
        let idx = build_index(&c, IndexOptions::default());
        let res = bm25_search(&idx, &claim("zzz"), 5, &Bm25Config::default()).unwrap();
        assert!(res.is_empty());
    }

    #[test]
    fn k_zero_rejected() {
        let idx = build_index(&corpus(&[(1, "a")]), IndexOptions::default());
        assert!(bm25_search(&idx, &claim("a"), 0, &Bm25Config::default()).is_err());
    }

    #[test]
    fn padding_appends_zero_scores() {
        let c = corpus(&[(1, "a b"), (2, "c"), (3, "d"), (4, "e")]);
        let idx = build_index(&c, IndexOptions::default());
        let cfg = Bm25Config {
            pad_with_zero: true,
            ..Default::default()
        };
        let res = bm25_search(&idx, &claim("a"), 3, &cfg).unwrap();
        let ids: Vec<_> = res.doc_ids().map(|d| d.0).collect();
        assert_eq!(ids, vec![1, 2, 3]);
        assert_eq!(res.entries()[1].score, 0.0);
    }

    #[test]
    fn search_is_prefix_stable_in_k() {
        let c = corpus(&[(1, "a b a"), (2, "a c"), (3, "a d d"), (4, "x"), (5, "y"), (6, "z")]);
        let idx = build_index(&c, IndexOptions::default());
        let cfg = Bm25Config::default();
        let full = bm25_search(&idx, &claim("a d"), 10, &cfg).unwrap();
        for k in 1..=full.len() {
            let part = bm25_search(&idx, &claim("a d"), k, &cfg).unwrap();
            assert_eq!(part.entries(), full.top(k));
        }
    }
}
