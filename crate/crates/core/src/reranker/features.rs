use std::collections::BTreeSet;

use crate::corpus::{Claim, Corpus, DocId};
use crate::error::{Error, Result};
use crate::lexical::{idf, Bm25Config, InvertedIndex};

pub const FEATURE_DIM: usize = 5;

/// Feature order as stored in model files.
pub const FEATURE_NAMES: [&str; FEATURE_DIM] = [
    "overlap_ratio",
    "idf_overlap",
    "bm25_minmax",
    "length_ratio",
    "bias",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector(pub [f64; FEATURE_DIM]);

impl FeatureVector {
    pub fn dot(&self, w: &[f64; FEATURE_DIM]) -> f64 {
        self.0.iter().zip(w).map(|(x, w)| x * w).sum()
    }
}

/// Corpus statistics the features are computed against.
pub struct FeatureContext<'a> {
    pub corpus: &'a Corpus,
    pub index: &'a InvertedIndex,
    pub bm25: Bm25Config,
}

struct DocStats {
    terms: BTreeSet<String>,
    len: usize,
    bm25: f64,
}

impl FeatureContext<'_> {
    fn doc_stats(&self, query: &BTreeSet<String>, doc: DocId) -> Result<DocStats> {
        let d = self
            .corpus
            .get(doc)
            .ok_or_else(|| Error::Invalid(format!("doc {doc} is not in the corpus")))?;
        let tokens = self.index.tokenize(&self.index.options().fields.text(d));
        let len = tokens.len();
        let n = self.index.num_docs();
        let avgdl = self.index.avg_doc_len();
        let cfg = &self.bm25;
        let mut bm25 = 0.0;
        for term in query {
            let tf = tokens.iter().filter(|t| *t == term).count();
            if tf == 0 || avgdl == 0.0 {
                continue;
            }
            let tf = tf as f64;
            let norm = cfg.k1 * (1.0 - cfg.b + cfg.b * len as f64 / avgdl);
            bm25 += idf(n, self.index.doc_freq(term)) * tf * (cfg.k1 + 1.0) / (tf + norm);
        }
        Ok(DocStats {
            terms: tokens.into_iter().collect(),
            len,
            bm25,
        })
    }

    /// Features for each candidate of one claim. The BM25 feature is
    /// min-max scaled over `candidates`, so the same pair can score
    /// differently against a different candidate set.
    ///
    /// 0. fraction of distinct claim terms present in the doc
    /// 1. the same fraction weighted by IDF
    /// 2. BM25 score, min-max normalized per claim
    /// 3. min(len) / max(len) of claim and doc token counts
    /// 4. constant 1
    pub fn featurize(&self, claim: &Claim, candidates: &[DocId]) -> Result<Vec<FeatureVector>> {
        let claim_tokens = self.index.tokenize(&claim.text);
        let claim_len = claim_tokens.len();
        let query: BTreeSet<String> = claim_tokens.into_iter().collect();
        let n = self.index.num_docs();
        let weights: Vec<(&String, f64)> = query
            .iter()
            .map(|t| (t, idf(n, self.index.doc_freq(t))))
            .collect();
        let idf_total: f64 = weights.iter().map(|(_, w)| w).sum();

        let stats = candidates
            .iter()
            .map(|&d| self.doc_stats(&query, d))
            .collect::<Result<Vec<_>>>()?;
        let lo = stats.iter().map(|s| s.bm25).fold(f64::INFINITY, f64::min);
        let hi = stats.iter().map(|s| s.bm25).fold(f64::NEG_INFINITY, f64::max);

        Ok(stats
            .iter()
            .map(|s| {
                let shared = query.iter().filter(|t| s.terms.contains(*t)).count();
                let overlap = if query.is_empty() {
                    0.0
                } else {
                    shared as f64 / query.len() as f64
                };
                let idf_overlap = if idf_total > 0.0 {
                    weights
                        .iter()
                        .filter(|(t, _)| s.terms.contains(*t))
                        .map(|(_, w)| w)
                        .sum::<f64>()
                        / idf_total
                } else {
                    0.0
                };
                let bm25 = if hi > lo {
                    (s.bm25 - lo) / (hi - lo)
                } else if hi > 0.0 {
                    1.0
                } else {
                    0.0
                };
                let longest = claim_len.max(s.len);
                let length_ratio = if longest == 0 {
                    0.0
                } else {
                    claim_len.min(s.len) as f64 / longest as f64
                };
                FeatureVector([overlap, idf_overlap, bm25, length_ratio, 1.0])
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ClaimId, Document};
    use crate::lexical::{build_index, IndexOptions};

    fn setup() -> (Corpus, InvertedIndex) {
        let docs = [
            (1, "statins lower cholesterol"),
            (2, "malaria vaccine trial"),
            (3, "cholesterol in adults"),
            (4, "zinc and immunity"),
        ];
        let corpus = Corpus::from_documents(docs.iter().map(|(id, t)| Document {
            doc_id: DocId(*id),
            title: String::new(),
            abstract_sentences: vec![t.to_string()],
        }))
        .unwrap();
        let index = build_index(&corpus, IndexOptions::default());
        (corpus, index)
    }

    fn claim(text: &str) -> Claim {
        Claim {
            claim_id: ClaimId(1),
            text: text.into(),
        }
    }

    #[test]
    fn self_overlap_and_disjoint() {
        let (corpus, index) = setup();
        let ctx = FeatureContext {
            corpus: &corpus,
            index: &index,
            bm25: Bm25Config::default(),
        };
        let f = ctx
            .featurize(&claim("statins lower cholesterol"), &[DocId(1), DocId(2)])
            .unwrap();
        assert_eq!(f[0].0[0], 1.0);
        assert_eq!(f[0].0[1], 1.0);
        assert_eq!(f[0].0[2], 1.0);
        assert_eq!(f[0].0[3], 1.0);
        assert_eq!(f[1].0[0], 0.0);
        assert_eq!(f[1].0[1], 0.0);
        assert_eq!(f[1].0[2], 0.0);
        assert!(f.iter().all(|v| v.0[4] == 1.0));
    }

    #[test]
    fn deterministic_and_finite() {
        let (corpus, index) = setup();
        let ctx = FeatureContext {
            corpus: &corpus,
            index: &index,
            bm25: Bm25Config::default(),
        };
        let docs = [DocId(1), DocId(3), DocId(4)];
        let a = ctx.featurize(&claim("cholesterol in adults"), &docs).unwrap();
        let b = ctx.featurize(&claim("cholesterol in adults"), &docs).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().flat_map(|v| v.0).all(f64::is_finite));
        let empty = ctx.featurize(&claim("---"), &docs).unwrap();
        assert!(empty.iter().all(|v| v.0[..4].iter().all(|x| *x == 0.0)));
    }

    #[test]
    fn unknown_doc_rejected() {
        let (corpus, index) = setup();
        let ctx = FeatureContext {
            corpus: &corpus,
            index: &index,
            bm25: Bm25Config::default(),
        };
        assert!(ctx.featurize(&claim("x"), &[DocId(99)]).is_err());
    }
}
