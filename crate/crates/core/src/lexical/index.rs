use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use rayon::prelude::*;

use crate::corpus::{document_text, Corpus, DocId, Document};
use crate::error::Error;

use super::tokenize::tokenize_filtered;

/// Which document fields feed the index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IndexedFields {
    #[default]
    TitleAbstract,
    Abstract,
}

impl IndexedFields {
    pub fn as_str(self) -> &'static str {
        match self {
            IndexedFields::TitleAbstract => "title_abstract",
            IndexedFields::Abstract => "abstract",
        }
    }

    pub fn text(self, doc: &Document) -> String {
        match self {
            IndexedFields::TitleAbstract => document_text(doc),
            IndexedFields::Abstract => doc.abstract_sentences.join(" "),
        }
    }
}

impl FromStr for IndexedFields {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "title_abstract" => Ok(IndexedFields::TitleAbstract),
            "abstract" => Ok(IndexedFields::Abstract),
            other => Err(Error::Config(format!("unknown index fields {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IndexOptions {
    pub fields: IndexedFields,
    pub stopwords: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Posting {
    /// Ordinal into `doc_ids`; ordinals follow ascending doc_id.
    pub doc: u32,
    pub tf: u32,
}

/// Term → postings over a fixed document set. Postings are sorted by
/// doc_id and each document's term frequencies sum to its stored length.
#[derive(Debug, Clone, PartialEq)]
pub struct InvertedIndex {
    pub(crate) options: IndexOptions,
    pub(crate) doc_ids: Vec<DocId>,
    pub(crate) doc_lens: Vec<u32>,
    pub(crate) total_len: u64,
    pub(crate) postings: BTreeMap<String, Vec<Posting>>,
}

impl InvertedIndex {
    pub fn options(&self) -> &IndexOptions {
        &self.options
    }

    pub fn num_docs(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn num_terms(&self) -> usize {
        self.postings.len()
    }

    pub fn avg_doc_len(&self) -> f64 {
        if self.doc_ids.is_empty() {
            0.0
        } else {
            self.total_len as f64 / self.doc_ids.len() as f64
        }
    }

    pub fn doc_ids(&self) -> &[DocId] {
        &self.doc_ids
    }

    pub(crate) fn ordinal(&self, doc: DocId) -> Option<usize> {
        self.doc_ids.binary_search(&doc).ok()
    }

    pub fn doc_len(&self, doc: DocId) -> Option<u32> {
        self.ordinal(doc).map(|i| self.doc_lens[i])
    }

    pub fn doc_freq(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    /// `(doc_id, term frequency)` pairs for `term`, ascending by doc_id.
    pub fn postings(&self, term: &str) -> Option<Vec<(DocId, u32)>> {
        self.postings.get(term).map(|ps| {
            ps.iter()
                .map(|p| (self.doc_ids[p.doc as usize], p.tf))
                .collect()
        })
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.postings.keys().map(String::as_str)
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        tokenize_filtered(text, &self.options.stopwords)
    }

    /// Verifies the structural invariants; used after loading from disk.
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.doc_ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err("doc ids not strictly ascending".into());
        }
        if self.doc_ids.len() != self.doc_lens.len() {
            return Err("doc id / length count mismatch".into());
        }
        let mut sums = vec![0u64; self.doc_ids.len()];
        for (term, ps) in &self.postings {
            if ps.is_empty() {
                return Err(format!("term {term:?} has no postings"));
            }
            if ps.windows(2).any(|w| w[0].doc >= w[1].doc) {
                return Err(format!("postings for {term:?} not sorted by doc_id"));
            }
            for p in ps {
                let slot = sums
                    .get_mut(p.doc as usize)
                    .ok_or_else(|| format!("posting for {term:?} points past the last document"))?;
                if p.tf == 0 {
                    return Err(format!("zero term frequency for {term:?}"));
                }
                *slot += u64::from(p.tf);
            }
        }
        for (i, (sum, len)) in sums.iter().zip(&self.doc_lens).enumerate() {
            if *sum != u64::from(*len) {
                return Err(format!(
                    "doc {}: stored length {len} but frequencies sum to {sum}",
                    self.doc_ids[i]
                ));
            }
        }
        if self.total_len != self.doc_lens.iter().map(|&l| u64::from(l)).sum::<u64>() {
            return Err("total length does not match document lengths".into());
        }
        Ok(())
    }
}

/// Tokenizes documents in parallel, then merges in doc_id order so the
/// result does not depend on scheduling.
pub fn build_index(corpus: &Corpus, options: IndexOptions) -> InvertedIndex {
    let docs: Vec<&Document> = corpus.iter().collect();
    let per_doc: Vec<BTreeMap<String, u32>> = docs
        .par_iter()
        .map(|doc| {
            let mut counts = BTreeMap::new();
            for t in tokenize_filtered(&options.fields.text(doc), &options.stopwords) {
                *counts.entry(t).or_insert(0u32) += 1;
            }
            counts
        })
        .collect();

    let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
    let mut doc_lens = Vec::with_capacity(docs.len());
    let mut total_len = 0u64;
    for (ordinal, counts) in per_doc.into_iter().enumerate() {
        let len: u32 = counts.values().sum();
        doc_lens.push(len);
        total_len += u64::from(len);
        for (term, tf) in counts {
            postings.entry(term).or_default().push(Posting {
                doc: ordinal as u32,
                tf,
            });
        }
    }

    InvertedIndex {
        options,
        doc_ids: docs.iter().map(|d| d.doc_id).collect(),
        doc_lens,
        total_len,
        postings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: u64, text: &str) -> Document {
        Document {
            doc_id: DocId(id),
            title: String::new(),
            abstract_sentences: vec![text.to_string()],
        }
    }

    #[test]
    fn toy_postings() {
        let corpus = Corpus::from_documents([doc(1, "a b"), doc(2, "b c")]).unwrap();
        let idx = build_index(&corpus, IndexOptions::default());
        assert_eq!(idx.postings("a").unwrap(), vec![(DocId(1), 1)]);
        assert_eq!(idx.postings("b").unwrap(), vec![(DocId(1), 1), (DocId(2), 1)]);
        assert_eq!(idx.postings("c").unwrap(), vec![(DocId(2), 1)]);
        assert_eq!(idx.avg_doc_len(), 2.0);
        idx.check_invariants().unwrap();
    }

    #[test]
    fn empty_corpus_gives_empty_index() {
        let idx = build_index(&Corpus::default(), IndexOptions::default());
        assert_eq!(idx.num_docs(), 0);
        assert_eq!(idx.num_terms(), 0);
        assert_eq!(idx.avg_doc_len(), 0.0);
    }

    #[test]
    fn reindex_is_identical() {
        let corpus =
            Corpus::from_documents([doc(3, "x y z x"), doc(1, "y y"), doc(2, "q")]).unwrap();
        let a = build_index(&corpus, IndexOptions::default());
        let b = build_index(&corpus, IndexOptions::default());
        assert_eq!(a, b);
        assert_eq!(a.doc_len(DocId(3)), Some(4));
    }

    #[test]
    fn abstract_only_fields_skip_title() {
        let d = Document {
            doc_id: DocId(1),
            title: "Title".into(),
            abstract_sentences: vec!["body".into()],
        };
        let corpus = Corpus::from_documents([d]).unwrap();
        let opts = IndexOptions {
            fields: IndexedFields::Abstract,
            ..Default::default()
        };
        let idx = build_index(&corpus, opts);
        assert_eq!(idx.doc_freq("title"), 0);
        assert_eq!(idx.doc_freq("body"), 1);
    }
}
