//! First-stage lexical retrieval: tokenization, an inverted index and
//! Okapi BM25 ranking.

mod bm25;
mod index;
mod persist;
mod tokenize;

pub use bm25::{bm25_search, bm25_search_text, idf, search_all, Bm25Config};
pub use index::{build_index, IndexOptions, IndexedFields, InvertedIndex};
pub use persist::{read_index, write_index, INDEX_FORMAT_VERSION};
pub use tokenize::{tokenize, tokenize_filtered};
