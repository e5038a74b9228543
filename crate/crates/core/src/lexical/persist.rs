//! Line-oriented index file:
//!
//! ```text
//! evrank-index 1
//! fields title_abstract
//! stopwords <n> <word>...
//! docs <n>
//! <doc_id> <length>          (n lines, ascending doc_id)
//! terms <m>
//! <term> <df> <doc_id>:<tf>...   (m lines, ascending term)
//! ```

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::corpus::DocId;
use crate::error::{Error, Result};

use super::index::{IndexOptions, InvertedIndex, Posting};

pub const INDEX_FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "evrank-index";

pub fn write_index<W: Write>(index: &InvertedIndex, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{MAGIC} {INDEX_FORMAT_VERSION}")?;
    writeln!(w, "fields {}", index.options.fields.as_str())?;
    write!(w, "stopwords {}", index.options.stopwords.len())?;
    for s in &index.options.stopwords {
        write!(w, " {s}")?;
    }
    writeln!(w)?;
    writeln!(w, "docs {}", index.doc_ids.len())?;
    for (id, len) in index.doc_ids.iter().zip(&index.doc_lens) {
        writeln!(w, "{id} {len}")?;
    }
    writeln!(w, "terms {}", index.postings.len())?;
    for (term, ps) in &index.postings {
        write!(w, "{term} {}", ps.len())?;
        for p in ps {
            write!(w, " {}:{}", index.doc_ids[p.doc as usize], p.tf)?;
        }
        writeln!(w)?;
    }
    Ok(())
}

struct Lines<'a, R> {
    inner: std::io::Lines<R>,
    path: &'a Path,
    line_no: usize,
}

impl<R: BufRead> Lines<'_, R> {
    fn next_line(&mut self) -> Result<String> {
        self.line_no += 1;
        match self.inner.next() {
            Some(Ok(l)) => Ok(l),
            Some(Err(e)) => Err(Error::io(self.path, e)),
            None => Err(self.err("unexpected end of file")),
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::parse(self.path, self.line_no, msg)
    }

    fn keyword(&mut self, key: &str) -> Result<Vec<String>> {
        let line = self.next_line()?;
        let mut parts = line.split(' ');
        if parts.next() != Some(key) {
            return Err(self.err(format!("expected `{key}` line")));
        }
        Ok(parts.map(str::to_string).collect())
    }

    fn count(&mut self, key: &str) -> Result<usize> {
        let rest = self.keyword(key)?;
        rest.first()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| self.err(format!("bad `{key}` count")))
    }
}

pub fn read_index<R: BufRead>(reader: R, path: &Path) -> Result<InvertedIndex> {
    let mut lines = Lines {
        inner: reader.lines(),
        path,
        line_no: 0,
    };
    let header = lines.keyword(MAGIC)?;
    if header.first().map(String::as_str) != Some(&INDEX_FORMAT_VERSION.to_string()) {
        return Err(lines.err(format!("unsupported index version {header:?}")));
    }
    let fields = lines.keyword("fields")?;
    let fields = fields
        .first()
        .ok_or_else(|| lines.err("missing fields value"))?
        .parse()
        .map_err(|e: Error| lines.err(e.to_string()))?;
    let stop = lines.keyword("stopwords")?;
    let n_stop: usize = stop
        .first()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| lines.err("bad stopword count"))?;
    if stop.len() != n_stop + 1 {
        return Err(lines.err("stopword count mismatch"));
    }
    let stopwords = stop[1..].iter().cloned().collect();

    let n_docs = lines.count("docs")?;
    let mut doc_ids = Vec::with_capacity(n_docs);
    let mut doc_lens = Vec::with_capacity(n_docs);
    for _ in 0..n_docs {
        let line = lines.next_line()?;
        let (id, len) = line
            .split_once(' ')
            .and_then(|(a, b)| Some((a.parse::<DocId>().ok()?, b.parse::<u32>().ok()?)))
            .ok_or_else(|| lines.err("bad document line"))?;
        doc_ids.push(id);
        doc_lens.push(len);
    }
    let ordinals: BTreeMap<DocId, u32> = doc_ids
        .iter()
        .enumerate()
        .map(|(i, d)| (*d, i as u32))
        .collect();

    let n_terms = lines.count("terms")?;
    let mut postings = BTreeMap::new();
    for _ in 0..n_terms {
        let line = lines.next_line()?;
        let mut parts = line.split(' ');
        let term = parts.next().filter(|t| !t.is_empty());
        let df = parts.next().and_then(|s| s.parse::<usize>().ok());
        let (Some(term), Some(df)) = (term, df) else {
            return Err(lines.err("bad term line"));
        };
        let mut ps = Vec::with_capacity(df);
        for p in parts {
            let posting = p
                .split_once(':')
                .and_then(|(d, tf)| {
                    let doc = *ordinals.get(&d.parse::<DocId>().ok()?)?;
                    Some(Posting {
                        doc,
                        tf: tf.parse().ok()?,
                    })
                })
                .ok_or_else(|| lines.err(format!("bad posting {p:?}")))?;
            ps.push(posting);
        }
        if ps.len() != df {
            return Err(lines.err(format!("term {term:?}: df {df} but {} postings", ps.len())));
        }
        postings.insert(term.to_string(), ps);
    }

    let total_len = doc_lens.iter().map(|&l| u64::from(l)).sum();
    let index = InvertedIndex {
        options: IndexOptions { fields, stopwords },
        doc_ids,
        doc_lens,
        total_len,
        postings,
    };
    index
        .check_invariants()
        .map_err(|m| Error::parse(path, 0, m))?;
    Ok(index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Corpus, Document};
    use crate::lexical::build_index;

    fn toy() -> InvertedIndex {
        let corpus = Corpus::from_documents([
            Document {
                doc_id: DocId(1),
                title: "A".into(),
                abstract_sentences: vec!["b".into()],
            },
            Document {
                doc_id: DocId(2),
                title: String::new(),
                abstract_sentences: vec!["b c".into(), "c".into()],
            },
        ])
        .unwrap();
        build_index(&corpus, IndexOptions::default())
    }

    #[test]
    fn golden_layout() {
        let mut buf = Vec::new();
        write_index(&toy(), &mut buf).unwrap();
        let expected = "evrank-index 1\nfields title_abstract\nstopwords 0\ndocs 2\n1 2\n2 3\nterms 3\na 1 1:1\nb 2 1:1 2:1\nc 1 2:2\n";
        assert_eq!(String::from_utf8(buf).unwrap(), expected);
    }

    #[test]
    fn reads_back_what_it_writes() {
        let idx = toy();
        let mut buf = Vec::new();
        write_index(&idx, &mut buf).unwrap();
        let back = read_index(std::io::Cursor::new(buf), Path::new("mem")).unwrap();
        assert_eq!(back, idx);
    }

    #[test]
    fn rejects_inconsistent_lengths() {
        let text = "evrank-index 1\nfields title_abstract\nstopwords 0\ndocs 1\n1 5\nterms 1\na 1 1:1\n";
        assert!(read_index(std::io::Cursor::new(text), Path::new("mem")).is_err());
    }

    #[test]
    fn rejects_unknown_version() {
        let text = "evrank-index 9\n";
        assert!(read_index(std::io::Cursor::new(text), Path::new("mem")).is_err());
    }
}
