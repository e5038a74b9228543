//! Ranked candidate lists and TREC-style run files.
//!
//! Run lines are `claim_id Q0 doc_id rank score tag`. Scores are written
//! with Rust's shortest round-trip float formatting so a list read back
//! from disk compares equal to the one that was written.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::corpus::{ClaimId, DocId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankedEntry {
    pub doc_id: DocId,
    pub score: f64,
    /// 1-based.
    pub rank: usize,
}

/// Invariants: ranks run 1..=n, scores are non-increasing, doc_ids distinct.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub claim_id: ClaimId,
    entries: Vec<RankedEntry>,
}

impl RankedList {
    pub fn empty(claim_id: ClaimId) -> Self {
        RankedList {
            claim_id,
            entries: Vec::new(),
        }
    }

    /// Sorts by descending score with ties broken by ascending doc_id,
    /// truncates to `k` and assigns ranks. NaN scores are rejected.
    pub fn from_scores(
        claim_id: ClaimId,
        scores: impl IntoIterator<Item = (DocId, f64)>,
        k: usize,
    ) -> Result<Self> {
        let mut scored: Vec<(DocId, f64)> = scores.into_iter().collect();
        if let Some((d, _)) = scored.iter().find(|(_, s)| s.is_nan()) {
            return Err(Error::Invalid(format!(
                "claim {claim_id}: NaN score for doc {d}"
            )));
        }
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let mut seen = std::collections::HashSet::with_capacity(scored.len());
        if scored.iter().any(|(d, _)| !seen.insert(*d)) {
            return Err(Error::Invalid(format!(
                "claim {claim_id}: duplicate doc_id in candidate scores"
            )));
        }
        scored.truncate(k);
        Ok(Self::from_sorted_unchecked(claim_id, scored))
    }

    pub(crate) fn from_sorted_unchecked(claim_id: ClaimId, sorted: Vec<(DocId, f64)>) -> Self {
        let entries = sorted
            .into_iter()
            .enumerate()
            .map(|(i, (doc_id, score))| RankedEntry {
                doc_id,
                score,
                rank: i + 1,
            })
            .collect();
        RankedList { claim_id, entries }
    }

    /// Builds a list from entries already in rank order, checking the invariants.
    pub fn from_entries(claim_id: ClaimId, entries: Vec<RankedEntry>) -> Result<Self> {
        let list = RankedList { claim_id, entries };
        list.check()?;
        Ok(list)
    }

    fn check(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::with_capacity(self.entries.len());
        for (i, e) in self.entries.iter().enumerate() {
            if e.rank != i + 1 {
                return Err(Error::Invalid(format!(
                    "claim {}: ranks not contiguous at position {}",
                    self.claim_id,
                    i + 1
                )));
            }
            if !seen.insert(e.doc_id) {
                return Err(Error::Invalid(format!(
                    "claim {}: doc {} listed twice",
                    self.claim_id, e.doc_id
                )));
            }
            if i > 0 && e.score > self.entries[i - 1].score {
                return Err(Error::Invalid(format!(
                    "claim {}: score increases at rank {}",
                    self.claim_id, e.rank
                )));
            }
        }
        Ok(())
    }

    pub fn entries(&self) -> &[RankedEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = DocId> + '_ {
        self.entries.iter().map(|e| e.doc_id)
    }

    pub fn top(&self, k: usize) -> &[RankedEntry] {
        &self.entries[..k.min(self.entries.len())]
    }

    pub fn truncated(&self, k: usize) -> RankedList {
        RankedList {
            claim_id: self.claim_id,
            entries: self.top(k).to_vec(),
        }
    }
}

/// Per-claim run, keyed and iterated by claim_id.
pub type Run = BTreeMap<ClaimId, RankedList>;

pub fn write_run<'a, W: Write>(
    lists: impl IntoIterator<Item = &'a RankedList>,
    tag: &str,
    mut w: W,
) -> std::io::Result<()> {
    for list in lists {
        for e in list.entries() {
            writeln!(
                w,
                "{} Q0 {} {} {} {}",
                list.claim_id, e.doc_id, e.rank, e.score, tag
            )?;
        }
    }
    Ok(())
}

pub fn read_run(path: &Path) -> Result<Run> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut raw: BTreeMap<ClaimId, Vec<RankedEntry>> = BTreeMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(Error::parse(path, line_no, "expected 6 whitespace-separated fields"));
        }
        let bad = |what: &str| Error::parse(path, line_no, format!("invalid {what}"));
        let claim: ClaimId = fields[0].parse().map_err(|_| bad("claim_id"))?;
        let doc_id: DocId = fields[2].parse().map_err(|_| bad("doc_id"))?;
        let rank: usize = fields[3].parse().map_err(|_| bad("rank"))?;
        let score: f64 = fields[4].parse().map_err(|_| bad("score"))?;
        raw.entry(claim).or_default().push(RankedEntry { doc_id, score, rank });
    }
    let mut run = Run::new();
    for (claim, mut entries) in raw {
        entries.sort_by_key(|e| e.rank);
        let list = RankedList::from_entries(claim, entries).map_err(|e| match e {
            Error::Invalid(m) => Error::parse(path, 0, m),
            other => other,
        })?;
        run.insert(claim, list);
    }
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorts_with_doc_id_tie_break() {
        let l = RankedList::from_scores(
            ClaimId(1),
            [(DocId(9), 0.5), (DocId(3), 0.5), (DocId(4), 0.9)],
            10,
        )
        .unwrap();
        let ids: Vec<_> = l.doc_ids().map(|d| d.0).collect();
        assert_eq!(ids, vec![4, 3, 9]);
        assert_eq!(l.entries()[2].rank, 3);
    }

    #[test]
    fn rejects_bad_entries() {
        let e = |d, s, r| RankedEntry {
            doc_id: DocId(d),
            score: s,
            rank: r,
        };
        assert!(RankedList::from_entries(ClaimId(1), vec![e(1, 1.0, 1), e(2, 2.0, 2)]).is_err());
        assert!(RankedList::from_entries(ClaimId(1), vec![e(1, 1.0, 1), e(1, 0.5, 2)]).is_err());
        assert!(RankedList::from_entries(ClaimId(1), vec![e(1, 1.0, 2)]).is_err());
    }

    #[test]
    fn run_file_round_trip() {
        let l = RankedList::from_scores(
            ClaimId(7),
            [(DocId(1), 12.345678901234), (DocId(2), 0.1 + 0.2)],
            10,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_run([&l], "bm25", &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("7 Q0 1 1 12.345678901234 bm25\n"));
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.txt");
        std::fs::write(&p, text).unwrap();
        let run = read_run(&p).unwrap();
        assert_eq!(run[&ClaimId(7)], l);
    }
}
