//! Tab-separated score cache, one pair per line:
//! `claim_id  doc_id  s_r  p_support  p_refute  p_nei`.
//!
//! `s_r` is the normalized relevance in [0, 1]. Decimals are written with
//! nine fractional digits. Fusion weight is not stored, so one cache serves
//! any alpha.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::corpus::{ClaimId, DocId};
use crate::error::{Error, Result};

use super::{LabelProbabilities, PairRequest, PairScores, ScoreSource};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreCache {
    entries: BTreeMap<(ClaimId, DocId), PairScores>,
}

impl ScoreCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, claim: ClaimId, doc: DocId, scores: PairScores) {
        self.entries.insert((claim, doc), scores);
    }

    pub fn get(&self, claim: ClaimId, doc: DocId) -> Option<&PairScores> {
        self.entries.get(&(claim, doc))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ClaimId, DocId, &PairScores)> {
        self.entries.iter().map(|((c, d), s)| (*c, *d, s))
    }

    pub fn probabilities(&self, claim: ClaimId, doc: DocId) -> Option<LabelProbabilities> {
        self.get(claim, doc).map(|s| s.probs)
    }
}

impl ScoreSource for ScoreCache {
    fn fetch(&self, pairs: &[PairRequest]) -> Result<Vec<PairScores>> {
        pairs
            .iter()
            .map(|p| {
                self.get(p.claim_id, p.doc_id)
                    .copied()
                    .ok_or(Error::CacheMiss {
                        claim: p.claim_id,
                        doc: p.doc_id,
                    })
            })
            .collect()
    }
}

pub fn write_score_cache<W: Write>(cache: &ScoreCache, mut w: W) -> std::io::Result<()> {
    for (claim, doc, s) in cache.iter() {
        let [ps, pr, pn] = s.probs.as_array();
        writeln!(w, "{claim}\t{doc}\t{:.9}\t{ps:.9}\t{pr:.9}\t{pn:.9}", s.s_r)?;
    }
    Ok(())
}

pub fn read_score_cache(path: &Path) -> Result<ScoreCache> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut cache = ScoreCache::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 6 {
            return Err(Error::parse(path, line_no, "expected 6 tab-separated fields"));
        }
        let err = |m: String| Error::parse(path, line_no, m);
        let claim: ClaimId = fields[0].parse().map_err(|_| err("bad claim_id".into()))?;
        let doc: DocId = fields[1].parse().map_err(|_| err("bad doc_id".into()))?;
        let mut nums = [0.0f64; 4];
        for (slot, raw) in nums.iter_mut().zip(&fields[2..]) {
            *slot = raw
                .trim()
                .parse()
                .map_err(|_| err(format!("bad decimal {raw:?}")))?;
        }
        let [s_r, ps, pr, pn] = nums;
        if !(0.0..=1.0).contains(&s_r) {
            return Err(err(format!("s_r {s_r} outside [0, 1]")));
        }
        let probs = LabelProbabilities::new(ps, pr, pn).map_err(|e| err(e.to_string()))?;
        if cache.get(claim, doc).is_some() {
            return Err(err(format!("duplicate pair ({claim}, {doc})")));
        }
        cache.insert(claim, doc, PairScores { s_r, probs });
    }
    Ok(cache)
}
