//! Predictions from a reranker trained outside this crate, as JSONL lines
//! `{"claim_id": .., "doc_id": .., "score": ..}` with `score` in [0, 1].

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;

use crate::corpus::{ClaimId, DocId};
use crate::error::{Error, Result};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Line {
    claim_id: ClaimId,
    doc_id: DocId,
    score: f64,
}

pub type Predictions = BTreeMap<ClaimId, BTreeMap<DocId, f64>>;

pub fn load_external_predictions(path: &Path) -> Result<Predictions> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Predictions::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let p: Line =
            serde_json::from_str(&line).map_err(|e| Error::parse(path, line_no, e.to_string()))?;
        if !(0.0..=1.0).contains(&p.score) {
            return Err(Error::parse(
                path,
                line_no,
                format!("score {} outside [0, 1]", p.score),
            ));
        }
        if out
            .entry(p.claim_id)
            .or_default()
            .insert(p.doc_id, p.score)
            .is_some()
        {
            return Err(Error::parse(
                path,
                line_no,
                format!("duplicate prediction for ({}, {})", p.claim_id, p.doc_id),
            ));
        }
    }
    Ok(out)
}
