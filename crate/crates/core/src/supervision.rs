//! Training data for the two learned components.
//!
//! * Verifier fine-tuning: every gold pair with its label, plus `N` negatives
//!   per claim drawn uniformly from the BM25 top-`pool_depth` after removing
//!   gold documents. Negatives are labelled NEI.
//! * Reranker training: the claim's top documents by `s_combo` together with
//!   any gold document not already among them. Gold targets are 1.0, every
//!   other target is the pair's `s_combo`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{ClaimId, DocId, GoldStandard, Label};
use crate::error::{Error, Result};
use crate::run::{RankedList, Run};
use crate::scoring::ScoreRecord;

pub const DEFAULT_POOL_DEPTH: usize = 100;
pub const DEFAULT_TRAIN_TOP: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplingConfig {
    pub n_negatives: usize,
    pub pool_depth: usize,
    pub rng_seed: u64,
}

impl SamplingConfig {
    pub fn new(n_negatives: usize, pool_depth: usize, rng_seed: u64) -> Result<Self> {
        if n_negatives == 0 {
            return Err(Error::Config("n_negatives must be at least 1".into()));
        }
        if pool_depth < n_negatives {
            return Err(Error::Config(format!(
                "pool depth {pool_depth} is smaller than n_negatives {n_negatives}"
            )));
        }
        Ok(SamplingConfig {
            n_negatives,
            pool_depth,
            rng_seed,
        })
    }

    /// Per-claim stream seed. XOR keeps each claim's draw independent of
    /// which other claims are present.
    pub fn claim_seed(&self, claim: ClaimId) -> u64 {
        self.rng_seed ^ claim.0
    }
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            n_negatives: 5,
            pool_depth: DEFAULT_POOL_DEPTH,
            rng_seed: 0,
        }
    }
}

/// Uniform sample without replacement from the BM25 pool minus gold.
/// Returned ids are sorted ascending.
pub fn sample_negatives(
    bm25_list: &RankedList,
    gold: &BTreeSet<DocId>,
    cfg: &SamplingConfig,
) -> Vec<DocId> {
    let claim = bm25_list.claim_id;
    if bm25_list.len() < cfg.pool_depth {
        warn!(
            "claim {claim}: candidate pool has {} documents, fewer than {}",
            bm25_list.len(),
            cfg.pool_depth
        );
    }
    let pool: Vec<DocId> = bm25_list
        .top(cfg.pool_depth)
        .iter()
        .map(|e| e.doc_id)
        .filter(|d| !gold.contains(d))
        .collect();
    let amount = cfg.n_negatives.min(pool.len());
    if amount < cfg.n_negatives {
        warn!(
            "claim {claim}: only {} non-gold candidates for {} negatives",
            pool.len(),
            cfg.n_negatives
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.claim_seed(claim));
    let mut picked: Vec<DocId> = rand::seq::index::sample(&mut rng, pool.len(), amount)
        .into_iter()
        .map(|i| pool[i])
        .collect();
    picked.sort_unstable();
    picked
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VerifierExample {
    pub claim_id: ClaimId,
    pub doc_id: DocId,
    pub label: Label,
}

fn gold_docs(gold: &GoldStandard, claim: ClaimId) -> BTreeSet<DocId> {
    gold.docs_for(claim)
        .map(|m| m.keys().copied().collect())
        .unwrap_or_default()
}

/// Gold pairs with their labels plus sampled NEI negatives, sorted by
/// (claim_id, doc_id).
pub fn build_verifier_train_set(
    claims: &[ClaimId],
    bm25: &Run,
    gold: &GoldStandard,
    cfg: &SamplingConfig,
) -> Result<Vec<VerifierExample>> {
    let mut out = Vec::new();
    for &claim in claims {
        let list = bm25.get(&claim).ok_or_else(|| {
            Error::Invalid(format!("claim {claim} has no BM25 ranking"))
        })?;
        if let Some(docs) = gold.docs_for(claim) {
            out.extend(docs.iter().map(|(d, l)| VerifierExample {
                claim_id: claim,
                doc_id: *d,
                label: *l,
            }));
        }
        let negatives = sample_negatives(list, &gold_docs(gold, claim), cfg);
        out.extend(negatives.into_iter().map(|d| VerifierExample {
            claim_id: claim,
            doc_id: d,
            label: Label::Nei,
        }));
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// Invariant: `is_gold` implies `target == 1.0`; otherwise `target` is the
/// pair's `s_combo`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub claim_id: ClaimId,
    pub doc_id: DocId,
    pub target: f64,
    pub is_gold: bool,
}

pub fn build_reranker_train_set(
    claims: &[ClaimId],
    combo_run: &Run,
    records: &[ScoreRecord],
    gold: &GoldStandard,
    top_n: usize,
) -> Result<Vec<TrainingExample>> {
    let by_pair: BTreeMap<(ClaimId, DocId), &ScoreRecord> = records
        .iter()
        .map(|r| ((r.claim_id, r.doc_id), r))
        .collect();
    let mut out = Vec::new();
    for &claim in claims {
        let list = combo_run.get(&claim).ok_or_else(|| {
            Error::Invalid(format!("claim {claim} has no fused ranking"))
        })?;
        let golds = gold_docs(gold, claim);
        let selected: BTreeSet<DocId> = list
            .top(top_n)
            .iter()
            .map(|e| e.doc_id)
            .chain(golds.iter().copied())
            .collect();
        for doc in selected {
            if golds.contains(&doc) {
                out.push(TrainingExample {
                    claim_id: claim,
                    doc_id: doc,
                    target: 1.0,
                    is_gold: true,
                });
                continue;
            }
            let rec = by_pair
                .get(&(claim, doc))
                .ok_or(Error::CacheMiss { claim, doc })?;
            out.push(TrainingExample {
                claim_id: claim,
                doc_id: doc,
                target: rec.s_combo,
                is_gold: false,
            });
        }
    }
    out.sort_by_key(|e| (e.claim_id, e.doc_id));
    out.dedup_by_key(|e| (e.claim_id, e.doc_id));
    Ok(out)
}

fn write_jsonl<T: Serialize, W: Write>(items: &[T], mut w: W) -> std::io::Result<()> {
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<(usize, T)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        out.push((i + 1, item));
    }
    Ok(out)
}

pub fn write_verifier_train<W: Write>(examples: &[VerifierExample], w: W) -> std::io::Result<()> {
    write_jsonl(examples, w)
}

pub fn read_verifier_train(path: &Path) -> Result<Vec<VerifierExample>> {
    Ok(read_jsonl(path)?.into_iter().map(|(_, e)| e).collect())
}

pub fn write_reranker_train<W: Write>(examples: &[TrainingExample], w: W) -> std::io::Result<()> {
    write_jsonl(examples, w)
}

pub fn read_reranker_train(path: &Path) -> Result<Vec<TrainingExample>> {
    let mut seen = BTreeSet::new();
    read_jsonl::<TrainingExample>(path)?
        .into_iter()
        .map(|(line, e)| {
            if !(0.0..=1.0).contains(&e.target) {
                return Err(Error::parse(path, line, format!("target {} outside [0, 1]", e.target)));
            }
            if e.is_gold && e.target != 1.0 {
                return Err(Error::parse(path, line, "gold example with target below 1"));
            }
            if !seen.insert((e.claim_id, e.doc_id)) {
                return Err(Error::parse(path, line, "duplicate (claim, doc) pair"));
            }
            Ok(e)
        })
        .collect()
}
