//! Per-pair relevance and verification signals and their linear fusion.
//!
//! For a (claim, doc) pair the verifier gives a distribution over
//! SUPPORT / REFUTE / NEI. Verification feedback is the probability mass on
//! the two verdict labels, `s_v = p_support + p_refute`. The relevance
//! signal `s_r` is the sigmoid of a reranker logit. They are combined as
//!
//! ```text
//! s_combo = alpha * s_v + (1 - alpha) * s_r
//! ```

mod cache;
mod service;

use std::str::FromStr;

use crate::corpus::{document_text, Claim, ClaimId, Corpus, DocId};
use crate::error::{Error, Result};
use crate::run::{RankedList, Run};

pub use cache::{read_score_cache, write_score_cache, ScoreCache};
pub use service::{ServiceClient, ServiceConfig};

pub const DEFAULT_ALPHA: f64 = 0.5;

/// Tolerance on the probability sum.
pub const PROB_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelProbabilities {
    p_support: f64,
    p_refute: f64,
    p_nei: f64,
}

impl LabelProbabilities {
    pub fn new(p_support: f64, p_refute: f64, p_nei: f64) -> Result<Self> {
        for (name, p) in [("support", p_support), ("refute", p_refute), ("nei", p_nei)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Invalid(format!("p_{name} = {p} outside [0, 1]")));
            }
        }
        let sum = p_support + p_refute + p_nei;
        if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
            return Err(Error::Invalid(format!(
                "label probabilities sum to {sum}, not 1"
            )));
        }
        Ok(LabelProbabilities {
            p_support,
            p_refute,
            p_nei,
        })
    }

    pub fn p_support(&self) -> f64 {
        self.p_support
    }

    pub fn p_refute(&self) -> f64 {
        self.p_refute
    }

    pub fn p_nei(&self) -> f64 {
        self.p_nei
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.p_support, self.p_refute, self.p_nei]
    }
}

/// `p_support + p_refute`; the NEI probability is ignored.
pub fn verification_feedback(probs: &LabelProbabilities) -> f64 {
    (probs.p_support + probs.p_refute).min(1.0)
}

/// Logistic sigmoid, kept inside the open interval (0, 1).
pub fn normalize_relevance(raw_logit: f64) -> Result<f64> {
    if !raw_logit.is_finite() {
        return Err(Error::Invalid(format!("relevance logit {raw_logit} is not finite")));
    }
    let s = if raw_logit >= 0.0 {
        1.0 / (1.0 + (-raw_logit).exp())
    } else {
        let e = raw_logit.exp();
        e / (1.0 + e)
    };
    const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;
    Ok(s.clamp(f64::MIN_POSITIVE, BELOW_ONE))
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Invalid(format!("{name} = {x} outside [0, 1]")))
    }
}

pub fn combo_score(s_v: f64, s_r: f64, alpha: f64) -> Result<f64> {
    check_unit("s_v", s_v)?;
    check_unit("s_r", s_r)?;
    check_unit("alpha", alpha)?;
    Ok(alpha * s_v + (1.0 - alpha) * s_r)
}

/// Relevance score and verifier distribution for one (claim, doc) pair,
/// before fusion. This is what the score cache stores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairScores {
    pub s_r: f64,
    pub probs: LabelProbabilities,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreRecord {
    pub claim_id: ClaimId,
    pub doc_id: DocId,
    pub s_r: f64,
    pub s_v: f64,
    pub alpha: f64,
    pub s_combo: f64,
}

impl ScoreRecord {
    pub fn new(claim_id: ClaimId, doc_id: DocId, scores: &PairScores, alpha: f64) -> Result<Self> {
        let s_v = verification_feedback(&scores.probs);
        let s_combo = combo_score(s_v, scores.s_r, alpha)?;
        Ok(ScoreRecord {
            claim_id,
            doc_id,
            s_r: scores.s_r,
            s_v,
            alpha,
            s_combo,
        })
    }

    /// Recomputes `s_combo` from the components.
    pub fn check(&self) -> Result<()> {
        let expected = combo_score(self.s_v, self.s_r, self.alpha)?;
        check_unit("s_combo", self.s_combo)?;
        if (expected - self.s_combo).abs() > 1e-9 {
            return Err(Error::Invalid(format!(
                "(claim {}, doc {}): s_combo {} != {}",
                self.claim_id, self.doc_id, self.s_combo, expected
            )));
        }
        Ok(())
    }
}

/// Which signal orders a candidate list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RankSignal {
    #[default]
    Combo,
    Relevance,
    Verification,
}

impl RankSignal {
    fn of(self, r: &ScoreRecord) -> f64 {
        match self {
            RankSignal::Combo => r.s_combo,
            RankSignal::Relevance => r.s_r,
            RankSignal::Verification => r.s_v,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RankSignal::Combo => "combo",
            RankSignal::Relevance => "relevance",
            RankSignal::Verification => "verification",
        }
    }
}

impl FromStr for RankSignal {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "combo" => Ok(RankSignal::Combo),
            "relevance" => Ok(RankSignal::Relevance),
            "verification" => Ok(RankSignal::Verification),
            other => Err(Error::Config(format!("unknown ranking signal {other:?}"))),
        }
    }
}

/// Orders one claim's records by `signal` (descending, ties by ascending
/// doc_id) and keeps the first `k`.
pub fn rank_by(
    claim_id: ClaimId,
    records: &[ScoreRecord],
    k: usize,
    signal: RankSignal,
) -> Result<RankedList> {
    if let Some(r) = records.iter().find(|r| r.claim_id != claim_id) {
        return Err(Error::Invalid(format!(
            "record for claim {} passed while ranking claim {claim_id}",
            r.claim_id
        )));
    }
    RankedList::from_scores(
        claim_id,
        records.iter().map(|r| (r.doc_id, signal.of(r))),
        k,
    )
}

pub fn rank_by_combo(claim_id: ClaimId, records: &[ScoreRecord], k: usize) -> Result<RankedList> {
    rank_by(claim_id, records, k, RankSignal::Combo)
}

/// One pair to score, with the texts a remote scorer needs.
#[derive(Debug, Clone)]
pub struct PairRequest {
    pub claim_id: ClaimId,
    pub doc_id: DocId,
    pub claim_text: String,
    pub doc_text: String,
}

/// Anything that can produce [`PairScores`] for a batch of pairs. Results
/// are positionally aligned with the requests.
pub trait ScoreSource {
    fn fetch(&self, pairs: &[PairRequest]) -> Result<Vec<PairScores>>;
}

/// Where scores come from: exactly one of a cache file or a service.
#[derive(Debug, Clone, PartialEq)]
pub enum ScorerBinding {
    Cache(std::path::PathBuf),
    Service(ServiceConfig),
}

impl ScorerBinding {
    pub fn open(&self) -> Result<Box<dyn ScoreSource>> {
        match self {
            ScorerBinding::Cache(path) => Ok(Box::new(read_score_cache(path)?)),
            ScorerBinding::Service(cfg) => Ok(Box::new(ServiceClient::new(cfg.clone())?)),
        }
    }
}

/// Builds the request list for every (claim, doc) pair in `run`, in claim
/// then rank order. Claims absent from `run` contribute nothing.
pub fn candidate_requests(claims: &[Claim], run: &Run, corpus: &Corpus) -> Result<Vec<PairRequest>> {
    let mut out = Vec::new();
    let mut sorted: Vec<&Claim> = claims.iter().collect();
    sorted.sort_by_key(|c| c.claim_id);
    for claim in sorted {
        let Some(list) = run.get(&claim.claim_id) else {
            continue;
        };
        for doc_id in list.doc_ids() {
            let doc = corpus.get(doc_id).ok_or_else(|| {
                Error::Invalid(format!(
                    "run lists doc {doc_id} for claim {} but the corpus has no such document",
                    claim.claim_id
                ))
            })?;
            out.push(PairRequest {
                claim_id: claim.claim_id,
                doc_id,
                claim_text: claim.text.clone(),
                doc_text: document_text(doc),
            });
        }
    }
    Ok(out)
}

pub fn fuse(
    requests: &[PairRequest],
    scores: &[PairScores],
    alpha: f64,
) -> Result<Vec<ScoreRecord>> {
    if requests.len() != scores.len() {
        return Err(Error::Invalid(format!(
            "{} pairs requested but {} scores returned",
            requests.len(),
            scores.len()
        )));
    }
    requests
        .iter()
        .zip(scores)
        .map(|(req, s)| ScoreRecord::new(req.claim_id, req.doc_id, s, alpha))
        .collect()
}

/// One [`ScoreRecord`] per (claim, doc) pair in `run`. Missing cache
/// entries are errors; nothing is defaulted.
pub fn score_candidates(
    claims: &[Claim],
    run: &Run,
    corpus: &Corpus,
    source: &dyn ScoreSource,
    alpha: f64,
) -> Result<Vec<ScoreRecord>> {
    check_unit("alpha", alpha)?;
    let requests = candidate_requests(claims, run, corpus)?;
    let scores = source.fetch(&requests)?;
    fuse(&requests, &scores, alpha)
}

/// Groups records by claim and ranks each group by `signal`.
pub fn rank_run(records: &[ScoreRecord], k: usize, signal: RankSignal) -> Result<Run> {
    let mut grouped: std::collections::BTreeMap<ClaimId, Vec<ScoreRecord>> = Default::default();
    for r in records {
        grouped.entry(r.claim_id).or_default().push(*r);
    }
    grouped
        .into_iter()
        .map(|(claim, recs)| Ok((claim, rank_by(claim, &recs, k, signal)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn probs(s: f64, r: f64, n: f64) -> LabelProbabilities {
        LabelProbabilities::new(s, r, n).unwrap()
    }

    #[test]
    fn feedback_examples() {
        assert!((verification_feedback(&probs(0.5, 0.3, 0.2)) - 0.8).abs() < 1e-15);
        assert_eq!(verification_feedback(&probs(0.0, 0.0, 1.0)), 0.0);
        assert_eq!(verification_feedback(&probs(1.0, 0.0, 0.0)), 1.0);
    }

    #[test]
    fn invalid_distribution_rejected() {
        assert!(LabelProbabilities::new(0.5, 0.5, 0.5).is_err());
        assert!(LabelProbabilities::new(-0.1, 0.6, 0.5).is_err());
        assert!(LabelProbabilities::new(0.5, 0.3, 0.2000005).is_ok());
    }

    #[test]
    fn sigmoid_examples() {
        assert_eq!(normalize_relevance(0.0).unwrap(), 0.5);
        let hi = normalize_relevance(1000.0).unwrap();
        assert!(hi < 1.0 && hi > 0.999);
        let lo = normalize_relevance(-1000.0).unwrap();
        assert!(lo > 0.0 && lo < 1e-300);
        for x in [0.1, 1.0, 3.7, 20.0] {
            let s = normalize_relevance(x).unwrap() + normalize_relevance(-x).unwrap();
            assert!((s - 1.0).abs() < 1e-15);
        }
        assert!(normalize_relevance(f64::NAN).is_err());
        assert!(normalize_relevance(f64::INFINITY).is_err());
    }

    #[test]
    fn combo_examples() {
        assert!((combo_score(0.8, 0.6, 0.5).unwrap() - 0.7).abs() < 1e-15);
        assert_eq!(combo_score(0.3, 0.9, 0.0).unwrap(), 0.9);
        assert_eq!(combo_score(0.3, 0.9, 1.0).unwrap(), 0.3);
        assert!(combo_score(1.2, 0.5, 0.5).is_err());
        assert!(combo_score(0.2, 0.5, -0.1).is_err());
    }

    #[test]
    fn service_style_record() {
        let scores = PairScores {
            s_r: normalize_relevance(0.0).unwrap(),
            probs: probs(0.2, 0.2, 0.6),
        };
        let r = ScoreRecord::new(ClaimId(1), DocId(2), &scores, 0.5).unwrap();
        assert!((r.s_v - 0.4).abs() < 1e-15);
        assert_eq!(r.s_r, 0.5);
        assert!((r.s_combo - 0.45).abs() < 1e-15);
        r.check().unwrap();
    }

    fn rec(doc: u64, s_r: f64, s_v: f64, alpha: f64) -> ScoreRecord {
        ScoreRecord {
            claim_id: ClaimId(1),
            doc_id: DocId(doc),
            s_r,
            s_v,
            alpha,
            s_combo: combo_score(s_v, s_r, alpha).unwrap(),
        }
    }

    #[test]
    fn ranking_order_and_ties() {
        let recs = [rec(1, 0.9, 0.9, 0.5), rec(2, 0.1, 0.1, 0.5)];
        let ids: Vec<_> = rank_by_combo(ClaimId(1), &recs, 10).unwrap().doc_ids().collect();
        assert_eq!(ids, [DocId(1), DocId(2)]);

        let tied = [rec(8, 0.4, 0.4, 0.5), rec(3, 0.4, 0.4, 0.5)];
        let ids: Vec<_> = rank_by_combo(ClaimId(1), &tied, 10).unwrap().doc_ids().collect();
        assert_eq!(ids, [DocId(3), DocId(8)]);
    }

    #[test]
    fn alpha_zero_matches_relevance_order() {
        let recs = [rec(1, 0.2, 0.9, 0.0), rec(2, 0.7, 0.1, 0.0), rec(3, 0.5, 0.5, 0.0)];
        let combo = rank_by_combo(ClaimId(1), &recs, 10).unwrap();
        let rel = rank_by(ClaimId(1), &recs, 10, RankSignal::Relevance).unwrap();
        assert!(combo.doc_ids().eq(rel.doc_ids()));
    }

    #[test]
    fn foreign_claim_rejected() {
        let mut r = rec(1, 0.2, 0.9, 0.5);
        r.claim_id = ClaimId(2);
        assert!(rank_by_combo(ClaimId(1), &[r], 5).is_err());
    }
}
