//! Retrieval recall, abstract-level label-only verification metrics and
//! leaderboard export.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{parse_prediction_line, ClaimId, DocId, GoldStandard, Label};
use crate::error::{Error, Result};
use crate::run::Run;
use crate::scoring::{LabelProbabilities, ScoreCache};

pub const DEFAULT_KS: [usize; 6] = [1, 3, 5, 10, 20, 50];

/// Percentage of gold (claim, doc) pairs whose doc appears in the claim's
/// top `k`. Claims absent from `run` retrieve nothing. Claims without gold
/// do not count.
pub fn recall_at_k(run: &Run, gold: &GoldStandard, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::Invalid("recall cutoff k must be at least 1".into()));
    }
    let total = gold.pair_count();
    if total == 0 {
        return Err(Error::Invalid(
            "recall is undefined: no gold evidence pairs in the evaluated claims".into(),
        ));
    }
    let mut hits = 0usize;
    for claim in gold.claims() {
        let (Some(docs), Some(list)) = (gold.docs_for(claim), run.get(&claim)) else {
            continue;
        };
        hits += list
            .top(k)
            .iter()
            .filter(|e| docs.contains_key(&e.doc_id))
            .count();
    }
    Ok(100.0 * hits as f64 / total as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalReport {
    pub recall: BTreeMap<usize, f64>,
    pub claims: usize,
    pub gold_pairs: usize,
}

impl RetrievalReport {
    pub fn ks(&self) -> impl Iterator<Item = usize> + '_ {
        self.recall.keys().copied()
    }
}

pub fn retrieval_report(run: &Run, gold: &GoldStandard, ks: &[usize]) -> Result<RetrievalReport> {
    let recall = ks
        .iter()
        .map(|&k| Ok((k, recall_at_k(run, gold, k)?)))
        .collect::<Result<_>>()?;
    Ok(RetrievalReport {
        recall,
        claims: gold.claim_count(),
        gold_pairs: gold.pair_count(),
    })
}

/// A SUPPORT or REFUTE verdict for one pair. Abstention is absence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct VerificationPrediction {
    pub claim_id: ClaimId,
    pub doc_id: DocId,
    label: Label,
}

impl VerificationPrediction {
    pub fn new(claim_id: ClaimId, doc_id: DocId, label: Label) -> Result<Self> {
        if label == Label::Nei {
            return Err(Error::Invalid(format!(
                "claim {claim_id}, doc {doc_id}: NEI is not a prediction"
            )));
        }
        Ok(VerificationPrediction {
            claim_id,
            doc_id,
            label,
        })
    }

    pub fn label(&self) -> Label {
        self.label
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_positives: usize,
    pub predicted: usize,
    pub gold: usize,
}

fn percent(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

/// A prediction is correct when the pair is gold and the label matches.
pub fn verification_metrics(
    predictions: &[VerificationPrediction],
    gold: &GoldStandard,
) -> Result<VerificationReport> {
    let mut seen = BTreeSet::new();
    let mut tp = 0usize;
    for p in predictions {
        if !seen.insert((p.claim_id, p.doc_id)) {
            return Err(Error::Invalid(format!(
                "duplicate prediction for claim {}, doc {}",
                p.claim_id, p.doc_id
            )));
        }
        if gold.label(p.claim_id, p.doc_id) == Some(p.label) {
            tp += 1;
        }
    }
    let n_gold = gold.pair_count();
    let precision = percent(tp, predictions.len());
    let recall = percent(tp, n_gold);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(VerificationReport {
        precision,
        recall,
        f1,
        true_positives: tp,
        predicted: predictions.len(),
        gold: n_gold,
    })
}

/// Argmax over (SUPPORT, REFUTE, NEI) with ties going to the earlier
/// label. `None` when NEI wins.
pub fn predict_label(probs: &LabelProbabilities) -> Option<Label> {
    let [s, r, n] = probs.as_array();
    if s >= r && s >= n {
        Some(Label::Support)
    } else if r >= n {
        Some(Label::Refute)
    } else {
        None
    }
}

pub fn predict_labels(
    claim_id: ClaimId,
    docs: &[DocId],
    cache: &ScoreCache,
) -> Result<Vec<VerificationPrediction>> {
    let mut out = Vec::new();
    for &doc in docs {
        let probs = cache
            .probabilities(claim_id, doc)
            .ok_or(Error::CacheMiss { claim: claim_id, doc })?;
        if let Some(label) = predict_label(&probs) {
            out.push(VerificationPrediction {
                claim_id,
                doc_id: doc,
                label,
            });
        }
    }
    Ok(out)
}

/// Label predictions for the top `k` docs of every claim in `run`.
pub fn predict_run(run: &Run, cache: &ScoreCache, k: usize) -> Result<Vec<VerificationPrediction>> {
    let mut out = Vec::new();
    for (&claim, list) in run {
        let docs: Vec<DocId> = list.top(k).iter().map(|e| e.doc_id).collect();
        out.extend(predict_labels(claim, &docs, cache)?);
    }
    Ok(out)
}

#[derive(Serialize)]
struct LeaderboardEvidence {
    label: &'static str,
    sentences: [u32; 0],
}

#[derive(Serialize)]
struct LeaderboardLine {
    id: u64,
    evidence: BTreeMap<String, LeaderboardEvidence>,
}

/// One line per claim in `claims` (ascending id), including claims with no
/// predictions. Predictions for claims outside `claims` are an error.
pub fn export_leaderboard<W: Write>(
    claims: &[ClaimId],
    predictions: &[VerificationPrediction],
    mut w: W,
) -> Result<()> {
    let mut by_claim: BTreeMap<ClaimId, BTreeMap<String, LeaderboardEvidence>> =
        claims.iter().map(|&c| (c, BTreeMap::new())).collect();
    for p in predictions {
        let ev = by_claim.get_mut(&p.claim_id).ok_or_else(|| {
            Error::Invalid(format!("prediction for unknown claim {}", p.claim_id))
        })?;
        let entry = LeaderboardEvidence {
            label: p.label.scifact_str(),
            sentences: [],
        };
        if ev.insert(p.doc_id.to_string(), entry).is_some() {
            return Err(Error::Invalid(format!(
                "duplicate prediction for claim {}, doc {}",
                p.claim_id, p.doc_id
            )));
        }
    }
    let io = |e: std::io::Error| Error::Invalid(format!("writing leaderboard: {e}"));
    for (claim, evidence) in by_claim {
        let line = LeaderboardLine {
            id: claim.0,
            evidence,
        };
        serde_json::to_writer(&mut w, &line).map_err(|e| io(e.into()))?;
        w.write_all(b"\n").map_err(io)?;
    }
    Ok(())
}

pub fn load_leaderboard(path: &Path) -> Result<Vec<VerificationPrediction>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let (_, evidence) = parse_prediction_line(&line).map_err(|m| Error::parse(path, i + 1, m))?;
        out.extend(evidence.into_iter().map(|a| VerificationPrediction {
            claim_id: a.claim_id,
            doc_id: a.doc_id,
            label: a.label,
        }));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub claims: usize,
    pub gold_pairs: usize,
    pub true_positives: usize,
    pub predicted: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrfReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// The JSON metrics report written by the `eval` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub recall: BTreeMap<String, f64>,
    pub verification: PrfReport,
    pub counts: Counts,
}

impl MetricsReport {
    pub fn new(retrieval: &RetrievalReport, verification: &VerificationReport) -> Self {
        MetricsReport {
            recall: retrieval
                .recall
                .iter()
                .map(|(k, v)| (k.to_string(), *v))
                .collect(),
            verification: PrfReport {
                precision: verification.precision,
                recall: verification.recall,
                f1: verification.f1,
            },
            counts: Counts {
                claims: retrieval.claims,
                gold_pairs: retrieval.gold_pairs,
                true_positives: verification.true_positives,
                predicted: verification.predicted,
            },
        }
    }

    pub fn recall_at(&self, k: usize) -> Option<f64> {
        self.recall.get(&k.to_string()).copied()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::run::RankedList;

    fn ranked(claim: u64, docs: &[u64]) -> RankedList {
        RankedList::from_scores(
            ClaimId(claim),
            docs.iter().enumerate().map(|(i, d)| (DocId(*d), -(i as f64))),
            usize::MAX,
        )
        .unwrap()
    }

    fn gold(pairs: &[(u64, u64, Label)]) -> GoldStandard {
        let mut g = GoldStandard::default();
        for &(c, d, l) in pairs {
            g.insert(ClaimId(c), DocId(d), l);
        }
        g
    }

    fn pred(c: u64, d: u64, l: Label) -> VerificationPrediction {
        VerificationPrediction::new(ClaimId(c), DocId(d), l).unwrap()
    }

    #[test]
    fn recall_hand_counts() {
        let g = gold(&[(1, 1, Label::Support), (1, 2, Label::Support)]);
        let run = Run::from([(ClaimId(1), ranked(1, &[1, 3, 2]))]);
        assert_eq!(recall_at_k(&run, &g, 2).unwrap(), 50.0);
        assert_eq!(recall_at_k(&run, &g, 3).unwrap(), 100.0);

        let g = gold(&[(7, 1, Label::Refute)]);
        let run = Run::from([(ClaimId(7), ranked(7, &[1, 4, 5]))]);
        for k in 1..5 {
            assert_eq!(recall_at_k(&run, &g, k).unwrap(), 100.0);
        }
    }

    #[test]
    fn recall_errors() {
        let run = Run::new();
        let mut g = GoldStandard::default();
        g.add_claim(ClaimId(1));
        assert!(recall_at_k(&run, &g, 1).is_err());
        let g = gold(&[(1, 1, Label::Support)]);
        assert!(recall_at_k(&run, &g, 0).is_err());
        assert_eq!(recall_at_k(&run, &g, 1).unwrap(), 0.0);
    }

    #[test]
    fn verification_examples() {
        let g = gold(&[(1, 1, Label::Support), (2, 5, Label::Refute)]);
        let exact = [pred(1, 1, Label::Support), pred(2, 5, Label::Refute)];
        let r = verification_metrics(&exact, &g).unwrap();
        assert_eq!((r.precision, r.recall, r.f1), (100.0, 100.0, 100.0));

        let wrong_label = [pred(1, 1, Label::Refute)];
        let r = verification_metrics(&wrong_label, &g).unwrap();
        assert_eq!((r.true_positives, r.predicted), (0, 1));
        assert_eq!(r.f1, 0.0);

        let r = verification_metrics(&[], &g).unwrap();
        assert_eq!((r.precision, r.recall, r.f1), (0.0, 0.0, 0.0));

        assert!(verification_metrics(&[pred(1, 1, Label::Support), pred(1, 1, Label::Refute)], &g).is_err());
        assert!(VerificationPrediction::new(ClaimId(1), DocId(1), Label::Nei).is_err());
    }

    #[test]
    fn argmax_with_tie_order() {
        let p = |s, r, n| LabelProbabilities::new(s, r, n).unwrap();
        assert_eq!(predict_label(&p(0.6, 0.1, 0.3)), Some(Label::Support));
        assert_eq!(predict_label(&p(0.2, 0.2, 0.6)), None);
        assert_eq!(predict_label(&p(0.4, 0.4, 0.2)), Some(Label::Support));
        assert_eq!(predict_label(&p(0.2, 0.4, 0.4)), Some(Label::Refute));
        assert_eq!(predict_label(&p(0.1, 0.3, 0.6)), None);
    }

    #[test]
    fn leaderboard_lines_and_round_trip() {
        let claims = [ClaimId(3), ClaimId(1)];
        let preds = [pred(1, 10, Label::Support), pred(1, 11, Label::Refute)];
        let mut buf = Vec::new();
        export_leaderboard(&claims, &preds, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "{\"id\":1,\"evidence\":{\"10\":{\"label\":\"SUPPORT\",\"sentences\":[]},\"11\":{\"label\":\"CONTRADICT\",\"sentences\":[]}}}\n\
             {\"id\":3,\"evidence\":{}}\n"
        );
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("lb.jsonl");
        std::fs::write(&p, &text).unwrap();
        assert_eq!(load_leaderboard(&p).unwrap(), preds);

        assert!(export_leaderboard(&[ClaimId(3)], &preds, Vec::new()).is_err());
    }

    #[test]
    fn report_json_shape() {
        let g = gold(&[(1, 1, Label::Support)]);
        let run = Run::from([(ClaimId(1), ranked(1, &[1]))]);
        let rr = retrieval_report(&run, &g, &[1, 3]).unwrap();
        let vr = verification_metrics(&[pred(1, 1, Label::Support)], &g).unwrap();
        let report = MetricsReport::new(&rr, &vr);
        let v: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(v["recall"]["1"], 100.0);
        assert_eq!(v["verification"]["f1"], 100.0);
        assert_eq!(v["counts"]["gold_pairs"], 1);
        assert_eq!(report.recall_at(3), Some(100.0));
    }
}
