//! Second-stage reranking: a reference pointwise learner trained on the
//! weak-supervision targets, plus a loader for externally produced
//! predictions. Either source yields a score per (claim, doc) which
//! reorders a candidate run.

mod external;
mod features;
mod model;

use std::collections::BTreeMap;

use log::warn;

pub use external::{load_external_predictions, Predictions};
pub use features::{FeatureContext, FeatureVector, FEATURE_DIM, FEATURE_NAMES};
pub use model::{
    mse_and_gradient, read_model, train, write_model, RerankerModel, TrainParams, TrainingMeta,
    MODEL_FORMAT_VERSION,
};

use crate::corpus::{Claim, ClaimId, DocId};
use crate::error::{Error, Result};
use crate::run::{RankedList, Run};
use crate::supervision::TrainingExample;

/// Reorders `list` by `scores`, which must cover every listed doc.
pub fn rerank_with(list: &RankedList, scores: &BTreeMap<DocId, f64>, k: usize) -> Result<RankedList> {
    let scored = list
        .doc_ids()
        .map(|d| {
            scores.get(&d).map(|s| (d, *s)).ok_or_else(|| {
                Error::Invalid(format!(
                    "no reranker score for claim {} doc {d}",
                    list.claim_id
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    RankedList::from_scores(list.claim_id, scored, k)
}

/// Reranks every claim in `candidates`. A claim with no predictions at all
/// keeps its input order (truncated to `k`); a claim with predictions for
/// only some of its candidates is an error.
pub fn rerank_run(candidates: &Run, predictions: &Predictions, k: usize) -> Result<Run> {
    candidates
        .iter()
        .map(|(&claim, list)| {
            let out = match predictions.get(&claim) {
                Some(scores) => rerank_with(list, scores, k)?,
                None => {
                    if !list.is_empty() {
                        warn!("no reranker predictions for claim {claim}; keeping input order");
                    }
                    list.truncated(k)
                }
            };
            Ok((claim, out))
        })
        .collect()
}

/// Scores every candidate in `candidates` with `model`.
pub fn model_predictions(
    model: &RerankerModel,
    ctx: &FeatureContext<'_>,
    claims: &[Claim],
    candidates: &Run,
) -> Result<Predictions> {
    let mut out = Predictions::new();
    for claim in claims {
        let Some(list) = candidates.get(&claim.claim_id) else {
            continue;
        };
        let docs: Vec<DocId> = list.doc_ids().collect();
        let feats = ctx.featurize(claim, &docs)?;
        let scores = out.entry(claim.claim_id).or_default();
        for (d, x) in docs.into_iter().zip(&feats) {
            scores.insert(d, model.predict(x));
        }
    }
    Ok(out)
}

/// Featurizes `examples` (grouped per claim, so the per-claim BM25 scaling
/// sees the whole training candidate set) and returns aligned features and
/// targets in example order.
pub fn training_matrix(
    examples: &[TrainingExample],
    ctx: &FeatureContext<'_>,
    claims: &[Claim],
) -> Result<(Vec<FeatureVector>, Vec<f64>)> {
    let by_id: BTreeMap<ClaimId, &Claim> = claims.iter().map(|c| (c.claim_id, c)).collect();
    let mut groups: BTreeMap<ClaimId, Vec<usize>> = BTreeMap::new();
    for (i, e) in examples.iter().enumerate() {
        groups.entry(e.claim_id).or_default().push(i);
    }
    let mut xs = vec![FeatureVector([0.0; FEATURE_DIM]); examples.len()];
    for (claim_id, idx) in groups {
        let claim = by_id
            .get(&claim_id)
            .ok_or_else(|| Error::Invalid(format!("training example for unknown claim {claim_id}")))?;
        let docs: Vec<DocId> = idx.iter().map(|&i| examples[i].doc_id).collect();
        for (i, x) in idx.into_iter().zip(ctx.featurize(claim, &docs)?) {
            xs[i] = x;
        }
    }
    Ok((xs, examples.iter().map(|e| e.target).collect()))
}

pub fn train_reranker(
    examples: &[TrainingExample],
    ctx: &FeatureContext<'_>,
    claims: &[Claim],
    params: &TrainParams,
) -> Result<(RerankerModel, Vec<f64>)> {
    let (xs, ts) = training_matrix(examples, ctx, claims)?;
    train(&xs, &ts, params)
}
