//! Brute-force reference implementations and random instance generators
//! shared by the property tests and the acceptance suite. Nothing here
//! calls into the code it checks, apart from building inputs.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;

use evrank::corpus::{ClaimId, Corpus, DocId, Document, GoldStandard, Label};
use evrank::run::{RankedList, Run};
use evrank::scoring::{LabelProbabilities, PairScores, ScoreRecord};

// ---------------------------------------------------------------- BM25

pub struct TextCorpus {
    pub corpus: Corpus,
    /// Lowercased tokens of title and abstract, per document.
    pub tokens: Vec<(DocId, Vec<String>)>,
    pub vocab: Vec<String>,
}

fn word(vocab: &[String], rng: &mut impl Rng) -> String {
    let w = vocab.choose(rng).unwrap();
    // Mixed case checks that matching is case-insensitive.
    if rng.gen_bool(0.2) {
        w.to_uppercase()
    } else {
        w.clone()
    }
}

/// Up to `max_docs` documents over a vocabulary of at most `max_vocab`
/// words, with a title of 0-3 words and 1-3 sentences of 1-8 words.
pub fn random_text_corpus(rng: &mut impl Rng, max_docs: usize, max_vocab: usize) -> TextCorpus {
    let vocab: Vec<String> = (0..rng.gen_range(1..=max_vocab)).map(|i| format!("t{i}")).collect();
    let n = rng.gen_range(1..=max_docs);
    let mut ids = BTreeSet::new();
    while ids.len() < n {
        ids.insert(DocId(rng.gen_range(0..1_000_000)));
    }
    let mut docs = Vec::new();
    let mut tokens = Vec::new();
    for id in ids {
        let title: Vec<String> = (0..rng.gen_range(0..=3)).map(|_| word(&vocab, rng)).collect();
        let sentences: Vec<Vec<String>> = (0..rng.gen_range(1..=3))
            .map(|_| (0..rng.gen_range(1..=8)).map(|_| word(&vocab, rng)).collect())
            .collect();
        let mut toks: Vec<String> = title.iter().map(|w| w.to_lowercase()).collect();
        for s in &sentences {
            toks.extend(s.iter().map(|w| w.to_lowercase()));
        }
        tokens.push((id, toks));
        docs.push(Document {
            doc_id: id,
            title: title.join(" "),
            abstract_sentences: sentences.iter().map(|s| format!("{}.", s.join(" "))).collect(),
        });
    }
    TextCorpus {
        corpus: Corpus::from_documents(docs).unwrap(),
        tokens,
        vocab,
    }
}

/// 1-6 vocabulary words, sometimes repeated, sometimes with a word no
/// document contains.
pub fn random_query(rng: &mut impl Rng, vocab: &[String]) -> String {
    let mut words: Vec<String> = (0..rng.gen_range(1..=6)).map(|_| word(vocab, rng)).collect();
    if rng.gen_bool(0.2) {
        words.push("unseen".into());
    }
    if rng.gen_bool(0.2) {
        let w = words[0].clone();
        words.push(w);
    }
    words.join(", ")
}

/// Every document with a positive score, best first, ties by ascending
/// doc_id. Each distinct query term contributes once.
pub fn bm25_oracle(docs: &[(DocId, Vec<String>)], query: &str, k1: f64, b: f64) -> Vec<(DocId, f64)> {
    let n = docs.len() as f64;
    let total: usize = docs.iter().map(|(_, t)| t.len()).sum();
    let avgdl = total as f64 / n;
    let mut terms: Vec<String> = query
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect();
    terms.sort();
    terms.dedup();
    let mut out = Vec::new();
    for (id, toks) in docs {
        let dl = toks.len() as f64;
        let mut score = 0.0;
        for term in &terms {
            let df = docs.iter().filter(|(_, t)| t.contains(term)).count() as f64;
            let tf = toks.iter().filter(|t| *t == term).count() as f64;
            if tf == 0.0 {
                continue;
            }
            let idf = ((n - df + 0.5) / (df + 0.5)).ln().max(0.0);
            score += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / avgdl));
        }
        if score > 0.0 {
            out.push((*id, score));
        }
    }
    sort_desc(&mut out);
    out
}

fn sort_desc(v: &mut [(DocId, f64)]) {
    v.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
}

/// `got` must be the oracle's top `k`: same length, scores within `tol`
/// position by position, and every listed doc scored within `tol` of the
/// oracle's doc at that position (docs tied within `tol` may swap).
pub fn compare_ranking(
    got: &[(DocId, f64)],
    oracle: &[(DocId, f64)],
    k: usize,
    tol: f64,
) -> Result<(), String> {
    let want = &oracle[..oracle.len().min(k)];
    if got.len() != want.len() {
        return Err(format!("{} results, oracle has {}", got.len(), want.len()));
    }
    let by_doc: BTreeMap<DocId, f64> = oracle.iter().copied().collect();
    let mut seen = BTreeSet::new();
    for (i, ((gd, gs), (wd, ws))) in got.iter().zip(want).enumerate() {
        if !seen.insert(*gd) {
            return Err(format!("doc {gd} listed twice"));
        }
        if (gs - ws).abs() > tol {
            return Err(format!("rank {}: score {gs} vs oracle {ws}", i + 1));
        }
        let Some(os) = by_doc.get(gd) else {
            return Err(format!("rank {}: doc {gd} has no oracle score", i + 1));
        };
        if gd != wd && (os - ws).abs() > tol {
            return Err(format!("rank {}: doc {gd} where the oracle has {wd}", i + 1));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- ranking

/// Sorted by descending score, ties by ascending doc_id, as a doc list.
pub fn order_oracle(scores: &[(DocId, f64)]) -> Vec<DocId> {
    let mut v = scores.to_vec();
    sort_desc(&mut v);
    v.into_iter().map(|(d, _)| d).collect()
}

/// A distribution over (SUPPORT, REFUTE, NEI) from three positive weights.
pub fn random_probs(rng: &mut impl Rng) -> LabelProbabilities {
    let w: [f64; 3] = [rng.gen(), rng.gen(), rng.gen::<f64>() + 1e-3];
    let s = w[0] + w[1] + w[2];
    LabelProbabilities::new(w[0] / s, w[1] / s, w[2] / s).unwrap()
}

/// A distribution whose entries are multiples of 2^-20, so every sum and
/// difference involved is exact in binary floating point.
pub fn dyadic_probs(rng: &mut impl Rng) -> LabelProbabilities {
    const UNIT: u32 = 1 << 20;
    let a = rng.gen_range(0..=UNIT);
    let b = rng.gen_range(0..=UNIT - a);
    let c = UNIT - a - b;
    let f = |x: u32| f64::from(x) / f64::from(UNIT);
    LabelProbabilities::new(f(a), f(b), f(c)).unwrap()
}

/// Scores for 1-40 docs of one claim. Values come from a coarse grid so
/// ties are common.
pub fn random_score_table(rng: &mut impl Rng, claim: ClaimId, alpha: f64) -> Vec<ScoreRecord> {
    let n = rng.gen_range(1..=40);
    let mut ids = BTreeSet::new();
    while ids.len() < n {
        ids.insert(DocId(rng.gen_range(0..500)));
    }
    ids.into_iter()
        .map(|d| {
            let grid = |rng: &mut _| f64::from(Rng::gen_range(rng, 0..=8u32)) / 8.0;
            let s_r = grid(rng);
            let probs = if rng.gen_bool(0.5) {
                dyadic_probs(rng)
            } else {
                let ps = grid(rng);
                let pr = (1.0 - ps) * grid(rng);
                LabelProbabilities::new(ps, pr, 1.0 - ps - pr).unwrap()
            };
            ScoreRecord::new(claim, d, &PairScores { s_r, probs }, alpha).unwrap()
        })
        .collect()
}

// ---------------------------------------------------------------- metrics

pub struct MetricInstance {
    pub gold: Vec<(ClaimId, DocId, Label)>,
    pub run: Vec<(ClaimId, Vec<DocId>)>,
    pub predictions: Vec<(ClaimId, DocId, Label)>,
}

fn gold_label(rng: &mut impl Rng) -> Label {
    if rng.gen_bool(0.6) {
        Label::Support
    } else {
        Label::Refute
    }
}

/// 1-6 claims over a pool of 15 docs with at least one gold pair overall.
pub fn random_metric_instance(rng: &mut impl Rng) -> MetricInstance {
    let claims: Vec<ClaimId> = (0..rng.gen_range(1..=6)).map(|i| ClaimId(100 + i)).collect();
    let pool: Vec<DocId> = (0..15).map(DocId).collect();
    let mut gold = Vec::new();
    let mut run = Vec::new();
    let mut predictions = Vec::new();
    for &c in &claims {
        let n_gold = rng.gen_range(0..=3);
        for d in pool.choose_multiple(rng, n_gold) {
            gold.push((c, *d, gold_label(rng)));
        }
        // Some claims get no ranking at all.
        if rng.gen_bool(0.9) {
            let n_ranked = rng.gen_range(0..=15);
            let mut docs: Vec<DocId> = pool.choose_multiple(rng, n_ranked).copied().collect();
            docs.shuffle(rng);
            run.push((c, docs));
        }
        let n_pred = rng.gen_range(0..=4);
        for d in pool.choose_multiple(rng, n_pred) {
            predictions.push((c, *d, gold_label(rng)));
        }
    }
    if gold.is_empty() {
        gold.push((claims[0], pool[0], Label::Support));
    }
    MetricInstance {
        gold,
        run,
        predictions,
    }
}

pub fn gold_standard(gold: &[(ClaimId, DocId, Label)]) -> GoldStandard {
    let mut g = GoldStandard::default();
    for &(c, d, l) in gold {
        g.insert(c, d, l);
    }
    g
}

/// Ranked lists with strictly decreasing scores in the given order.
pub fn to_run(lists: &[(ClaimId, Vec<DocId>)]) -> Run {
    lists
        .iter()
        .map(|(c, docs)| {
            let n = docs.len();
            let scored = docs.iter().enumerate().map(|(i, d)| (*d, (n - i) as f64));
            (*c, RankedList::from_scores(*c, scored, n.max(1)).unwrap())
        })
        .collect()
}

pub fn recall_oracle(run: &[(ClaimId, Vec<DocId>)], gold: &[(ClaimId, DocId, Label)], k: usize) -> f64 {
    let mut hits = 0usize;
    for (gc, gd, _) in gold {
        for (rc, docs) in run {
            for (i, d) in docs.iter().enumerate() {
                if rc == gc && d == gd && i < k {
                    hits += 1;
                }
            }
        }
    }
    100.0 * hits as f64 / gold.len() as f64
}

/// (precision, recall, f1) in percent.
pub fn prf_oracle(predictions: &[(ClaimId, DocId, Label)], gold: &[(ClaimId, DocId, Label)]) -> (f64, f64, f64) {
    let mut tp = 0usize;
    for p in predictions {
        for g in gold {
            if p == g {
                tp += 1;
            }
        }
    }
    let pct = |a: usize, b: usize| if b == 0 { 0.0 } else { 100.0 * a as f64 / b as f64 };
    let p = pct(tp, predictions.len());
    let r = pct(tp, gold.len());
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f)
}

// ---------------------------------------------------------------- supervision

pub struct SupervisionInstance {
    pub claims: Vec<ClaimId>,
    pub records: Vec<ScoreRecord>,
    pub gold: Vec<(ClaimId, DocId, Label)>,
}

/// 1-5 claims, each with 0-60 scored candidates and 0-3 gold docs, some
/// of them outside the candidate list.
pub fn random_supervision_instance(rng: &mut impl Rng) -> SupervisionInstance {
    let claims: Vec<ClaimId> = (0..rng.gen_range(1..=5)).map(|i| ClaimId(7 * i + 1)).collect();
    let mut records = Vec::new();
    let mut gold = Vec::new();
    for &c in &claims {
        let n = rng.gen_range(0..=60);
        let docs: Vec<DocId> = (0..200).map(DocId).collect::<Vec<_>>().choose_multiple(rng, n).copied().collect();
        for &d in &docs {
            let s_r = f64::from(rng.gen_range(0..=16u32)) / 16.0;
            let scores = PairScores {
                s_r,
                probs: random_probs(rng),
            };
            records.push(ScoreRecord::new(c, d, &scores, 0.5).unwrap());
        }
        for _ in 0..rng.gen_range(0..=3) {
            let d = if !docs.is_empty() && rng.gen_bool(0.7) {
                *docs.choose(rng).unwrap()
            } else {
                DocId(rng.gen_range(200..260))
            };
            if !gold.iter().any(|&(gc, gd, _)| gc == c && gd == d) {
                gold.push((c, d, gold_label(rng)));
            }
        }
    }
    SupervisionInstance {
        claims,
        records,
        gold,
    }
}

/// Top `n` doc ids of `claim` by s_combo, ties by ascending doc_id.
pub fn top_by_combo(records: &[ScoreRecord], claim: ClaimId, n: usize) -> Vec<DocId> {
    let scores: Vec<(DocId, f64)> = records
        .iter()
        .filter(|r| r.claim_id == claim)
        .map(|r| (r.doc_id, r.s_combo))
        .collect();
    order_oracle(&scores).into_iter().take(n).collect()
}

// ---------------------------------------------------------------- learner

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Mean squared error of sigmoid(w . x) against `t`.
pub fn mse_oracle(w: &[f64; 5], xs: &[[f64; 5]], t: &[f64]) -> f64 {
    let mut sum = 0.0;
    for (x, y) in xs.iter().zip(t) {
        let z: f64 = w.iter().zip(x).map(|(a, b)| a * b).sum();
        let e = sigmoid(z) - y;
        sum += e * e;
    }
    sum / xs.len() as f64
}

/// Four features in [0, 1] and a constant 1, like the reranker's inputs.
pub fn random_features(rng: &mut impl Rng) -> [f64; 5] {
    [rng.gen(), rng.gen(), rng.gen(), rng.gen(), 1.0]
}
