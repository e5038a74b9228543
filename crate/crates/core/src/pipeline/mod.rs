//! File-mediated stages. Each command checks its inputs exist, verifies
//! upstream provenance, writes one artifact atomically, records the
//! artifact's provenance and returns a one-line summary.

pub mod config;
pub mod provenance;

use std::collections::BTreeSet;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use log::info;

use crate::corpus::{load_claims, load_corpus, resolve_evidence, ClaimId, ClaimRecord, Corpus, GoldStandard};
use crate::error::{Error, Result};
use crate::evaluation::{
    export_leaderboard, predict_run, retrieval_report, verification_metrics, MetricsReport,
};
use crate::lexical::{build_index, read_index, search_all, write_index, IndexOptions, InvertedIndex};
use crate::reranker::{
    load_external_predictions, model_predictions, read_model, rerank_run, train_reranker,
    write_model, FeatureContext,
};
use crate::run::{read_run, write_run, RankedList, Run};
use crate::scoring::{
    candidate_requests, fuse, rank_run, read_score_cache, score_candidates, write_score_cache,
    ScoreCache, ScoreSource, ServiceClient,
};
use crate::supervision::{
    build_reranker_train_set, build_verifier_train_set, write_reranker_train,
    write_verifier_train, SamplingConfig,
};

pub use config::{Overrides, Paths, PipelineConfig, ScorerKind};
pub use provenance::{record, verify, write_atomic};

fn require(inputs: &[(&str, &Path)]) -> Result<()> {
    for (name, p) in inputs {
        if !p.exists() {
            return Err(Error::Config(format!(
                "{name} path {} does not exist",
                p.display()
            )));
        }
    }
    Ok(())
}

fn load_stopwords(path: &Path) -> Result<BTreeSet<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(|l| l.trim().to_lowercase())
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect())
}

fn open_index(path: &Path) -> Result<InvertedIndex> {
    verify(path)?;
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_index(BufReader::new(f), path)
}

fn open_run(path: &Path) -> Result<Run> {
    verify(path)?;
    read_run(path)
}

fn write_run_file(path: &Path, run: &Run, tag: &str) -> Result<()> {
    write_atomic(path, |w| write_run(run.values(), tag, w))
}

/// Claims with gold evidence checked against the corpus.
fn load_gold(cfg: &PipelineConfig, corpus: &Corpus) -> Result<(Vec<ClaimRecord>, GoldStandard)> {
    let mut claims = load_claims(&cfg.paths.claims, cfg.strict)?;
    resolve_evidence(corpus, &mut claims, cfg.strict)?;
    let gold = GoldStandard::from_records(&claims);
    Ok((claims, gold))
}

/// Adds empty lists for claims the run has no line for (no lexical overlap).
fn with_all_claims(mut run: Run, claims: &[ClaimRecord]) -> Run {
    for c in claims {
        run.entry(c.claim.claim_id)
            .or_insert_with(|| RankedList::empty(c.claim.claim_id));
    }
    run
}

pub fn cmd_index(cfg: &PipelineConfig) -> Result<String> {
    let p = &cfg.paths;
    require(&[("corpus", &p.corpus)])?;
    if let Some(s) = &p.stopwords {
        require(&[("stopwords", s)])?;
    }
    let corpus = load_corpus(&p.corpus, cfg.strict)?;
    let stopwords = match &p.stopwords {
        Some(s) => load_stopwords(s)?,
        None => BTreeSet::new(),
    };
    let index = build_index(
        &corpus,
        IndexOptions {
            fields: cfg.fields,
            stopwords,
        },
    );
    write_atomic(&p.index, |w| write_index(&index, w))?;
    let mut inputs = vec![p.corpus.as_path()];
    inputs.extend(p.stopwords.as_deref());
    record(&p.index, "index", &inputs)?;
    Ok(format!(
        "index: {} documents, {} terms -> {}",
        index.num_docs(),
        index.num_terms(),
        p.index.display()
    ))
}

pub fn cmd_retrieve(cfg: &PipelineConfig) -> Result<String> {
    let p = &cfg.paths;
    require(&[("index", &p.index), ("claims", &p.claims)])?;
    let index = open_index(&p.index)?;
    let claims: Vec<_> = load_claims(&p.claims, cfg.strict)?
        .into_iter()
        .map(|r| r.claim)
        .collect();
    let run = search_all(&index, &claims, cfg.k, &cfg.bm25)?;
    write_run_file(&p.bm25_run, &run, "bm25")?;
    record(&p.bm25_run, "retrieve", &[&p.index, &p.claims])?;
    let empty = run.values().filter(|l| l.is_empty()).count();
    Ok(format!(
        "retrieve: {} claims at k={} ({} without matches) -> {}",
        claims.len(),
        cfg.k,
        empty,
        p.bm25_run.display()
    ))
}

pub fn cmd_fuse(cfg: &PipelineConfig) -> Result<String> {
    let p = &cfg.paths;
    require(&[("bm25_run", &p.bm25_run), ("claims", &p.claims), ("corpus", &p.corpus)])?;
    if cfg.scorer == ScorerKind::Cache {
        require(&[("score_cache", &p.score_cache)])?;
    }
    let bm25 = open_run(&p.bm25_run)?;
    let corpus = load_corpus(&p.corpus, cfg.strict)?;
    let claims: Vec<_> = load_claims(&p.claims, cfg.strict)?
        .into_iter()
        .map(|r| r.claim)
        .collect();

    let records = match cfg.scorer {
        ScorerKind::Cache => {
            verify(&p.score_cache)?;
            let cache = read_score_cache(&p.score_cache)?;
            score_candidates(&claims, &bm25, &corpus, &cache, cfg.alpha)?
        }
        ScorerKind::Service => {
            let client = ServiceClient::new(cfg.service.clone())?;
            let requests = candidate_requests(&claims, &bm25, &corpus)?;
            info!("scoring {} pairs via {}", requests.len(), cfg.service.endpoint);
            let scores = client.fetch(&requests)?;
            let mut cache = ScoreCache::new();
            for (r, s) in requests.iter().zip(&scores) {
                cache.insert(r.claim_id, r.doc_id, *s);
            }
            write_atomic(&p.score_cache, |w| write_score_cache(&cache, w))?;
            record(&p.score_cache, "fuse", &[&p.bm25_run, &p.claims, &p.corpus])?;
            // Rescore from the cache as written so both modes fuse identical values.
            let cache = read_score_cache(&p.score_cache)?;
            let scores = cache.fetch(&requests)?;
            fuse(&requests, &scores, cfg.alpha)?
        }
    };
    let run = rank_run(&records, usize::MAX, cfg.rank_by)?;
    write_run_file(&p.combo_run, &run, cfg.rank_by.as_str())?;
    record(
        &p.combo_run,
        "fuse",
        &[&p.bm25_run, &p.claims, &p.corpus, &p.score_cache],
    )?;
    Ok(format!(
        "fuse: {} pairs ranked by {} (alpha={}) -> {}",
        records.len(),
        cfg.rank_by.as_str(),
        cfg.alpha,
        p.combo_run.display()
    ))
}

pub fn cmd_build_train(cfg: &PipelineConfig) -> Result<String> {
    let p = &cfg.paths;
    require(&[
        ("bm25_run", &p.bm25_run),
        ("combo_run", &p.combo_run),
        ("claims", &p.claims),
        ("corpus", &p.corpus),
        ("score_cache", &p.score_cache),
    ])?;
    let corpus = load_corpus(&p.corpus, cfg.strict)?;
    let (records, gold) = load_gold(cfg, &corpus)?;
    let bm25 = with_all_claims(open_run(&p.bm25_run)?, &records);
    let combo = with_all_claims(open_run(&p.combo_run)?, &records);
    verify(&p.score_cache)?;
    let cache = read_score_cache(&p.score_cache)?;

    let ids: Vec<ClaimId> = records.iter().map(|r| r.claim.claim_id).collect();
    let sampling = SamplingConfig::new(cfg.n_negatives, cfg.pool_depth, cfg.seed)?;
    let verifier = build_verifier_train_set(&ids, &bm25, &gold, &sampling)?;

    let claims: Vec<_> = records.iter().map(|r| r.claim.clone()).collect();
    let scored = score_candidates(&claims, &combo, &corpus, &cache, cfg.alpha)?;
    let reranker = build_reranker_train_set(&ids, &combo, &scored, &gold, cfg.train_top)?;

    let inputs: [&Path; 4] = [&p.bm25_run, &p.combo_run, &p.claims, &p.score_cache];
    write_atomic(&p.verifier_train, |w| write_verifier_train(&verifier, w))?;
    record(&p.verifier_train, "build-train", &inputs)?;
    write_atomic(&p.reranker_train, |w| write_reranker_train(&reranker, w))?;
    record(&p.reranker_train, "build-train", &inputs)?;
    Ok(format!(
        "build-train: {} verifier examples -> {}, {} reranker examples -> {}",
        verifier.len(),
        p.verifier_train.display(),
        reranker.len(),
        p.reranker_train.display()
    ))
}

pub fn cmd_train(cfg: &PipelineConfig) -> Result<String> {
    let p = &cfg.paths;
    require(&[
        ("reranker_train", &p.reranker_train),
        ("index", &p.index),
        ("claims", &p.claims),
        ("corpus", &p.corpus),
    ])?;
    verify(&p.reranker_train)?;
    let examples = crate::supervision::read_reranker_train(&p.reranker_train)?;
    let index = open_index(&p.index)?;
    let corpus = load_corpus(&p.corpus, cfg.strict)?;
    let claims: Vec<_> = load_claims(&p.claims, cfg.strict)?
        .into_iter()
        .map(|r| r.claim)
        .collect();
    let ctx = FeatureContext {
        corpus: &corpus,
        index: &index,
        bm25: cfg.bm25,
    };
    let (model, losses) = train_reranker(&examples, &ctx, &claims, &cfg.train)?;
    write_atomic(&p.model, |w| write_model(&model, w))?;
    record(&p.model, "train", &[&p.reranker_train, &p.index, &p.claims])?;
    Ok(format!(
        "train: {} examples, {} epochs, loss {:.6} -> {:.6} -> {}",
        examples.len(),
        cfg.train.epochs,
        losses[0],
        model.meta.final_loss,
        p.model.display()
    ))
}

/// Reranks the fused run with the trained model, or with an external
/// predictions file when one is given.
pub fn cmd_rerank(cfg: &PipelineConfig, predictions: Option<&Path>) -> Result<String> {
    let p = &cfg.paths;
    require(&[("combo_run", &p.combo_run)])?;
    let candidates = open_run(&p.combo_run)?;
    let (preds, source) = match predictions {
        Some(file) => {
            require(&[("predictions", file)])?;
            (load_external_predictions(file)?, file)
        }
        None => {
            require(&[
                ("model", &p.model),
                ("index", &p.index),
                ("claims", &p.claims),
                ("corpus", &p.corpus),
            ])?;
            verify(&p.model)?;
            let f = File::open(&p.model).map_err(|e| Error::io(&p.model, e))?;
            let model = read_model(BufReader::new(f), &p.model)?;
            let index = open_index(&p.index)?;
            let corpus = load_corpus(&p.corpus, cfg.strict)?;
            let claims: Vec<_> = load_claims(&p.claims, cfg.strict)?
                .into_iter()
                .map(|r| r.claim)
                .collect();
            let ctx = FeatureContext {
                corpus: &corpus,
                index: &index,
                bm25: cfg.bm25,
            };
            (model_predictions(&model, &ctx, &claims, &candidates)?, p.model.as_path())
        }
    };
    let run = rerank_run(&candidates, &preds, cfg.rerank_k)?;
    write_run_file(&p.rerank_run, &run, "rerank")?;
    record(&p.rerank_run, "rerank", &[&p.combo_run, source])?;
    Ok(format!(
        "rerank: {} claims using {} -> {}",
        run.len(),
        source.display(),
        p.rerank_run.display()
    ))
}

/// Evaluates `run` (the fused run by default). Label predictions come from
/// the score cache for the top `verify_k` docs of that run.
pub fn cmd_eval(
    cfg: &PipelineConfig,
    run: Option<&Path>,
    out: Option<&Path>,
) -> Result<(MetricsReport, String)> {
    let p = &cfg.paths;
    let run_path = run.unwrap_or(&p.combo_run);
    let out_path = out.unwrap_or(&p.metrics);
    require(&[
        ("run", run_path),
        ("claims", &p.claims),
        ("corpus", &p.corpus),
        ("score_cache", &p.score_cache),
    ])?;
    let ranked = open_run(run_path)?;
    let corpus = load_corpus(&p.corpus, cfg.strict)?;
    let (records, gold) = load_gold(cfg, &corpus)?;
    verify(&p.score_cache)?;
    let cache = read_score_cache(&p.score_cache)?;

    let retrieval = retrieval_report(&ranked, &gold, &cfg.eval_ks)?;
    let predictions = predict_run(&ranked, &cache, cfg.verify_k)?;
    let verification = verification_metrics(&predictions, &gold)?;
    let report = MetricsReport::new(&retrieval, &verification);

    let json = report.to_json();
    write_atomic(out_path, |w| w.write_all(json.as_bytes()))?;
    record(out_path, "eval", &[run_path, &p.claims, &p.score_cache])?;
    if let Some(lb) = &p.leaderboard {
        let ids: Vec<ClaimId> = records.iter().map(|r| r.claim.claim_id).collect();
        let mut buf = Vec::new();
        export_leaderboard(&ids, &predictions, &mut buf)?;
        write_atomic(lb, |w| w.write_all(&buf))?;
        record(lb, "eval", &[run_path, &p.claims, &p.score_cache])?;
    }
    let recall: Vec<String> = retrieval
        .recall
        .iter()
        .map(|(k, v)| format!("R@{k}={v:.2}"))
        .collect();
    let summary = format!(
        "eval: {} | P={:.2} R={:.2} F1={:.2} -> {}",
        recall.join(" "),
        verification.precision,
        verification.recall,
        verification.f1,
        out_path.display()
    );
    Ok((report, summary))
}

/// Builds a gold claims file for `test_claims` from a larger annotated
/// claims file (same claim ids, possibly a bigger corpus): evidence is
/// restricted to docs in `corpus` and claims left without evidence are
/// dropped unless `keep_empty`.
pub fn prepare_gold(
    corpus: &Corpus,
    test_claims: &[ClaimRecord],
    annotated: &[ClaimRecord],
    keep_empty: bool,
) -> Vec<ClaimRecord> {
    let by_id: std::collections::BTreeMap<ClaimId, &ClaimRecord> =
        annotated.iter().map(|r| (r.claim.claim_id, r)).collect();
    test_claims
        .iter()
        .filter_map(|t| {
            let evidence: Vec<_> = by_id
                .get(&t.claim.claim_id)
                .map(|a| {
                    a.evidence
                        .iter()
                        .filter(|e| corpus.contains(e.doc_id))
                        .cloned()
                        .collect()
                })
                .unwrap_or_default();
            (keep_empty || !evidence.is_empty()).then(|| ClaimRecord {
                claim: t.claim.clone(),
                evidence,
            })
        })
        .collect()
}
