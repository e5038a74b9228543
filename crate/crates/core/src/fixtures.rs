//! A 20-document synthetic corpus with four claims, scripted scorer
//! outputs and hand-computed expected metrics, for running the whole
//! pipeline without any model.
//!
//! Claim 0's gold document (refuting) sits below a lexically closer but
//! non-evidential document under BM25; the verifier probabilities lift it
//! to rank 1 in the fused ranking. Claim 2 has a second gold document that
//! shares almost no vocabulary with the claim. Claim 1 carries the converse
//! case: a non-gold document the verifier wrongly supports. Claim 3 has no
//! gold evidence.
//!
//! The seed only changes the id numbering. Ids stay increasing in document
//! and claim order, so every tie-break and therefore every metric is
//! identical across seeds.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    write_claims, write_corpus, Claim, ClaimId, ClaimRecord, Corpus, DocId, Document,
    EvidenceAnnotation, Label,
};
use crate::error::{Error, Result};
use crate::evaluation::{Counts, MetricsReport, PrfReport};
use crate::pipeline::write_atomic;
use crate::scoring::{normalize_relevance, write_score_cache, LabelProbabilities, PairScores, ScoreCache};

const DOCS: [(&str, [&str; 2]); 20] = [
    ("Ibuprofen for headache treatment", [
        "Ibuprofen can be used for headache treatment.",
        "Headaches in adult patients are frequently treated with ibuprofen.",
    ]),
    ("Medicine use during the pandemic", [
        "Paracetamol is the most commonly used medicine for COVID-19 for any symptom.",
        "Prescription records from outpatient clinics were reviewed.",
    ]),
    ("Symptoms of COVID-19 in hospitalised patients", [
        "Fever and cough were the most common symptoms.",
        "Headache was reported by a minority of patients.",
    ]),
    ("Vitamin D supplementation to prevent acute respiratory infections", [
        "Vitamin D supplementation reduced the risk of acute respiratory tract infection among all participants.",
        "Protective effects were seen in those with low baseline levels.",
    ]),
    ("Micronutrients and immune function", [
        "Zinc deficiency impairs immune responses to infections.",
        "Supplementation trials show mixed results.",
    ]),
    ("Vitamin D metabolism", [
        "Vitamin D is synthesised in the skin after sunlight exposure.",
        "The liver and kidney convert it to the active hormone.",
    ]),
    ("Statin therapy and LDL cholesterol", [
        "Statin therapy lowers LDL cholesterol by about one third.",
        "The effect was consistent in adults with and without diabetes.",
    ]),
    ("HMG-CoA reductase inhibitors in type 2 diabetes", [
        "Reductase inhibitors reduced low-density lipoprotein levels in diabetic patients.",
        "Cardiovascular events were also reduced.",
    ]),
    ("Cholesterol measurement in adults", [
        "LDL cholesterol is measured in fasting blood samples.",
        "Assays differ between laboratories.",
    ]),
    ("Diabetes therapy guidelines", [
        "Guidelines recommend lifestyle therapy for adults with type 2 diabetes.",
        "Metformin is the first line drug.",
    ]),
    ("Green tea catechins", [
        "Green tea contains catechins with antioxidant activity.",
        "Consumption varies widely between countries.",
    ]),
    ("Sleep duration and cardiovascular risk", [
        "Short sleep duration was associated with higher blood pressure.",
        "Long sleep showed a weaker association.",
    ]),
    ("Antibiotic resistance in hospitals", [
        "Resistance to carbapenems increased over the decade.",
        "Infection control measures limited spread.",
    ]),
    ("Exercise and depression", [
        "Aerobic exercise reduced depressive symptoms in older adults.",
        "Benefits persisted after six months.",
    ]),
    ("Smoking cessation outcomes", [
        "Varenicline improved abstinence rates compared with placebo.",
        "Adverse events were mild.",
    ]),
    ("Gut microbiome composition", [
        "Diet strongly shapes the gut microbiome.",
        "Fibre intake increased microbial diversity.",
    ]),
    ("Air pollution and asthma", [
        "Fine particulate matter exacerbates asthma in children.",
        "Hospital admissions rose on high pollution days.",
    ]),
    ("Malaria vaccine trial", [
        "The vaccine reduced clinical malaria episodes in infants.",
        "Efficacy waned over the second year.",
    ]),
    ("Obesity prevalence trends", [
        "Obesity prevalence rose steadily among adults.",
        "Rates differed by region and income.",
    ]),
    ("Hearing loss and dementia", [
        "Untreated hearing loss was linked to cognitive decline in elderly people.",
        "Hearing aids may slow this decline.",
    ]),
];

const CLAIMS: [&str; 4] = [
    "Ibuprofen is frequently used to treat headaches in COVID-19 patients.",
    "Vitamin D supplementation reduces the risk of acute respiratory infections.",
    "Statin therapy lowers LDL cholesterol in adults with diabetes.",
    "Green tea consumption improves memory in elderly people.",
];

/// (claim, doc, label) by position.
const GOLD: [(usize, usize, Label); 4] = [
    (0, 1, Label::Refute),
    (1, 3, Label::Support),
    (2, 6, Label::Support),
    (2, 7, Label::Support),
];

/// (claim, doc, relevance logit, [p_support, p_refute, p_nei]) by position.
const SCRIPTED: [(usize, usize, f64, [f64; 3]); 10] = [
    (0, 0, 2.0, [0.05, 0.05, 0.90]),
    (0, 1, 0.5, [0.10, 0.80, 0.10]),
    (0, 2, 1.0, [0.10, 0.05, 0.85]),
    (1, 3, 3.0, [0.85, 0.05, 0.10]),
    (1, 4, -2.0, [0.50, 0.20, 0.30]),
    (1, 5, 1.5, [0.05, 0.05, 0.90]),
    (2, 6, 2.5, [0.90, 0.02, 0.08]),
    (2, 7, 0.0, [0.70, 0.10, 0.20]),
    (2, 8, 1.8, [0.05, 0.05, 0.90]),
    (2, 9, 1.2, [0.10, 0.05, 0.85]),
];

const BACKGROUND: (f64, [f64; 3]) = (-4.0, [0.02, 0.02, 0.96]);

pub const FIXTURE_ALPHA: f64 = 0.5;
pub const FIXTURE_VERIFY_K: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedMetrics {
    pub alpha: f64,
    pub verify_k: usize,
    /// Metrics of the BM25 run.
    pub bm25: MetricsReport,
    /// Metrics of the fused run at `alpha`.
    pub combo: MetricsReport,
}

#[derive(Debug, Clone)]
pub struct FixtureBundle {
    pub seed: u64,
    pub corpus: Corpus,
    pub claims: Vec<ClaimRecord>,
    pub scores: ScoreCache,
    pub expected: ExpectedMetrics,
}

fn report(recall: [f64; 6], prf: [f64; 3], tp: usize, predicted: usize) -> MetricsReport {
    let ks = [1, 3, 5, 10, 20, 50];
    MetricsReport {
        recall: ks.iter().zip(recall).map(|(k, v)| (k.to_string(), v)).collect::<BTreeMap<_, _>>(),
        verification: PrfReport {
            precision: prf[0],
            recall: prf[1],
            f1: prf[2],
        },
        counts: Counts {
            claims: 4,
            gold_pairs: 4,
            true_positives: tp,
            predicted,
        },
    }
}

/// Worked out by hand from the scripted tables.
///
/// BM25 top 3: claim 0 [d0, d1, d2], claim 1 [d3, d5, d4], claim 2
/// [d6, d9, d8] with d7 fourth. Gold hits at 1: d3, d6 (2 of 4); at 3: add
/// d1 (3 of 4); at 5: add d7. Labels in the top 3: d1 REFUTE, d3 SUPPORT,
/// d4 SUPPORT (wrong), d6 SUPPORT, everything else NEI. 3 of 4 correct.
///
/// Fused top 3 (0.5 s_v + 0.5 sigmoid(logit)): claim 0 [d1 .761, d0 .490,
/// d2 .441], claim 1 [d3 .926, d5 .459, d4 .410], claim 2 [d6 .922,
/// d7 .650, d8 .479]. Hits at 1: d1, d3, d6; at 3: all four. Labels add d7
/// SUPPORT: 4 of 5 correct, recall 4 of 4.
pub fn expected_metrics() -> ExpectedMetrics {
    ExpectedMetrics {
        alpha: FIXTURE_ALPHA,
        verify_k: FIXTURE_VERIFY_K,
        bm25: report([50.0, 75.0, 100.0, 100.0, 100.0, 100.0], [75.0, 75.0, 75.0], 3, 4),
        combo: report(
            [75.0, 100.0, 100.0, 100.0, 100.0, 100.0],
            [80.0, 100.0, 2.0 * 80.0 * 100.0 / 180.0],
            4,
            5,
        ),
    }
}

fn id_scheme(rng: &mut ChaCha8Rng) -> (u64, u64) {
    (rng.gen_range(1..1_000_000), rng.gen_range(1..=997))
}

fn round9(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

pub fn generate_fixture(seed: u64) -> FixtureBundle {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (doc_base, doc_step) = id_scheme(&mut rng);
    let (claim_base, claim_step) = id_scheme(&mut rng);
    let doc_id = |i: usize| DocId(doc_base + i as u64 * doc_step);
    let claim_id = |i: usize| ClaimId(claim_base + i as u64 * claim_step);

    let corpus = Corpus::from_documents(DOCS.iter().enumerate().map(|(i, (title, sents))| Document {
        doc_id: doc_id(i),
        title: title.to_string(),
        abstract_sentences: sents.iter().map(|s| s.to_string()).collect(),
    }))
    .expect("fixture ids are distinct");

    let claims = CLAIMS
        .iter()
        .enumerate()
        .map(|(ci, text)| ClaimRecord {
            claim: Claim {
                claim_id: claim_id(ci),
                text: text.to_string(),
            },
            evidence: GOLD
                .iter()
                .filter(|(c, _, _)| *c == ci)
                .map(|&(_, d, label)| EvidenceAnnotation {
                    claim_id: claim_id(ci),
                    doc_id: doc_id(d),
                    label,
                    rationales: vec![vec![0]],
                })
                .collect(),
        })
        .collect();

    let mut scores = ScoreCache::new();
    for ci in 0..CLAIMS.len() {
        for di in 0..DOCS.len() {
            let (logit, p) = SCRIPTED
                .iter()
                .find(|(c, d, _, _)| *c == ci && *d == di)
                .map(|&(_, _, l, p)| (l, p))
                .unwrap_or(BACKGROUND);
            let s_r = round9(normalize_relevance(logit).expect("finite logit"));
            let probs = LabelProbabilities::new(p[0], p[1], p[2]).expect("scripted rows sum to 1");
            scores.insert(claim_id(ci), doc_id(di), PairScores { s_r, probs });
        }
    }

    FixtureBundle {
        seed,
        corpus,
        claims,
        scores,
        expected: expected_metrics(),
    }
}

fn pipeline_toml(seed: u64) -> String {
    format!(
        "# Pipeline configuration for the bundled fixture. Artifacts are written\n\
         # next to this file unless work_dir is set.\n\
         corpus = \"corpus.jsonl\"\n\
         claims = \"claims.jsonl\"\n\
         score_cache = \"scores.tsv\"\n\
         k = 100\n\
         alpha = {FIXTURE_ALPHA:?}\n\
         verify_k = {FIXTURE_VERIFY_K}\n\
         n_negatives = 5\n\
         seed = {seed}\n\
         strict = true\n"
    )
}

/// Writes `corpus.jsonl`, `claims.jsonl`, `scores.tsv`,
/// `expected_metrics.json` and `pipeline.toml` into `dir`.
pub fn write_fixture(bundle: &FixtureBundle, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_atomic(&dir.join("corpus.jsonl"), |w| write_corpus(&bundle.corpus, w))?;
    write_atomic(&dir.join("claims.jsonl"), |w| write_claims(&bundle.claims, w))?;
    write_atomic(&dir.join("scores.tsv"), |w| write_score_cache(&bundle.scores, w))?;
    let expected = serde_json::to_string_pretty(&bundle.expected).expect("serializes");
    write_atomic(&dir.join("expected_metrics.json"), |w| writeln!(w, "{expected}"))?;
    let toml = pipeline_toml(bundle.seed);
    write_atomic(&dir.join("pipeline.toml"), |w| w.write_all(toml.as_bytes()))?;
    Ok(())
}

pub fn read_expected_metrics(path: &Path) -> Result<ExpectedMetrics> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, 0, e.to_string()))
}
