//! Claims, documents and gold evidence in the SciFact JSONL layout.
//!
//! Corpus lines look like `{"doc_id": 4983, "title": "...", "abstract": ["s1", "s2"]}`.
//! Claim lines look like
//! `{"id": 1, "claim": "...", "evidence": {"4983": [{"label": "SUPPORT", "sentences": [0]}]}}`.
//! The refuting label is spelled `CONTRADICT` in the public data and is
//! normalized to [`Label::Refute`] on load.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DocId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClaimId(pub u64);

impl fmt::Display for DocId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Display for ClaimId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl FromStr for DocId {
    type Err = std::num::ParseIntError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.trim().parse().map(DocId)
    }
}

impl FromStr for ClaimId {
    type Err = std::num::ParseIntError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.trim().parse().map(ClaimId)
    }
}

/// Verdict labels. Gold annotations only ever carry `Support` or `Refute`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Support,
    Refute,
    Nei,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Support => "SUPPORT",
            Label::Refute => "REFUTE",
            Label::Nei => "NEI",
        }
    }

    /// Spelling used by the SciFact data files and leaderboard.
    pub fn scifact_str(self) -> &'static str {
        match self {
            Label::Support => "SUPPORT",
            Label::Refute => "CONTRADICT",
            Label::Nei => "NOT_ENOUGH_INFO",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "SUPPORT" => Ok(Label::Support),
            "REFUTE" | "CONTRADICT" => Ok(Label::Refute),
            "NEI" | "NOT_ENOUGH_INFO" => Ok(Label::Nei),
            other => Err(Error::UnknownLabel(other.to_string())),
        }
    }
}

impl Serialize for Label {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: DocId,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_sentences: Vec<String>,
}

impl Document {
    fn validate(&self) -> std::result::Result<(), String> {
        if self.abstract_sentences.is_empty() {
            return Err(format!("doc {}: abstract is empty", self.doc_id));
        }
        if let Some(i) = self
            .abstract_sentences
            .iter()
            .position(|s| s.trim().is_empty())
        {
            return Err(format!("doc {}: abstract sentence {i} is blank", self.doc_id));
        }
        Ok(())
    }
}

/// Title, a single space, then abstract sentences joined by single spaces.
/// An empty title yields the abstract join only.
pub fn document_text(doc: &Document) -> String {
    let body = doc.abstract_sentences.join(" ");
    if doc.title.is_empty() {
        body
    } else {
        format!("{} {}", doc.title, body)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Claim {
    pub claim_id: ClaimId,
    pub text: String,
}

/// One gold (claim, doc) pair. `rationales` carries the sentence-index
/// sets from the source file untouched; nothing downstream reads them.
#[derive(Debug, Clone, PartialEq)]
pub struct EvidenceAnnotation {
    pub claim_id: ClaimId,
    pub doc_id: DocId,
    pub label: Label,
    pub rationales: Vec<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClaimRecord {
    pub claim: Claim,
    pub evidence: Vec<EvidenceAnnotation>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    documents: BTreeMap<DocId, Document>,
    source: Option<PathBuf>,
}

impl Corpus {
    pub fn from_documents(docs: impl IntoIterator<Item = Document>) -> Result<Self> {
        let mut documents = BTreeMap::new();
        for doc in docs {
            doc.validate().map_err(Error::Invalid)?;
            let id = doc.doc_id;
            if documents.insert(id, doc).is_some() {
                return Err(Error::DuplicateDoc(id));
            }
        }
        Ok(Corpus {
            documents,
            source: None,
        })
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn get(&self, id: DocId) -> Option<&Document> {
        self.documents.get(&id)
    }

    pub fn contains(&self, id: DocId) -> bool {
        self.documents.contains_key(&id)
    }

    /// Documents in ascending doc_id order.
    pub fn iter(&self) -> impl Iterator<Item = &Document> {
        self.documents.values()
    }

    pub fn source(&self) -> Option<&Path> {
        self.source.as_deref()
    }
}

fn open_lines(path: &Path) -> Result<impl Iterator<Item = (usize, std::io::Result<String>)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(BufReader::new(file)
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l)))
}

/// Loads a corpus file. Malformed or invariant-violating lines abort in
/// strict mode and are skipped with a warning otherwise; duplicate ids
/// always abort.
pub fn load_corpus(path: &Path, strict: bool) -> Result<Corpus> {
    let mut documents = BTreeMap::new();
    for (line_no, line) in open_lines(path)? {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<Document>(&line)
            .map_err(|e| e.to_string())
            .and_then(|d| d.validate().map(|_| d));
        let doc = match parsed {
            Ok(doc) => doc,
            Err(msg) if strict => return Err(Error::parse(path, line_no, msg)),
            Err(msg) => {
                warn!("{}:{line_no}: skipping record: {msg}", path.display());
                continue;
            }
        };
        let id = doc.doc_id;
        if documents.insert(id, doc).is_some() {
            return Err(Error::DuplicateDoc(id));
        }
    }
    Ok(Corpus {
        documents,
        source: Some(path.to_path_buf()),
    })
}

#[derive(Deserialize)]
struct RawEvidenceEntry {
    label: String,
    #[serde(default)]
    sentences: Vec<u32>,
}

/// Claims files list entries per doc; leaderboard files carry one object.
#[derive(Deserialize)]
#[serde(untagged)]
enum RawEvidence {
    Many(Vec<RawEvidenceEntry>),
    One(RawEvidenceEntry),
}

#[derive(Deserialize)]
struct RawClaim {
    id: u64,
    claim: String,
    #[serde(default)]
    evidence: BTreeMap<String, RawEvidence>,
}

#[derive(Serialize)]
struct OutEvidenceEntry<'a> {
    label: &'static str,
    sentences: &'a [u32],
}

#[derive(Serialize)]
struct OutClaim<'a> {
    id: u64,
    claim: &'a str,
    evidence: BTreeMap<String, Vec<OutEvidenceEntry<'a>>>,
}

fn convert_evidence(
    claim_id: ClaimId,
    raw: BTreeMap<String, RawEvidence>,
) -> std::result::Result<Vec<EvidenceAnnotation>, String> {
    let mut evidence = Vec::with_capacity(raw.len());
    for (doc_key, entries) in raw {
        let doc_id: DocId = doc_key
            .parse()
            .map_err(|_| format!("claim {claim_id}: evidence key {doc_key:?} is not a doc_id"))?;
        let entries = match entries {
            RawEvidence::Many(v) => v,
            RawEvidence::One(e) => vec![e],
        };
        let mut label = None;
        let mut rationales = Vec::with_capacity(entries.len());
        for entry in entries {
            let l: Label = entry.label.parse().map_err(|e: Error| e.to_string())?;
            if l == Label::Nei {
                return Err(format!("claim {claim_id}, doc {doc_id}: evidence label cannot be NEI"));
            }
            match label {
                None => label = Some(l),
                Some(prev) if prev != l => {
                    return Err(format!(
                        "claim {claim_id}, doc {doc_id}: conflicting labels {prev} and {l}"
                    ))
                }
                Some(_) => {}
            }
            rationales.push(entry.sentences);
        }
        let label = label
            .ok_or_else(|| format!("claim {claim_id}, doc {doc_id}: empty evidence list"))?;
        evidence.push(EvidenceAnnotation {
            claim_id,
            doc_id,
            label,
            rationales,
        });
    }
    evidence.sort_by_key(|a| a.doc_id);
    Ok(evidence)
}

fn convert_claim(raw: RawClaim) -> std::result::Result<ClaimRecord, String> {
    if raw.claim.trim().is_empty() {
        return Err(format!("claim {}: empty text", raw.id));
    }
    let claim_id = ClaimId(raw.id);
    let evidence = convert_evidence(claim_id, raw.evidence)?;
    Ok(ClaimRecord {
        claim: Claim {
            claim_id,
            text: raw.claim,
        },
        evidence,
    })
}

#[derive(Deserialize)]
struct RawPredictionLine {
    id: u64,
    #[serde(default)]
    evidence: BTreeMap<String, RawEvidence>,
}

/// Parses one line of a leaderboard predictions file: the claims layout
/// without claim text, evidence given as a single object per doc.
pub(crate) fn parse_prediction_line(
    line: &str,
) -> std::result::Result<(ClaimId, Vec<EvidenceAnnotation>), String> {
    let raw: RawPredictionLine = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let claim_id = ClaimId(raw.id);
    Ok((claim_id, convert_evidence(claim_id, raw.evidence)?))
}

/// Loads a claims file in input order. Unknown labels and malformed
/// evidence maps abort in strict mode.
pub fn load_claims(path: &Path, strict: bool) -> Result<Vec<ClaimRecord>> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (line_no, line) in open_lines(path)? {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<RawClaim>(&line)
            .map_err(|e| e.to_string())
            .and_then(convert_claim);
        let record = match parsed {
            Ok(r) => r,
            Err(msg) if strict => return Err(Error::parse(path, line_no, msg)),
            Err(msg) => {
                warn!("{}:{line_no}: skipping claim: {msg}", path.display());
                continue;
            }
        };
        if !seen.insert(record.claim.claim_id) {
            return Err(Error::DuplicateClaim(record.claim.claim_id));
        }
        out.push(record);
    }
    Ok(out)
}

/// Checks that every annotated doc_id exists in the corpus. Lenient mode
/// drops unresolvable annotations with a warning instead of failing.
pub fn resolve_evidence(corpus: &Corpus, claims: &mut [ClaimRecord], strict: bool) -> Result<()> {
    for record in claims.iter_mut() {
        if strict {
            if let Some(a) = record.evidence.iter().find(|a| !corpus.contains(a.doc_id)) {
                return Err(Error::UnresolvedEvidence {
                    claim: a.claim_id,
                    doc: a.doc_id,
                });
            }
        } else {
            record.evidence.retain(|a| {
                let ok = corpus.contains(a.doc_id);
                if !ok {
                    warn!(
                        "dropping evidence (claim {}, doc {}): doc not in corpus",
                        a.claim_id, a.doc_id
                    );
                }
                ok
            });
        }
    }
    Ok(())
}

pub fn write_corpus<W: Write>(corpus: &Corpus, mut w: W) -> std::io::Result<()> {
    for doc in corpus.iter() {
        serde_json::to_writer(&mut w, doc)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Writes claims in the SciFact claims layout, refuting label spelled `CONTRADICT`.
pub fn write_claims<W: Write>(claims: &[ClaimRecord], mut w: W) -> std::io::Result<()> {
    for record in claims {
        let mut evidence = BTreeMap::new();
        for a in &record.evidence {
            let entries: Vec<_> = if a.rationales.is_empty() {
                vec![OutEvidenceEntry {
                    label: a.label.scifact_str(),
                    sentences: &[],
                }]
            } else {
                a.rationales
                    .iter()
                    .map(|s| OutEvidenceEntry {
                        label: a.label.scifact_str(),
                        sentences: s,
                    })
                    .collect()
            };
            evidence.insert(a.doc_id.to_string(), entries);
        }
        let out = OutClaim {
            id: record.claim.claim_id.0,
            claim: &record.claim.text,
            evidence,
        };
        serde_json::to_writer(&mut w, &out)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Gold evidence indexed by claim, in the shape the evaluation and
/// supervision code consumes. Claims without evidence are kept with an
/// empty map so they still count as evaluated claims.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GoldStandard {
    by_claim: BTreeMap<ClaimId, BTreeMap<DocId, Label>>,
}

impl GoldStandard {
    pub fn from_records(records: &[ClaimRecord]) -> Self {
        let mut by_claim = BTreeMap::new();
        for r in records {
            let docs = r.evidence.iter().map(|a| (a.doc_id, a.label)).collect();
            by_claim.insert(r.claim.claim_id, docs);
        }
        GoldStandard { by_claim }
    }

    pub fn insert(&mut self, claim: ClaimId, doc: DocId, label: Label) {
        self.by_claim.entry(claim).or_default().insert(doc, label);
    }

    pub fn add_claim(&mut self, claim: ClaimId) {
        self.by_claim.entry(claim).or_default();
    }

    pub fn claims(&self) -> impl Iterator<Item = ClaimId> + '_ {
        self.by_claim.keys().copied()
    }

    pub fn docs_for(&self, claim: ClaimId) -> Option<&BTreeMap<DocId, Label>> {
        self.by_claim.get(&claim)
    }

    pub fn label(&self, claim: ClaimId, doc: DocId) -> Option<Label> {
        self.by_claim.get(&claim)?.get(&doc).copied()
    }

    pub fn is_gold(&self, claim: ClaimId, doc: DocId) -> bool {
        self.label(claim, doc).is_some()
    }

    pub fn pair_count(&self) -> usize {
        self.by_claim.values().map(BTreeMap::len).sum()
    }

    pub fn claim_count(&self) -> usize {
        self.by_claim.len()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (ClaimId, DocId, Label)> + '_ {
        self.by_claim
            .iter()
            .flat_map(|(c, docs)| docs.iter().map(move |(d, l)| (*c, *d, *l)))
    }
}
