//! Blocking client for the scorer sidecar.
//!
//! `POST /v1/relevance` and `POST /v1/verify` both take
//! `{"pairs": [{"claim": ..., "doc": ...}]}` and answer with
//! `{"logits": [..]}` and `{"probs": [[p_support, p_refute, p_nei], ..]}`
//! respectively, positionally aligned with the request.

use std::thread;
use std::time::Duration;

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{normalize_relevance, LabelProbabilities, PairRequest, PairScores, ScoreSource};

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    /// Base URL, e.g. `http://127.0.0.1:8080`.
    pub endpoint: String,
    pub batch_size: usize,
    pub timeout: Duration,
    pub max_in_flight: usize,
    /// Extra attempts after a transport failure or 5xx response.
    pub retries: u32,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            endpoint: "http://127.0.0.1:8080".into(),
            batch_size: 32,
            timeout: Duration::from_secs(60),
            max_in_flight: 4,
            retries: 2,
        }
    }
}

#[derive(Serialize)]
struct WirePair<'a> {
    claim: &'a str,
    doc: &'a str,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    pairs: Vec<WirePair<'a>>,
}

#[derive(Deserialize)]
struct RelevanceResponse {
    logits: Vec<f64>,
}

#[derive(Deserialize)]
struct VerifyResponse {
    probs: Vec<Vec<f64>>,
}

pub struct ServiceClient {
    cfg: ServiceConfig,
    http: reqwest::blocking::Client,
}

impl ServiceClient {
    pub fn new(cfg: ServiceConfig) -> Result<Self> {
        if cfg.batch_size == 0 || cfg.max_in_flight == 0 {
            return Err(Error::Config(
                "scorer batch size and in-flight limit must be at least 1".into(),
            ));
        }
        let http = reqwest::blocking::Client::builder()
            .timeout(cfg.timeout)
            .build()
            .map_err(|e| Error::Config(format!("cannot build HTTP client: {e}")))?;
        Ok(ServiceClient { cfg, http })
    }

    fn url(&self, route: &str) -> String {
        format!("{}{route}", self.cfg.endpoint.trim_end_matches('/'))
    }

    fn post<T: for<'de> Deserialize<'de>>(&self, route: &str, batch: &[PairRequest]) -> Result<T> {
        let body = WireRequest {
            pairs: batch
                .iter()
                .map(|p| WirePair {
                    claim: &p.claim_text,
                    doc: &p.doc_text,
                })
                .collect(),
        };
        let url = self.url(route);
        let mut attempt = 0;
        loop {
            let outcome = self.http.post(&url).json(&body).send();
            let retryable = match outcome {
                Ok(resp) if resp.status().is_success() => {
                    return resp
                        .json::<T>()
                        .map_err(|e| Error::Protocol(format!("{route}: malformed response: {e}")));
                }
                Ok(resp) if resp.status().is_server_error() => {
                    format!("{route}: HTTP {}", resp.status())
                }
                Ok(resp) => {
                    return Err(Error::Protocol(format!("{route}: HTTP {}", resp.status())));
                }
                Err(e) if e.is_timeout() => format!("{route}: request timed out"),
                Err(e) => format!("{route}: {e}"),
            };
            if attempt >= self.cfg.retries {
                return Err(Error::Protocol(retryable));
            }
            attempt += 1;
            warn!("{retryable}; retry {attempt}/{}", self.cfg.retries);
            thread::sleep(Duration::from_millis(100 * u64::from(attempt)));
        }
    }

    fn score_batch(&self, batch: &[PairRequest]) -> Result<Vec<PairScores>> {
        let rel: RelevanceResponse = self.post("/v1/relevance", batch)?;
        let ver: VerifyResponse = self.post("/v1/verify", batch)?;
        if rel.logits.len() != batch.len() {
            return Err(Error::Protocol(format!(
                "/v1/relevance returned {} logits for {} pairs",
                rel.logits.len(),
                batch.len()
            )));
        }
        if ver.probs.len() != batch.len() {
            return Err(Error::Protocol(format!(
                "/v1/verify returned {} distributions for {} pairs",
                ver.probs.len(),
                batch.len()
            )));
        }
        rel.logits
            .iter()
            .zip(&ver.probs)
            .map(|(&logit, triple)| {
                let s_r = normalize_relevance(logit)
                    .map_err(|e| Error::Protocol(format!("/v1/relevance: {e}")))?;
                let [ps, pr, pn] = triple[..] else {
                    return Err(Error::Protocol(format!(
                        "/v1/verify: expected 3 probabilities, got {}",
                        triple.len()
                    )));
                };
                let probs = LabelProbabilities::new(ps, pr, pn)
                    .map_err(|e| Error::Protocol(format!("/v1/verify: {e}")))?;
                Ok(PairScores { s_r, probs })
            })
            .collect()
    }
}

impl ScoreSource for ServiceClient {
    /// Splits `pairs` into batches and keeps at most `max_in_flight` of them
    /// outstanding. Output order follows input order regardless of which
    /// batch finishes first.
    fn fetch(&self, pairs: &[PairRequest]) -> Result<Vec<PairScores>> {
        let batches: Vec<&[PairRequest]> = pairs.chunks(self.cfg.batch_size).collect();
        let mut results: Vec<Option<Result<Vec<PairScores>>>> = Vec::new();
        results.resize_with(batches.len(), || None);

        for (wave_no, wave) in batches.chunks(self.cfg.max_in_flight).enumerate() {
            debug!("scoring wave {wave_no} ({} batches)", wave.len());
            let base = wave_no * self.cfg.max_in_flight;
            thread::scope(|s| {
                let handles: Vec<_> = wave
                    .iter()
                    .map(|batch| s.spawn(move || self.score_batch(batch)))
                    .collect();
                for (i, h) in handles.into_iter().enumerate() {
                    let r = h
                        .join()
                        .unwrap_or_else(|_| Err(Error::Protocol("scoring thread panicked".into())));
                    results[base + i] = Some(r);
                }
            });
        }

        let mut out = Vec::with_capacity(pairs.len());
        for r in results {
            out.extend(r.expect("every batch is scored")?);
        }
        Ok(out)
    }
}
