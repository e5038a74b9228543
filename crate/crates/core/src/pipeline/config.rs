//! Flat `key = value` TOML configuration. Relative paths resolve against
//! the config file's directory; artifact paths not given explicitly are
//! placed under `work_dir`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use crate::error::{Error, Result};
use crate::evaluation::DEFAULT_KS;
use crate::lexical::{Bm25Config, IndexedFields};
use crate::reranker::TrainParams;
use crate::scoring::{RankSignal, ServiceConfig, DEFAULT_ALPHA};
use crate::supervision::{DEFAULT_POOL_DEPTH, DEFAULT_TRAIN_TOP};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScorerKind {
    Cache,
    Service,
}

impl std::str::FromStr for ScorerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cache" => Ok(ScorerKind::Cache),
            "service" => Ok(ScorerKind::Service),
            other => Err(Error::Config(format!(
                "scorer must be `cache` or `service`, got {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Paths {
    pub corpus: PathBuf,
    pub claims: PathBuf,
    pub stopwords: Option<PathBuf>,
    pub index: PathBuf,
    pub bm25_run: PathBuf,
    pub score_cache: PathBuf,
    pub combo_run: PathBuf,
    pub verifier_train: PathBuf,
    pub reranker_train: PathBuf,
    pub model: PathBuf,
    pub rerank_run: PathBuf,
    pub metrics: PathBuf,
    pub leaderboard: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub paths: Paths,
    pub fields: IndexedFields,
    pub bm25: Bm25Config,
    /// Retrieval depth of the BM25 run.
    pub k: usize,
    pub alpha: f64,
    pub rank_by: RankSignal,
    pub eval_ks: Vec<usize>,
    /// Number of top docs per claim that receive label predictions.
    pub verify_k: usize,
    pub n_negatives: usize,
    pub pool_depth: usize,
    pub train_top: usize,
    pub seed: u64,
    pub train: TrainParams,
    pub rerank_k: usize,
    pub scorer: ScorerKind,
    pub service: ServiceConfig,
    pub strict: bool,
}

/// Values given on the command line; `None` leaves the file or default.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub k: Option<usize>,
    pub alpha: Option<f64>,
    pub n_negatives: Option<usize>,
    pub seed: Option<u64>,
    pub scorer: Option<ScorerKind>,
    pub strict: Option<bool>,
    pub rank_by: Option<RankSignal>,
}

struct Table {
    values: BTreeMap<String, toml::Value>,
    base: PathBuf,
}

impl Table {
    fn take(&mut self, key: &str) -> Option<toml::Value> {
        self.values.remove(key)
    }

    fn type_err(key: &str, want: &str, got: &toml::Value) -> Error {
        Error::Config(format!("`{key}` must be {want}, got {}", got.type_str()))
    }

    fn string(&mut self, key: &str) -> Result<Option<String>> {
        match self.take(key) {
            None => Ok(None),
            Some(toml::Value::String(s)) => Ok(Some(s)),
            Some(v) => Err(Self::type_err(key, "a string", &v)),
        }
    }

    fn path(&mut self, key: &str) -> Result<Option<PathBuf>> {
        Ok(self.string(key)?.map(|s| self.base.join(s)))
    }

    fn uint(&mut self, key: &str) -> Result<Option<u64>> {
        match self.take(key) {
            None => Ok(None),
            Some(toml::Value::Integer(i)) if i >= 0 => Ok(Some(i as u64)),
            Some(v) => Err(Self::type_err(key, "a non-negative integer", &v)),
        }
    }

    fn usize(&mut self, key: &str) -> Result<Option<usize>> {
        Ok(self.uint(key)?.map(|v| v as usize))
    }

    fn float(&mut self, key: &str) -> Result<Option<f64>> {
        match self.take(key) {
            None => Ok(None),
            Some(toml::Value::Float(f)) => Ok(Some(f)),
            Some(toml::Value::Integer(i)) => Ok(Some(i as f64)),
            Some(v) => Err(Self::type_err(key, "a number", &v)),
        }
    }

    fn boolean(&mut self, key: &str) -> Result<Option<bool>> {
        match self.take(key) {
            None => Ok(None),
            Some(toml::Value::Boolean(b)) => Ok(Some(b)),
            Some(v) => Err(Self::type_err(key, "a boolean", &v)),
        }
    }

    fn usize_list(&mut self, key: &str) -> Result<Option<Vec<usize>>> {
        match self.take(key) {
            None => Ok(None),
            Some(toml::Value::Array(items)) => items
                .iter()
                .map(|v| match v {
                    toml::Value::Integer(i) if *i >= 1 => Ok(*i as usize),
                    other => Err(Self::type_err(key, "a list of positive integers", other)),
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
            Some(v) => Err(Self::type_err(key, "a list", &v)),
        }
    }

    fn parsed<T: std::str::FromStr<Err = Error>>(&mut self, key: &str) -> Result<Option<T>> {
        self.string(key)?.map(|s| s.parse()).transpose()
    }
}

impl PipelineConfig {
    /// Defaults only; `corpus` and `claims` are resolved against `base`.
    pub fn defaults(base: &Path) -> Self {
        Self::from_toml_str("", base, &Overrides::default()).expect("defaults are valid")
    }

    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let base = if base.as_os_str().is_empty() {
            Path::new(".")
        } else {
            base
        };
        Self::from_toml_str(&text, base, overrides)
            .map_err(|e| Error::Config(format!("{}: {}", path.display(), strip_config(e))))
    }

    pub fn from_toml_str(text: &str, base: &Path, o: &Overrides) -> Result<Self> {
        let values: BTreeMap<String, toml::Value> =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if let Some((k, _)) = values.iter().find(|(_, v)| v.is_table()) {
            return Err(Error::Config(format!(
                "`{k}` is a table; the config is a flat list of keys"
            )));
        }
        let mut t = Table {
            values,
            base: base.to_path_buf(),
        };

        let work = t.path("work_dir")?.unwrap_or_else(|| base.to_path_buf());
        let or_work = |p: Option<PathBuf>, name: &str| p.unwrap_or_else(|| work.join(name));
        let paths = Paths {
            corpus: t.path("corpus")?.unwrap_or_else(|| base.join("corpus.jsonl")),
            claims: t.path("claims")?.unwrap_or_else(|| base.join("claims.jsonl")),
            stopwords: t.path("stopwords")?,
            index: or_work(t.path("index")?, "index.txt"),
            bm25_run: or_work(t.path("bm25_run")?, "bm25.run"),
            score_cache: or_work(t.path("score_cache")?, "scores.tsv"),
            combo_run: or_work(t.path("combo_run")?, "combo.run"),
            verifier_train: or_work(t.path("verifier_train")?, "verifier_train.jsonl"),
            reranker_train: or_work(t.path("reranker_train")?, "reranker_train.jsonl"),
            model: or_work(t.path("model")?, "reranker.model"),
            rerank_run: or_work(t.path("rerank_run")?, "rerank.run"),
            metrics: or_work(t.path("metrics")?, "metrics.json"),
            leaderboard: t.path("leaderboard")?,
        };

        let mut service = ServiceConfig::default();
        if let Some(e) = t.string("scorer_endpoint")? {
            service.endpoint = e;
        }
        if let Some(b) = t.usize("scorer_batch_size")? {
            service.batch_size = b;
        }
        if let Some(s) = t.float("scorer_timeout_secs")? {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::Config("`scorer_timeout_secs` must be positive".into()));
            }
            service.timeout = Duration::from_secs_f64(s);
        }
        if let Some(m) = t.usize("scorer_max_in_flight")? {
            service.max_in_flight = m;
        }
        if let Some(r) = t.uint("scorer_retries")? {
            service.retries = r as u32;
        }

        let bm25_defaults = Bm25Config::default();
        let train_defaults = TrainParams::default();
        let seed = o.seed.or(t.uint("seed")?).unwrap_or(0);
        let cfg = PipelineConfig {
            fields: t.parsed("fields")?.unwrap_or_default(),
            bm25: Bm25Config {
                k1: t.float("k1")?.unwrap_or(bm25_defaults.k1),
                b: t.float("b")?.unwrap_or(bm25_defaults.b),
                pad_with_zero: t.boolean("pad_with_zero")?.unwrap_or(false),
            },
            k: o.k.or(t.usize("k")?).unwrap_or(100),
            alpha: o.alpha.or(t.float("alpha")?).unwrap_or(DEFAULT_ALPHA),
            rank_by: o.rank_by.or(t.parsed("rank_by")?).unwrap_or(RankSignal::Combo),
            eval_ks: t.usize_list("eval_ks")?.unwrap_or_else(|| DEFAULT_KS.to_vec()),
            verify_k: t.usize("verify_k")?.unwrap_or(3),
            n_negatives: o.n_negatives.or(t.usize("n_negatives")?).unwrap_or(5),
            pool_depth: t.usize("pool_depth")?.unwrap_or(DEFAULT_POOL_DEPTH),
            train_top: t.usize("train_top")?.unwrap_or(DEFAULT_TRAIN_TOP),
            seed,
            train: TrainParams {
                epochs: t.usize("epochs")?.unwrap_or(train_defaults.epochs),
                learning_rate: t.float("learning_rate")?.unwrap_or(train_defaults.learning_rate),
                seed,
                init_scale: t.float("init_scale")?.unwrap_or(train_defaults.init_scale),
            },
            rerank_k: t.usize("rerank_k")?.unwrap_or(100),
            scorer: o.scorer.or(t.parsed("scorer")?).unwrap_or(ScorerKind::Cache),
            service,
            strict: o.strict.or(t.boolean("strict")?).unwrap_or(false),
            paths,
        };
        if let Some(key) = t.values.keys().next() {
            return Err(Error::Config(format!("unknown key `{key}`")));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!("alpha {} outside [0, 1]", self.alpha)));
        }
        if !(self.bm25.k1 >= 0.0 && self.bm25.k1.is_finite()) {
            return Err(Error::Config(format!("k1 {} must be non-negative", self.bm25.k1)));
        }
        if !(0.0..=1.0).contains(&self.bm25.b) {
            return Err(Error::Config(format!("b {} outside [0, 1]", self.bm25.b)));
        }
        for (name, v) in [
            ("k", self.k),
            ("verify_k", self.verify_k),
            ("pool_depth", self.pool_depth),
            ("rerank_k", self.rerank_k),
            ("scorer_batch_size", self.service.batch_size),
            ("scorer_max_in_flight", self.service.max_in_flight),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("`{name}` must be at least 1")));
            }
        }
        if self.eval_ks.is_empty() {
            return Err(Error::Config("`eval_ks` must not be empty".into()));
        }
        if !(self.train.learning_rate > 0.0 && self.train.learning_rate.is_finite()) {
            return Err(Error::Config("`learning_rate` must be positive".into()));
        }
        Ok(())
    }
}

fn strip_config(e: Error) -> String {
    match e {
        Error::Config(m) => m,
        other => other.to_string(),
    }
}
