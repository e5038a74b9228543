use std::io::{BufRead, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scoring::normalize_relevance;

use super::features::{FeatureVector, FEATURE_DIM, FEATURE_NAMES};

pub const MODEL_FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "evrank-reranker";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainParams {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Half-width of the uniform weight initialization; 0 starts from zeros.
    pub init_scale: f64,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            epochs: 500,
            learning_rate: 1.0,
            seed: 0,
            init_scale: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingMeta {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub examples: usize,
    pub final_loss: f64,
}

/// Sigmoid-linear pointwise regressor: `predict(x) = sigmoid(w . x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RerankerModel {
    pub weights: [f64; FEATURE_DIM],
    pub meta: TrainingMeta,
}

fn sigmoid(z: f64) -> f64 {
    normalize_relevance(z).unwrap_or(if z > 0.0 { 1.0 } else { 0.0 })
}

impl RerankerModel {
    pub fn predict(&self, x: &FeatureVector) -> f64 {
        sigmoid(x.dot(&self.weights))
    }
}

/// Mean squared error of `sigmoid(w . x)` against `targets` and its
/// gradient with respect to `w`.
pub fn mse_and_gradient(
    weights: &[f64; FEATURE_DIM],
    xs: &[FeatureVector],
    targets: &[f64],
) -> (f64, [f64; FEATURE_DIM]) {
    let n = xs.len() as f64;
    let mut loss = 0.0;
    let mut grad = [0.0; FEATURE_DIM];
    for (x, &t) in xs.iter().zip(targets) {
        let p = sigmoid(x.dot(weights));
        let r = p - t;
        loss += r * r;
        let scale = 2.0 * r * p * (1.0 - p);
        for (g, xi) in grad.iter_mut().zip(&x.0) {
            *g += scale * xi;
        }
    }
    for g in &mut grad {
        *g /= n;
    }
    (loss / n, grad)
}

/// Full-batch gradient descent on MSE. Returns the model and the loss at
/// the start of every epoch followed by the final loss.
pub fn train(
    xs: &[FeatureVector],
    targets: &[f64],
    params: &TrainParams,
) -> Result<(RerankerModel, Vec<f64>)> {
    if xs.is_empty() {
        return Err(Error::Training("empty training set".into()));
    }
    if xs.len() != targets.len() {
        return Err(Error::Training(format!(
            "{} feature vectors for {} targets",
            xs.len(),
            targets.len()
        )));
    }
    if let Some(t) = targets.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::Training(format!("target {t} outside [0, 1]")));
    }
    if !(params.learning_rate > 0.0 && params.learning_rate.is_finite()) {
        return Err(Error::Training("learning rate must be positive".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut w = [0.0; FEATURE_DIM];
    if params.init_scale > 0.0 {
        for wi in &mut w {
            *wi = rng.gen_range(-params.init_scale..=params.init_scale);
        }
    }

    let mut losses = Vec::with_capacity(params.epochs + 1);
    for epoch in 0..=params.epochs {
        let (loss, grad) = mse_and_gradient(&w, xs, targets);
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Training(format!(
                "non-finite loss at epoch {epoch} (loss {loss}, weights {w:?})"
            )));
        }
        losses.push(loss);
        if epoch == params.epochs {
            break;
        }
        for (wi, gi) in w.iter_mut().zip(&grad) {
            *wi -= params.learning_rate * gi;
        }
    }

    let model = RerankerModel {
        weights: w,
        meta: TrainingMeta {
            epochs: params.epochs,
            learning_rate: params.learning_rate,
            seed: params.seed,
            examples: xs.len(),
            final_loss: *losses.last().expect("at least one loss"),
        },
    };
    Ok((model, losses))
}

pub fn write_model<W: Write>(model: &RerankerModel, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{MAGIC} {MODEL_FORMAT_VERSION}")?;
    for (name, weight) in FEATURE_NAMES.iter().zip(&model.weights) {
        writeln!(w, "weight {name} {weight}")?;
    }
    let m = &model.meta;
    writeln!(w, "epochs {}", m.epochs)?;
    writeln!(w, "learning_rate {}", m.learning_rate)?;
    writeln!(w, "seed {}", m.seed)?;
    writeln!(w, "examples {}", m.examples)?;
    writeln!(w, "final_loss {}", m.final_loss)?;
    Ok(())
}

pub fn read_model<R: BufRead>(reader: R, path: &Path) -> Result<RerankerModel> {
    let mut weights = [None; FEATURE_DIM];
    let mut fields = std::collections::BTreeMap::new();
    let mut saw_header = false;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let parts: Vec<&str> = line.split_whitespace().collect();
        let err = |m: String| Error::parse(path, line_no, m);
        match parts.as_slice() {
            [] => continue,
            [MAGIC, version] if !saw_header => {
                if *version != MODEL_FORMAT_VERSION.to_string() {
                    return Err(err(format!("unsupported model version {version}")));
                }
                saw_header = true;
            }
            _ if !saw_header => return Err(err("missing model header".into())),
            ["weight", name, value] => {
                let slot = FEATURE_NAMES
                    .iter()
                    .position(|n| n == name)
                    .ok_or_else(|| err(format!("unknown feature {name}")))?;
                let v: f64 = value.parse().map_err(|_| err(format!("bad weight {value}")))?;
                if !v.is_finite() {
                    return Err(err(format!("non-finite weight for {name}")));
                }
                weights[slot] = Some(v);
            }
            [key, value] => {
                fields.insert(key.to_string(), (line_no, value.to_string()));
            }
            _ => return Err(err(format!("unrecognized line {line:?}"))),
        }
    }
    let mut w = [0.0; FEATURE_DIM];
    for (i, slot) in weights.iter().enumerate() {
        w[i] = slot.ok_or_else(|| {
            Error::parse(path, 0, format!("missing weight for {}", FEATURE_NAMES[i]))
        })?;
    }
    fn field<T: std::str::FromStr>(
        fields: &std::collections::BTreeMap<String, (usize, String)>,
        key: &str,
        path: &Path,
    ) -> Result<T> {
        let (line, raw) = fields
            .get(key)
            .ok_or_else(|| Error::parse(path, 0, format!("missing `{key}`")))?;
        raw.parse()
            .map_err(|_| Error::parse(path, *line, format!("bad `{key}` value {raw:?}")))
    }
    Ok(RerankerModel {
        weights: w,
        meta: TrainingMeta {
            epochs: field(&fields, "epochs", path)?,
            learning_rate: field(&fields, "learning_rate", path)?,
            seed: field(&fields, "seed", path)?,
            examples: field(&fields, "examples", path)?,
            final_loss: field(&fields, "final_loss", path)?,
        },
    })
}
