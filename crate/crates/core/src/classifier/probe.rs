use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::focal::{focal_loss_logit, sigmoid};
use super::TrainingExample;
use crate::stats::ConfusionCounts;
use crate::{Error, Result};

pub const PRB1_MAGIC: &[u8; 4] = b"PRB1";

/// Class weighting for the focal loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FocalAlpha {
    /// `"balanced"`: each class weighted by the other class's frequency.
    Named(AlphaPreset),
    /// Weight of the YTA class; NTA gets `1 − α`.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlphaPreset {
    Balanced,
}

impl Default for FocalAlpha {
    fn default() -> Self {
        FocalAlpha::Named(AlphaPreset::Balanced)
    }
}

impl FocalAlpha {
    /// `[α_NTA, α_YTA]` for the given class counts.
    pub fn class_weights(self, negatives: usize, positives: usize) -> [f64; 2] {
        match self {
            FocalAlpha::Named(AlphaPreset::Balanced) => {
                if negatives == 0 || positives == 0 {
                    return [1.0, 1.0];
                }
                let n = (negatives + positives) as f64;
                [positives as f64 / n, negatives as f64 / n]
            }
            FocalAlpha::Fixed(a) => [1.0 - a, a],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub focal_gamma: f64,
    pub focal_alpha: FocalAlpha,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            learning_rate: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            focal_gamma: 2.0,
            focal_alpha: FocalAlpha::default(),
            batch_size: 32,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.epochs < 1 {
            return fail("train.epochs must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail("train.learning_rate must be positive");
        }
        if !(self.focal_gamma >= 0.0 && self.focal_gamma.is_finite()) {
            return fail("train.focal_gamma must be non-negative");
        }
        if self.batch_size < 1 {
            return fail("train.batch_size must be at least 1");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return fail("train.beta1 and train.beta2 must lie in [0, 1)");
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return fail("train.epsilon must be positive");
        }
        if let FocalAlpha::Fixed(a) = self.focal_alpha {
            if !(0.0..=1.0).contains(&a) {
                return fail("train.focal_alpha must be \"balanced\" or a number in [0, 1]");
            }
        }
        Ok(())
    }
}

/// Linear classification head: `P(YTA | x) = σ(w·x + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl ProbeModel {
    pub fn zeros(dim: usize) -> Self {
        ProbeModel {
            weights: vec![0.0; dim],
            bias: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    fn score(&self, x: &[f32]) -> f64 {
        self.weights
            .iter()
            .zip(x)
            .map(|(&w, &v)| w * v as f64)
            .sum::<f64>()
            + self.bias
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + 8 * (self.dim() + 1));
        out.extend_from_slice(PRB1_MAGIC);
        out.extend_from_slice(&(self.dim() as u32).to_le_bytes());
        for v in self.weights.iter().chain(std::iter::once(&self.bias)) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let err = |offset: usize, message: String| Error::ModelFormat {
            offset: offset as u64,
            message,
        };
        if bytes.len() < 8 {
            return Err(err(0, format!("truncated header ({} bytes)", bytes.len())));
        }
        if &bytes[..4] != PRB1_MAGIC {
            return Err(err(0, "bad magic".into()));
        }
        let dim = u32::from_le_bytes([bytes[4], bytes[5], bytes[6], bytes[7]]) as usize;
        let expected = 8 + 8 * (dim + 1);
        if bytes.len() != expected {
            return Err(err(
                bytes.len().min(expected),
                format!("expected {expected} bytes for dim {dim}, got {}", bytes.len()),
            ));
        }
        let mut values = Vec::with_capacity(dim + 1);
        for (k, chunk) in bytes[8..].chunks_exact(8).enumerate() {
            let v = f64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
            if !v.is_finite() {
                return Err(err(8 + 8 * k, "non-finite parameter".into()));
            }
            values.push(v);
        }
        let bias = values.pop().expect("dim + 1 values");
        Ok(ProbeModel {
            weights: values,
            bias,
        })
    }

    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(&self.to_bytes())
    }

    pub fn read<R: Read>(mut r: R) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)
            .map_err(|e| Error::io("<model stream>", e))?;
        ProbeModel::from_bytes(&bytes)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        ProbeModel::from_bytes(&bytes)
    }
}

/// Probability of YTA for one embedding.
pub fn predict(model: &ProbeModel, embedding: &[f32]) -> Result<f64> {
    if embedding.len() != model.dim() {
        return Err(Error::domain(format!(
            "embedding has dim {}, model expects {}",
            embedding.len(),
            model.dim()
        )));
    }
    Ok(sigmoid(model.score(embedding)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_accuracy: f64,
    pub val_macro_f1: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: ProbeModel,
    /// 1-based epoch whose model was kept.
    pub best_epoch: usize,
    pub epochs: Vec<EpochMetrics>,
}

impl TrainOutcome {
    pub fn epochs_tsv(&self) -> String {
        let mut out = String::from("epoch\ttrain_loss\tval_accuracy\tval_macro_f1\tselected\n");
        for m in &self.epochs {
            out.push_str(&format!(
                "{}\t{:.6}\t{:.4}\t{:.4}\t{}\n",
                m.epoch,
                m.train_loss,
                m.val_accuracy,
                m.val_macro_f1,
                if m.epoch == self.best_epoch { "*" } else { "" }
            ));
        }
        out
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        }
    }

    fn update(&mut self, params: &mut [f64], grads: &[f64], cfg: &TrainConfig) {
        self.step += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.step);
        let c2 = 1.0 - cfg.beta2.powi(self.step);
        for k in 0..params.len() {
            self.m[k] = cfg.beta1 * self.m[k] + (1.0 - cfg.beta1) * grads[k];
            self.v[k] = cfg.beta2 * self.v[k] + (1.0 - cfg.beta2) * grads[k] * grads[k];
            let m_hat = self.m[k] / c1;
            let v_hat = self.v[k] / c2;
            params[k] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
}

fn evaluate_split(model: &ProbeModel, examples: &[TrainingExample]) -> ConfusionCounts {
    let preds: Vec<bool> = examples
        .iter()
        .map(|e| sigmoid(model.score(&e.embedding)) >= 0.5)
        .collect();
    let golds: Vec<bool> = examples.iter().map(|e| e.label == 1).collect();
    ConfusionCounts::from_labels(&preds, &golds)
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Mini-batch Adam on the mean focal loss. Returns the parameters of the
/// epoch with the best validation macro F1 (earliest on ties). With an empty
/// validation set the training set is scored instead.
pub fn train_probe(
    train: &[TrainingExample],
    val: &[TrainingExample],
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    let Some(first) = train.first() else {
        return Err(Error::domain("training set is empty"));
    };
    let dim = first.embedding.len();
    if let Some(bad) = train.iter().chain(val).find(|e| e.embedding.len() != dim) {
        return Err(Error::domain(format!(
            "example {} has dim {}, expected {dim}",
            bad.verdict_id,
            bad.embedding.len()
        )));
    }

    let positives = train.iter().filter(|e| e.label == 1).count();
    let negatives = train.len() - positives;
    let alpha = config.focal_alpha.class_weights(negatives, positives);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params: Vec<f64> = (0..dim).map(|_| rng.random_range(-0.01..0.01)).collect();
    // Bias starts at the alpha-weighted class prior.
    let weighted_pos = alpha[1] * positives as f64;
    let prior = weighted_pos / (weighted_pos + alpha[0] * negatives as f64);
    params.push(logit(prior.clamp(0.01, 0.99)));

    let mut adam = Adam::new(dim + 1);
    let mut grads = vec![0.0; dim + 1];
    let mut order: Vec<usize> = (0..train.len()).collect();
    let selection = if val.is_empty() { train } else { val };
    let mut best: Option<(f64, usize, ProbeModel)> = None;
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for (batch_no, batch) in order.chunks(config.batch_size).enumerate() {
            grads.iter_mut().for_each(|g| *g = 0.0);
            let mut batch_loss = 0.0;
            for &idx in batch {
                let ex = &train[idx];
                let score = params[..dim]
                    .iter()
                    .zip(&ex.embedding)
                    .map(|(&w, &x)| w * x as f64)
                    .sum::<f64>()
                    + params[dim];
                let fl = focal_loss_logit(
                    score,
                    ex.label,
                    alpha[ex.label as usize],
                    config.focal_gamma,
                );
                batch_loss += fl.loss;
                for (g, &x) in grads[..dim].iter_mut().zip(&ex.embedding) {
                    *g += fl.grad * x as f64;
                }
                grads[dim] += fl.grad;
            }
            let scale = 1.0 / batch.len() as f64;
            grads.iter_mut().for_each(|g| *g *= scale);
            if !batch_loss.is_finite() || grads.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: batch_no,
                });
            }
            loss_sum += batch_loss;
            adam.update(&mut params, &grads, config);
        }

        let model = ProbeModel {
            weights: params[..dim].to_vec(),
            bias: params[dim],
        };
        let counts = evaluate_split(&model, selection);
        let macro_f1 = counts.macro_f1();
        history.push(EpochMetrics {
            epoch,
            train_loss: loss_sum / train.len() as f64,
            val_accuracy: counts.accuracy(),
            val_macro_f1: macro_f1,
        });
        if best.as_ref().is_none_or(|(f1, _, _)| macro_f1 > *f1) {
            best = Some((macro_f1, epoch, model));
        }
    }
    let (_, best_epoch, model) = best.expect("at least one epoch");
    Ok(TrainOutcome {
        model,
        best_epoch,
        epochs: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn example(id: usize, embedding: Vec<f32>, label: u8) -> TrainingExample {
        TrainingExample {
            verdict_id: format!("p{id}/c"),
            post_id: format!("p{id}"),
            input_text: String::new(),
            embedding,
            label,
        }
    }

    fn blobs(n: usize, seed: u64) -> Vec<TrainingExample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let label = u8::from(i % 4 == 0);
                let sign = if label == 1 { 1.0 } else { -1.0 };
                let x = (0..4)
                    .map(|_| sign * 2.0 + rng.random_range(-1.0f32..1.0))
                    .collect();
                example(i, x, label)
            })
            .collect()
    }

    #[test]
    fn predict_basics() {
        let zero = ProbeModel::zeros(3);
        assert_eq!(predict(&zero, &[1.0, 2.0, 3.0]).unwrap(), 0.5);
        let big = ProbeModel {
            weights: vec![100.0],
            bias: 0.0,
        };
        assert!(predict(&big, &[1.0]).unwrap() > 0.999_999);
        assert!(predict(&zero, &[1.0]).is_err());
    }

    #[test]
    fn predict_matches_manual_dot_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let model = ProbeModel {
                weights: (0..5).map(|_| rng.random_range(-1.0..1.0)).collect(),
                bias: rng.random_range(-1.0..1.0),
            };
            let x: Vec<f32> = (0..5).map(|_| rng.random_range(-2.0f32..2.0)).collect();
            let mut z = model.bias;
            for (w, v) in model.weights.iter().zip(&x) {
                z += w * *v as f64;
            }
            let manual = 1.0 / (1.0 + (-z).exp());
            assert_abs_diff_eq!(predict(&model, &x).unwrap(), manual, epsilon = 1e-12);
        }
    }

    #[test]
    fn prb1_roundtrip_and_corruption() {
        let model = ProbeModel {
            weights: vec![0.25, -1.5, 3.0],
            bias: -0.125,
        };
        let bytes = model.to_bytes();
        assert_eq!(&bytes[..4], b"PRB1");
        assert_eq!(bytes.len(), 8 + 4 * 8);
        assert_eq!(ProbeModel::from_bytes(&bytes).unwrap(), model);
        assert!(ProbeModel::from_bytes(&bytes[..20]).is_err());
        let mut bad = bytes.clone();
        bad[1] = b'X';
        assert!(ProbeModel::from_bytes(&bad).is_err());
    }

    #[test]
    fn config_invariants() {
        let mut cfg = TrainConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.epochs = 0;
        assert!(cfg.validate().is_err());
        let cfg = TrainConfig {
            learning_rate: 0.0,
            ..TrainConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = TrainConfig {
            focal_gamma: -1.0,
            ..TrainConfig::default()
        };
        assert!(cfg.validate().is_err());
        assert!(train_probe(&blobs(8, 0), &[], &TrainConfig { epochs: 0, ..TrainConfig::default() }).is_err());
    }

    #[test]
    fn alpha_weights() {
        assert_eq!(FocalAlpha::default().class_weights(90, 10), [0.1, 0.9]);
        assert_eq!(FocalAlpha::default().class_weights(0, 10), [1.0, 1.0]);
        assert_eq!(FocalAlpha::Fixed(0.25).class_weights(5, 5), [0.75, 0.25]);
    }

    #[test]
    fn learns_separable_blobs_deterministically() {
        let train = blobs(400, 1);
        let val = blobs(100, 2);
        let cfg = TrainConfig::default();
        let a = train_probe(&train, &val, &cfg).unwrap();
        let b = train_probe(&train, &val, &cfg).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.epochs.len(), 10);
        assert!(a.epochs[a.best_epoch - 1].val_macro_f1 >= 0.95);
    }

    #[test]
    fn constant_labels_predict_that_label() {
        let train: Vec<_> = blobs(64, 3).into_iter().map(|mut e| {
            e.label = 0;
            e
        }).collect();
        let out = train_probe(&train, &[], &TrainConfig::default()).unwrap();
        assert!(train.iter().all(|e| predict(&out.model, &e.embedding).unwrap() < 0.5));
    }

    #[test]
    fn rejects_mixed_dims() {
        let mut train = blobs(4, 0);
        train[2].embedding.pop();
        assert!(train_probe(&train, &[], &TrainConfig::default()).is_err());
        assert!(train_probe(&[], &[], &TrainConfig::default()).is_err());
    }
}
