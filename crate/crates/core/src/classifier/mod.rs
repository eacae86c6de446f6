//! Verdict classification over frozen sentence embeddings.
//!
//! Inputs are the situation joined with the scrubbed comment text; the
//! classifier is a logistic head trained with focal loss and Adam.

mod focal;
mod probe;
mod split;

use std::collections::HashMap;

pub use focal::{focal_loss, focal_loss_logit, sigmoid, FocalLoss, PROB_CLAMP};
pub use probe::{
    predict, train_probe, AlphaPreset, EpochMetrics, FocalAlpha, ProbeModel, TrainConfig,
    TrainOutcome, PRB1_MAGIC,
};
pub use split::{stratified_split, Split, SplitOutcome, SplitRatios, SplitSpec, StratifyBy};

use crate::corpus::{Post, VerdictLexicon, VerdictRecord};
use crate::embedding::EmbeddingMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    pub verdict_id: String,
    pub post_id: String,
    pub input_text: String,
    pub embedding: Vec<f32>,
    /// 1 = YTA, 0 = NTA.
    pub label: u8,
}

/// Classifier input text: situation and comment, with lexicon tokens removed
/// from the joined string.
pub fn input_text(situation: &str, scrubbed_comment: &str, lexicon: &VerdictLexicon) -> String {
    lexicon.scrub(&format!("{situation} {scrubbed_comment}"))
}

/// One example per verdict, with its embedding looked up by verdict id.
pub fn build_examples(
    posts: &[Post],
    verdicts: &[VerdictRecord],
    embeddings: &EmbeddingMatrix,
    lexicon: &VerdictLexicon,
) -> Result<Vec<TrainingExample>> {
    let situations: HashMap<&str, &str> = posts
        .iter()
        .map(|p| (p.id.as_str(), p.situation.as_str()))
        .collect();
    let mut missing = Vec::new();
    let mut examples = Vec::with_capacity(verdicts.len());
    for v in verdicts {
        let id = v.id();
        let situation = situations.get(v.post_id.as_str()).ok_or_else(|| {
            Error::domain(format!("verdict {id} references unknown post {}", v.post_id))
        })?;
        let Some(embedding) = embeddings.get(&id) else {
            missing.push(id);
            continue;
        };
        let text = input_text(situation, &v.scrubbed_text, lexicon);
        debug_assert!(!lexicon.contains_token(&text));
        examples.push(TrainingExample {
            verdict_id: id,
            post_id: v.post_id.clone(),
            input_text: text,
            embedding: embedding.to_vec(),
            label: v.verdict.label(),
        });
    }
    if !missing.is_empty() {
        return Err(Error::MissingEmbeddings(missing));
    }
    Ok(examples)
}
