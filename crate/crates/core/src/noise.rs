//! Span masking for denoising pre-training.
//!
//! Spans of 1 to 3 tokens are replaced by numbered mask ids in the source;
//! the target lists each mask followed by the tokens it replaced.

use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bpe::TokenId;

pub const DEFAULT_MASK_RATE: f64 = 0.15;
pub const MAX_SPAN: usize = 3;
const MEAN_SPAN: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisedExample {
    pub source: Vec<TokenId>,
    pub target: Vec<TokenId>,
    #[serde(skip)]
    pub seed: u64,
    #[serde(skip)]
    pub mask_rate: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NoiseError {
    #[error("mask rate {0} is outside [0, 1)")]
    RateOutOfRange(f64),
    #[error("input token {0} is a mask id")]
    MaskInInput(TokenId),
    #[error("malformed target: {0}")]
    MalformedTarget(String),
}

/// Mask random spans of `tokens`.
///
/// Walks left to right; at each eligible position a span starts with
/// probability `mask_rate / 2`, its length drawn uniformly from 1..=3 and cut
/// at the end of the sequence. The token after a span is never masked, so
/// spans never touch. When `masks` runs out no further spans are opened.
pub fn noise(tokens: &[TokenId], mask_rate: f64, seed: u64, masks: &[TokenId]) -> Result<NoisedExample, NoiseError> {
    if !(0.0..1.0).contains(&mask_rate) {
        return Err(NoiseError::RateOutOfRange(mask_rate));
    }
    let mask_set: HashSet<TokenId> = masks.iter().copied().collect();
    if let Some(&t) = tokens.iter().find(|t| mask_set.contains(t)) {
        return Err(NoiseError::MaskInInput(t));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = mask_rate / MEAN_SPAN;
    let mut source = Vec::with_capacity(tokens.len());
    let mut target = Vec::new();
    let mut next_mask = 0;
    let mut i = 0;
    while i < tokens.len() {
        if next_mask < masks.len() && rng.gen::<f64>() < p {
            let len = rng.gen_range(1..=MAX_SPAN).min(tokens.len() - i);
            let m = masks[next_mask];
            next_mask += 1;
            source.push(m);
            target.push(m);
            target.extend_from_slice(&tokens[i..i + len]);
            i += len;
            if i < tokens.len() {
                source.push(tokens[i]);
                i += 1;
            }
        } else {
            source.push(tokens[i]);
            i += 1;
        }
    }
    Ok(NoisedExample { source, target, seed, mask_rate })
}

/// Splice every target span back over its mask in `source`.
pub fn denoise(source: &[TokenId], target: &[TokenId], masks: &[TokenId]) -> Result<Vec<TokenId>, NoiseError> {
    let mask_index: HashMap<TokenId, usize> = masks.iter().enumerate().map(|(i, &m)| (m, i)).collect();
    let mut spans: HashMap<TokenId, &[TokenId]> = HashMap::new();
    let mut i = 0;
    while i < target.len() {
        let m = target[i];
        if !mask_index.contains_key(&m) {
            return Err(NoiseError::MalformedTarget(format!("target position {i} is not a mask")));
        }
        let end = (i + 1..target.len())
            .find(|&j| mask_index.contains_key(&target[j]))
            .unwrap_or(target.len());
        if end == i + 1 {
            return Err(NoiseError::MalformedTarget(format!("mask {m} has an empty span")));
        }
        if spans.insert(m, &target[i + 1..end]).is_some() {
            return Err(NoiseError::MalformedTarget(format!("mask {m} appears twice in target")));
        }
        i = end;
    }
    let mut out = Vec::with_capacity(source.len() + target.len());
    let mut used = 0;
    for &t in source {
        if mask_index.contains_key(&t) {
            let span = spans
                .get(&t)
                .ok_or_else(|| NoiseError::MalformedTarget(format!("mask {t} missing from target")))?;
            out.extend_from_slice(span);
            used += 1;
        } else {
            out.push(t);
        }
    }
    if used != spans.len() {
        return Err(NoiseError::MalformedTarget("target has masks absent from source".into()));
    }
    Ok(out)
}
