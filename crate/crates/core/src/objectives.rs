//! Training objectives: binary cross-entropy, the label-correlation-aware
//! (LCA) pairwise loss, and their α-weighted mixture.
//!
//! All losses take post-sigmoid probabilities. Every loss has a matching
//! `*_grad` returning the derivative with respect to those probabilities.
//!
//! ```text
//! BCE(y, ŷ)  = mean_c −[y_c ln ŷ_c + (1 − y_c) ln(1 − ŷ_c)]
//! LCA(y, ŷ)  = 1/(|y⁰||y¹|) Σ_{p∈y⁰, q∈y¹} exp(ŷ_p − ŷ_q)
//! joint      = (1 − α)·mean_batch BCE + α·mean_batch LCA
//! ```

use serde::{Deserialize, Serialize};

use crate::labels::partition;
use crate::{Error, LabelVector, Result};

/// Probabilities are clamped to `[EPS, 1 − EPS]` inside the logarithms.
pub const BCE_EPS: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    alpha: f64,
}

impl LossConfig {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Usage(format!("alpha must lie in [0, 1], got {alpha}")));
        }
        Ok(LossConfig { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig { alpha: 0.2 }
    }
}

/// Batch loss broken into its two parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossValue {
    pub total: f64,
    pub bce_part: f64,
    pub lca_part: f64,
}

fn check_len(y: &LabelVector, probs: &[f64]) -> Result<()> {
    if y.len() != probs.len() {
        return Err(Error::Dimension(format!(
            "label vector has {} entries, probabilities have {}",
            y.len(),
            probs.len()
        )));
    }
    Ok(())
}

pub fn bce_loss(y: &LabelVector, probs: impl AsRef<[f64]>) -> Result<f64> {
    let probs = probs.as_ref();
    check_len(y, probs)?;
    let sum: f64 = y
        .bits()
        .iter()
        .zip(probs)
        .map(|(&t, &p)| {
            let p = p.clamp(BCE_EPS, 1.0 - BCE_EPS);
            if t == 1 {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum();
    Ok(sum / probs.len() as f64)
}

/// Derivative of [`bce_loss`]; the clamp is treated as the identity so a
/// saturated probability still receives a gradient.
pub fn bce_grad(y: &LabelVector, probs: impl AsRef<[f64]>) -> Result<Vec<f64>> {
    let probs = probs.as_ref();
    check_len(y, probs)?;
    let n = probs.len() as f64;
    Ok(y.bits()
        .iter()
        .zip(probs)
        .map(|(&t, &p)| {
            let p = p.clamp(BCE_EPS, 1.0 - BCE_EPS);
            if t == 1 {
                -1.0 / (p * n)
            } else {
                1.0 / ((1.0 - p) * n)
            }
        })
        .collect())
}

/// Zero when either the positive or the negative set is empty.
pub fn lca_loss(y: &LabelVector, probs: impl AsRef<[f64]>) -> Result<f64> {
    let probs = probs.as_ref();
    check_len(y, probs)?;
    let part = partition(y);
    if part.negatives.is_empty() || part.positives.is_empty() {
        return Ok(0.0);
    }
    // exp(a − b) = exp(a)·exp(−b): the double sum factorizes.
    let neg: f64 = part.negatives.iter().map(|&p| probs[p].exp()).sum();
    let pos: f64 = part.positives.iter().map(|&q| (-probs[q]).exp()).sum();
    Ok(neg * pos / (part.negatives.len() * part.positives.len()) as f64)
}

pub fn lca_grad(y: &LabelVector, probs: impl AsRef<[f64]>) -> Result<Vec<f64>> {
    let probs = probs.as_ref();
    check_len(y, probs)?;
    let mut grad = vec![0.0; probs.len()];
    let part = partition(y);
    if part.negatives.is_empty() || part.positives.is_empty() {
        return Ok(grad);
    }
    let norm = (part.negatives.len() * part.positives.len()) as f64;
    let neg: f64 = part.negatives.iter().map(|&p| probs[p].exp()).sum();
    let pos: f64 = part.positives.iter().map(|&q| (-probs[q]).exp()).sum();
    for &p in &part.negatives {
        grad[p] = probs[p].exp() * pos / norm;
    }
    for &q in &part.positives {
        grad[q] = -(-probs[q]).exp() * neg / norm;
    }
    Ok(grad)
}

fn check_batch<P: AsRef<[f64]>>(batch_y: &[LabelVector], batch_probs: &[P]) -> Result<()> {
    if batch_y.is_empty() {
        return Err(Error::Usage("joint loss over an empty batch".into()));
    }
    if batch_y.len() != batch_probs.len() {
        return Err(Error::Dimension(format!(
            "{} label vectors but {} probability vectors",
            batch_y.len(),
            batch_probs.len()
        )));
    }
    Ok(())
}

pub fn joint_loss<P: AsRef<[f64]>>(batch_y: &[LabelVector], batch_probs: &[P], cfg: LossConfig) -> Result<LossValue> {
    check_batch(batch_y, batch_probs)?;
    let m = batch_y.len() as f64;
    let mut bce = 0.0;
    let mut lca = 0.0;
    for (y, p) in batch_y.iter().zip(batch_probs) {
        bce += bce_loss(y, p)?;
        lca += lca_loss(y, p)?;
    }
    let (bce_part, lca_part) = (bce / m, lca / m);
    let a = cfg.alpha;
    // Written so the endpoints reproduce each part bit-exactly.
    let total = if a == 0.0 {
        bce_part
    } else if a == 1.0 {
        lca_part
    } else {
        (1.0 - a) * bce_part + a * lca_part
    };
    Ok(LossValue { total, bce_part, lca_part })
}

/// Gradient of [`joint_loss`]'s total with respect to every probability in the batch.
pub fn joint_loss_grad<P: AsRef<[f64]>>(
    batch_y: &[LabelVector],
    batch_probs: &[P],
    cfg: LossConfig,
) -> Result<Vec<Vec<f64>>> {
    check_batch(batch_y, batch_probs)?;
    let m = batch_y.len() as f64;
    let a = cfg.alpha;
    batch_y
        .iter()
        .zip(batch_probs)
        .map(|(y, p)| {
            let gb = bce_grad(y, p)?;
            let gl = lca_grad(y, p)?;
            Ok(gb.iter().zip(&gl).map(|(b, l)| ((1.0 - a) * b + a * l) / m).collect())
        })
        .collect()
}
