//! Multi-label emotion classification cast as span prediction.
//!
//! The emotion label names are prepended to every sentence as a first input
//! segment. An encoder produces one hidden vector per token, a small
//! feed-forward head turns each vector into a scalar score, and the scores
//! found at the label-token positions are read through a sigmoid as the
//! per-emotion probabilities. Training mixes binary cross-entropy with a
//! label-correlation-aware pairwise loss.
//!
//! Module map:
//!
//! | Module | Contents |
//! |---|---|
//! | [`labels`] | label space, label/probability vectors, positive/negative partition |
//! | [`data`] | E-c TSV loading, tweet normalization, dataset statistics |
//! | [`model`] | input assembly, encoders, scoring heads, forward pass |
//! | [`objectives`] | BCE, LCA and the joint objective with analytic gradients |
//! | [`trainer`] | Adam fine-tuning loop, early stopping, ablations, checkpoints |
//! | [`metrics`] | micro/macro F1, Jaccard score, stratified evaluation |
//! | [`analysis`] | word associations, heatmaps, label correlations, alpha sweep |

pub mod analysis;
pub mod checkpoint;
pub mod data;
mod error;
pub mod labels;
pub mod metrics;
pub mod model;
pub mod objectives;
pub mod optim;
pub mod param;
pub mod trainer;

pub use error::{Error, Result};
pub use labels::{LabelPartition, LabelSpace, LabelVector, ProbabilityVector};
