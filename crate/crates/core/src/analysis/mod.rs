//! Model introspection: label-word associations, per-sentence similarity
//! heatmaps, label correlation matrices and the α sweep.

mod correlation;
pub mod plot;
mod similarity;
mod sweep;

pub use correlation::{label_correlations, pearson, CorrelationMatrix, LabelSource};
pub use similarity::{
    cosine, example_similarities, sentence_heatmap, similarity_from_hidden, word_associations, AssociationTable,
    SimilarityMatrix,
};
pub use sweep::{alpha_sweep, default_alpha_grid, SweepReport, SweepRow};
