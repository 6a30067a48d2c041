//! Multi-label evaluation: micro F1, macro F1 and the Jaccard index score.
//!
//! Conventions:
//! - per-class F1 with a zero denominator is 0;
//! - an example whose gold and predicted sets are both empty scores Jaccard 1.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, LabelVector, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    #[serde(rename = "miF1")]
    pub micro_f1: f64,
    #[serde(rename = "maF1")]
    pub macro_f1: f64,
    #[serde(rename = "jacS")]
    pub jaccard: f64,
    pub per_class_f1: Vec<f64>,
    /// Gold positives per class.
    pub support: Vec<usize>,
    pub examples: usize,
}

fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

pub fn evaluate(gold: &[LabelVector], pred: &[LabelVector]) -> Result<MetricReport> {
    if gold.len() != pred.len() {
        return Err(Error::Usage(format!("{} gold vectors but {} predictions", gold.len(), pred.len())));
    }
    if gold.is_empty() {
        return Err(Error::Usage("cannot evaluate an empty set".into()));
    }
    let classes = gold[0].len();
    if gold.iter().chain(pred).any(|v| v.len() != classes) {
        return Err(Error::Usage("label vectors have inconsistent lengths".into()));
    }

    let mut tp = vec![0usize; classes];
    let mut fp = vec![0usize; classes];
    let mut fn_ = vec![0usize; classes];
    let mut jaccard_sum = 0.0;
    for (g, p) in gold.iter().zip(pred) {
        let mut inter = 0;
        let mut union = 0;
        for c in 0..classes {
            match (g.get(c), p.get(c)) {
                (true, true) => {
                    tp[c] += 1;
                    inter += 1;
                    union += 1;
                }
                (false, true) => {
                    fp[c] += 1;
                    union += 1;
                }
                (true, false) => {
                    fn_[c] += 1;
                    union += 1;
                }
                (false, false) => {}
            }
        }
        jaccard_sum += if union == 0 { 1.0 } else { inter as f64 / union as f64 };
    }

    let per_class_f1: Vec<f64> = (0..classes).map(|c| f1(tp[c], fp[c], fn_[c])).collect();
    let micro_f1 = f1(tp.iter().sum(), fp.iter().sum(), fn_.iter().sum());
    let macro_f1 = per_class_f1.iter().sum::<f64>() / classes as f64;
    let support = (0..classes).map(|c| tp[c] + fn_[c]).collect();
    Ok(MetricReport {
        micro_f1,
        macro_f1,
        jaccard: jaccard_sum / gold.len() as f64,
        per_class_f1,
        support,
        examples: gold.len(),
    })
}

/// [`evaluate`] restricted to examples with at least `min_k` gold labels.
pub fn stratified_eval(gold: &[LabelVector], pred: &[LabelVector], min_k: usize) -> Result<MetricReport> {
    if min_k == 0 {
        return Err(Error::Usage("min_k must be at least 1".into()));
    }
    if gold.len() != pred.len() {
        return Err(Error::Usage(format!("{} gold vectors but {} predictions", gold.len(), pred.len())));
    }
    let (g, p): (Vec<LabelVector>, Vec<LabelVector>) = gold
        .iter()
        .zip(pred)
        .filter(|(g, _)| g.count() >= min_k)
        .map(|(g, p)| (g.clone(), p.clone()))
        .unzip();
    if g.is_empty() {
        return Err(Error::EmptyStratum { min_k });
    }
    evaluate(&g, &p)
}

impl MetricReport {
    /// Aligned text table; `names` labels the per-class rows.
    pub fn to_table(&self, title: &str, names: &[String]) -> String {
        let mut out = format!("{title} (n = {})\n", self.examples);
        out.push_str(&format!("  {:<14}{:>8.4}\n", "miF1", self.micro_f1));
        out.push_str(&format!("  {:<14}{:>8.4}\n", "maF1", self.macro_f1));
        out.push_str(&format!("  {:<14}{:>8.4}\n", "jacS", self.jaccard));
        for (i, f) in self.per_class_f1.iter().enumerate() {
            let name = names.get(i).map_or_else(|| format!("class {i}"), Clone::clone);
            out.push_str(&format!("    {:<12}{:>8.4}  (support {})\n", name, f, self.support[i]));
        }
        out
    }
}

impl fmt::Display for MetricReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "miF1 {:.4}  maF1 {:.4}  jacS {:.4}", self.micro_f1, self.macro_f1, self.jaccard)
    }
}
