use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use super::{Dataset, Split};
use crate::{Error, Result};

/// Split sizes and the distribution of co-existing emotions.
///
/// `co_existing_pct[k]` is the share of non-neutral instances carrying exactly
/// `k` gold labels, over all splits combined. Keys run from 1 to the class count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetStats {
    pub counts: BTreeMap<Split, usize>,
    pub total: usize,
    pub class_count: usize,
    pub neutral_count: usize,
    pub co_existing_counts: BTreeMap<usize, usize>,
    pub co_existing_pct: BTreeMap<usize, f64>,
}

pub fn compute_stats(datasets: &[&Dataset]) -> Result<DatasetStats> {
    let first = datasets.first().ok_or_else(|| Error::Usage("no datasets given".into()))?;
    let space = &first.space;
    if datasets.iter().any(|d| &d.space != space) {
        return Err(Error::Usage("datasets use different label spaces".into()));
    }

    let mut counts = BTreeMap::new();
    let mut co_existing_counts: BTreeMap<usize, usize> = (1..=space.len()).map(|k| (k, 0)).collect();
    let mut neutral_count = 0;
    for d in datasets {
        *counts.entry(d.split).or_insert(0) += d.len();
        for ex in &d.examples {
            match ex.labels.count() {
                0 => neutral_count += 1,
                k => *co_existing_counts.get_mut(&k).expect("k <= |C|") += 1,
            }
        }
    }
    let total: usize = counts.values().sum();
    let emotional = total - neutral_count;
    let co_existing_pct = co_existing_counts
        .iter()
        .map(|(&k, &n)| {
            let pct = if emotional == 0 { 0.0 } else { 100.0 * n as f64 / emotional as f64 };
            (k, pct)
        })
        .collect();
    Ok(DatasetStats {
        counts,
        total,
        class_count: space.len(),
        neutral_count,
        co_existing_counts,
        co_existing_pct,
    })
}

impl fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (split, n) in &self.counts {
            writeln!(f, "{:<16}{n:>8}", format!("{split} (#)"))?;
        }
        writeln!(f, "{:<16}{:>8}", "total (#)", self.total)?;
        writeln!(f, "{:<16}{:>8}", "classes (#)", self.class_count)?;
        writeln!(f, "{:<16}{:>8}", "neutral (#)", self.neutral_count)?;
        for (k, pct) in &self.co_existing_pct {
            if self.co_existing_counts[k] > 0 || *k <= 3 {
                writeln!(f, "{:<16}{pct:>8.2}", format!("{k} co.emo (%)"))?;
            }
        }
        Ok(())
    }
}
