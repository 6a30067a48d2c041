//! Seeded synthetic data in which each label has its own trigger word.
//!
//! An example's gold labels are exactly the labels whose trigger appears in
//! the sentence, so a model that learns the triggers can fit it perfectly.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Dataset, Example, Split};
use crate::{LabelSpace, LabelVector, Result};

const FILLER: [&str; 12] = [
    "the", "day", "was", "really", "just", "so", "my", "and", "this", "it", "today", "again",
];

/// Trigger word of label `name`.
pub fn trigger_word(name: &str) -> String {
    format!("cue{}", name.to_lowercase())
}

/// `n` examples with 0 to `max_labels` gold labels each.
pub fn trigger_dataset(space: &LabelSpace, n: usize, max_labels: usize, split: Split, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = space.len();
    let max_labels = max_labels.min(c);
    let mut examples = Vec::with_capacity(n);
    for i in 0..n {
        let k = rng.random_range(0..=max_labels);
        let mut idx: Vec<usize> = (0..c).collect();
        idx.shuffle(&mut rng);
        let mut bits = vec![0u8; c];
        let mut words: Vec<String> = Vec::new();
        for &j in &idx[..k] {
            bits[j] = 1;
            words.push(trigger_word(&space.names()[j]));
        }
        for _ in 0..rng.random_range(2..=5) {
            words.push(FILLER.choose(&mut rng).expect("non-empty").to_string());
        }
        words.shuffle(&mut rng);
        examples.push(Example::new(format!("{split}-{i:04}"), words.join(" "), LabelVector::new(bits)?));
    }
    Dataset::new(split, space.clone(), examples)
}
