//! Label-word similarity of hidden states: per-sentence matrices and
//! corpus-level top-k word lists per emotion.

use std::collections::BTreeMap;
use std::path::Path;

use ndarray::{Array1, ArrayView1};
use serde::Serialize;

use super::plot::{write_png, write_text, Heatmap};
use crate::data::{is_placeholder, Dataset};
use crate::model::{HiddenStates, ModelInput, SpanModel};
use crate::{Error, Result};

/// Cosine similarity; 0 when either vector has zero norm.
pub fn cosine(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    let na = a.dot(&a).sqrt();
    let nb = b.dot(&b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (a.dot(&b) / (na * nb)).clamp(-1.0, 1.0)
}

/// Mean of the hidden vectors over a word's pieces.
fn word_vector(h: &HiddenStates, pieces: std::ops::Range<usize>) -> Array1<f64> {
    let n = pieces.len() as f64;
    let mut v = Array1::zeros(h.width());
    for t in pieces {
        v += &h.row(t);
    }
    v / n
}

/// Labels × words similarity for already-computed hidden states.
pub fn similarity_from_hidden(input: &ModelInput, h: &HiddenStates) -> Vec<Vec<f64>> {
    let words: Vec<Array1<f64>> = input.words.iter().map(|w| word_vector(h, w.pieces.clone())).collect();
    input
        .label_positions
        .iter()
        .map(|&p| words.iter().map(|w| cosine(h.row(p), w.view())).collect())
        .collect()
}

/// Words that survived truncation and their label × word similarities.
pub fn example_similarities(model: &SpanModel, tokens: &[String]) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    if !model.uses_label_segment() {
        return Err(Error::Usage("similarity analysis needs a model trained with the label segment".into()));
    }
    let input = model.assemble(tokens)?;
    let h = model.hidden_states(&input)?;
    let words = input.words.iter().map(|w| w.word.clone()).collect();
    Ok((words, similarity_from_hidden(&input, &h)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimilarityMatrix {
    pub labels: Vec<String>,
    pub words: Vec<String>,
    /// `labels.len() × words.len()`.
    pub values: Vec<Vec<f64>>,
}

impl SimilarityMatrix {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label");
        for w in &self.words {
            out.push(',');
            out.push_str(&csv_field(w));
        }
        out.push('\n');
        for (name, row) in self.labels.iter().zip(&self.values) {
            out.push_str(&csv_field(name));
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }

    fn heatmap_values(&self) -> Vec<Vec<Option<f64>>> {
        self.values.iter().map(|r| r.iter().copied().map(Some).collect()).collect()
    }

    /// Writes `<stem>.csv`, `<stem>.svg` and `<stem>.png` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str, title: &str) -> Result<()> {
        write_text(&dir.join(format!("{stem}.csv")), &self.to_csv())?;
        let values = self.heatmap_values();
        let map = Heatmap { title, rows: &self.labels, cols: &self.words, values: &values, range: (-1.0, 1.0) };
        write_text(&dir.join(format!("{stem}.svg")), &map.to_svg())?;
        write_png(&dir.join(format!("{stem}.png")), &map.to_image())
    }
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn sentence_heatmap(model: &SpanModel, tokens: &[String]) -> Result<SimilarityMatrix> {
    if tokens.is_empty() {
        return Err(Error::Usage("cannot build a heatmap for an empty sentence".into()));
    }
    let (words, values) = example_similarities(model, tokens)?;
    Ok(SimilarityMatrix { labels: model.space.names().to_vec(), words, values })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssociationTable {
    pub labels: Vec<String>,
    /// Per label, `(word, mean similarity)` sorted by descending similarity.
    pub rows: Vec<Vec<(String, f64)>>,
}

impl AssociationTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,rank,word,similarity\n");
        for (name, row) in self.labels.iter().zip(&self.rows) {
            for (rank, (w, s)) in row.iter().enumerate() {
                out.push_str(&format!("{},{},{},{s}\n", csv_field(name), rank + 1, csv_field(w)));
            }
        }
        out
    }

    /// One line per label: `label: w1 w2 …`.
    pub fn to_text(&self) -> String {
        let width = self.labels.iter().map(String::len).max().unwrap_or(0);
        let mut out = String::new();
        for (name, row) in self.labels.iter().zip(&self.rows) {
            let words: Vec<&str> = row.iter().map(|(w, _)| w.as_str()).collect();
            out.push_str(&format!("{name:<width$}  {}\n", words.join(" ")));
        }
        out
    }
}

/// Top-`k` words per emotion by mean label-word similarity over every
/// occurrence in `dataset`. Ties are broken alphabetically.
pub fn word_associations(model: &SpanModel, dataset: &Dataset, k: usize) -> Result<AssociationTable> {
    if dataset.is_empty() {
        return Err(Error::Usage("word associations need a non-empty dataset".into()));
    }
    let c = model.space.len();
    // per label: word -> (sum, count)
    let mut acc: Vec<BTreeMap<String, (f64, usize)>> = vec![BTreeMap::new(); c];
    for ex in &dataset.examples {
        let (words, sims) = example_similarities(model, &ex.tokens)?;
        for (label, row) in sims.iter().enumerate() {
            for (w, s) in words.iter().zip(row) {
                if is_placeholder(w) {
                    continue;
                }
                let e = acc[label].entry(w.clone()).or_insert((0.0, 0));
                e.0 += s;
                e.1 += 1;
            }
        }
    }
    let rows = acc
        .into_iter()
        .map(|m| {
            let mut list: Vec<(String, f64)> = m.into_iter().map(|(w, (s, n))| (w, s / n as f64)).collect();
            // BTreeMap yields alphabetical order; a stable sort keeps it among ties.
            list.sort_by(|a, b| b.1.total_cmp(&a.1));
            list.truncate(k);
            list
        })
        .collect();
    Ok(AssociationTable { labels: model.space.names().to_vec(), rows })
}
