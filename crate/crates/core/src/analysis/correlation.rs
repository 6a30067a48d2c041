//! Pearson correlation between binary label columns.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::plot::{write_png, write_text, Heatmap};
use super::similarity::csv_field;
use crate::{Error, LabelVector, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelSource {
    Gold,
    Predicted,
}

impl fmt::Display for LabelSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LabelSource::Gold => "gold",
            LabelSource::Predicted => "predicted",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationMatrix {
    pub labels: Vec<String>,
    pub source: LabelSource,
    /// `None` where either column is constant.
    pub values: Vec<Vec<Option<f64>>>,
}

/// Pearson correlation of two equal-length series; `None` if either is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

pub fn label_correlations(labels: &[LabelVector], names: &[String], source: LabelSource) -> Result<CorrelationMatrix> {
    if labels.len() < 2 {
        return Err(Error::Usage(format!("correlations need at least 2 examples, got {}", labels.len())));
    }
    let c = names.len();
    if labels.iter().any(|y| y.len() != c) {
        return Err(Error::Usage("label vectors do not match the label space".into()));
    }
    let columns: Vec<Vec<f64>> = (0..c).map(|j| labels.iter().map(|y| y.get(j) as u8 as f64).collect()).collect();
    let mut values = vec![vec![None; c]; c];
    for i in 0..c {
        for j in i..c {
            let r = if i == j {
                pearson(&columns[i], &columns[i]).map(|_| 1.0)
            } else {
                pearson(&columns[i], &columns[j])
            };
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    Ok(CorrelationMatrix { labels: names.to_vec(), source, values })
}

impl CorrelationMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.labels.iter().position(|l| l == a)?;
        let j = self.labels.iter().position(|l| l == b)?;
        self.values[i][j]
    }

    /// Undefined cells are written as `NA`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label");
        for l in &self.labels {
            out.push(',');
            out.push_str(&csv_field(l));
        }
        out.push('\n');
        for (name, row) in self.labels.iter().zip(&self.values) {
            out.push_str(&csv_field(name));
            for v in row {
                match v {
                    Some(v) => out.push_str(&format!(",{v}")),
                    None => out.push_str(",NA"),
                }
            }
            out.push('\n');
        }
        out
    }

    /// Writes `<stem>.csv`, `<stem>.svg` and `<stem>.png` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        write_text(&dir.join(format!("{stem}.csv")), &self.to_csv())?;
        let title = format!("label correlations ({})", self.source);
        let map = Heatmap { title: &title, rows: &self.labels, cols: &self.labels, values: &self.values, range: (-1.0, 1.0) };
        write_text(&dir.join(format!("{stem}.svg")), &map.to_svg())?;
        write_png(&dir.join(format!("{stem}.png")), &map.to_image())
    }
}
