//! Sensitivity of validation metrics to the loss mixture weight α.

use std::path::Path;

use serde::Serialize;

use super::plot::{write_png, write_text, LineChart};
use crate::data::Dataset;
use crate::trainer::{evaluate_checkpoint, train, TrainConfig};
use crate::{Error, Result};

/// `0.0, 0.1, …, 1.0`.
pub fn default_alpha_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub micro_f1: Option<f64>,
    pub macro_f1: Option<f64>,
    pub jaccard: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha,miF1,maF1,jacS,error\n");
        let cell = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        for r in &self.rows {
            let err = r.error.as_deref().map(super::similarity::csv_field).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{err}\n",
                r.alpha,
                cell(r.micro_f1),
                cell(r.macro_f1),
                cell(r.jaccard)
            ));
        }
        out
    }

    /// Writes `<stem>.csv`, `<stem>.svg` and `<stem>.png` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        write_text(&dir.join(format!("{stem}.csv")), &self.to_csv())?;
        let xs: Vec<f64> = self.rows.iter().map(|r| r.alpha).collect();
        let series = vec![
            ("miF1".to_string(), self.rows.iter().map(|r| r.micro_f1).collect()),
            ("maF1".to_string(), self.rows.iter().map(|r| r.macro_f1).collect()),
            ("jacS".to_string(), self.rows.iter().map(|r| r.jaccard).collect()),
        ];
        let chart = LineChart { title: "validation metrics vs. alpha", x_label: "alpha", xs: &xs, series: &series };
        write_text(&dir.join(format!("{stem}.svg")), &chart.to_svg())?;
        write_png(&dir.join(format!("{stem}.png")), &chart.to_image())
    }
}

/// One training run per α with the shared seed; each run's best checkpoint
/// is scored on `valid`. A failing cell is recorded and the sweep continues.
pub fn alpha_sweep(cfg: &TrainConfig, grid: &[f64], train_set: &Dataset, valid: &Dataset, out_dir: &Path) -> Result<SweepReport> {
    if grid.is_empty() {
        return Err(Error::Usage("alpha grid is empty".into()));
    }
    if let Some(a) = grid.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(Error::Usage(format!("alpha grid value {a} lies outside [0, 1]")));
    }
    let mut rows = Vec::with_capacity(grid.len());
    for &alpha in grid {
        let cell_cfg = TrainConfig { alpha, ..cfg.clone() };
        let cell_dir = out_dir.join(format!("alpha_{alpha:.2}"));
        let result = train(&cell_cfg, train_set, valid, &cell_dir)
            .and_then(|o| evaluate_checkpoint(&o.checkpoint, valid, cell_cfg.threshold));
        rows.push(match result {
            Ok(r) => SweepRow {
                alpha,
                micro_f1: Some(r.micro_f1),
                macro_f1: Some(r.macro_f1),
                jaccard: Some(r.jaccard),
                error: None,
            },
            Err(e) => SweepRow { alpha, micro_f1: None, macro_f1: None, jaccard: None, error: Some(e.to_string()) },
        });
    }
    Ok(SweepReport { rows })
}
