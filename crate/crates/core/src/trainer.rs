//! Fine-tuning loop: Adam with separate encoder/head learning rates,
//! per-epoch validation, early stopping, best-checkpoint persistence and
//! the ablation switches.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::checkpoint::{load_checkpoint, save_checkpoint, CheckpointMeta};
use crate::data::Dataset;
use crate::metrics::{evaluate, MetricReport};
use crate::model::bert::{resolve_checkpoint, BertEncoder};
use crate::model::{
    check_threshold, predict, AnyEncoder, HeadKind, ModelRng, SpanModel, ToyConfig, ToyEncoder, Vocab,
};
use crate::objectives::{joint_loss, joint_loss_grad, LossConfig};
use crate::optim::{Adam, AdamConfig};
use crate::param::ParamGroup;
use crate::{Error, LabelVector, ProbabilityVector, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    #[default]
    None,
    /// α forced to 0.
    NoLca,
    /// α forced to 1.
    NoBce,
    /// Sentence-only input with a pooled head.
    NoLabelSegment,
}

impl Ablation {
    pub const ALL: [Ablation; 4] = [Ablation::None, Ablation::NoLca, Ablation::NoBce, Ablation::NoLabelSegment];

    pub fn effective_alpha(self, alpha: f64) -> f64 {
        match self {
            Ablation::NoLca => 0.0,
            Ablation::NoBce => 1.0,
            Ablation::None | Ablation::NoLabelSegment => alpha,
        }
    }

    pub fn head_kind(self) -> HeadKind {
        match self {
            Ablation::NoLabelSegment => HeadKind::Pooled,
            _ => HeadKind::Span,
        }
    }
}

impl fmt::Display for Ablation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Ablation::None => "none",
            Ablation::NoLca => "no_lca",
            Ablation::NoBce => "no_bce",
            Ablation::NoLabelSegment => "no_label_segment",
        })
    }
}

impl std::str::FromStr for Ablation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Ablation::None),
            "no_lca" => Ok(Ablation::NoLca),
            "no_bce" => Ok(Ablation::NoBce),
            "no_label_segment" => Ok(Ablation::NoLabelSegment),
            other => Err(Error::Usage(format!("unknown ablation `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum SelectionMetric {
    #[serde(rename = "miF1")]
    MicroF1,
    #[serde(rename = "maF1")]
    MacroF1,
    #[default]
    #[serde(rename = "jacS")]
    Jaccard,
}

impl SelectionMetric {
    pub fn of(self, r: &MetricReport) -> f64 {
        match self {
            SelectionMetric::MicroF1 => r.micro_f1,
            SelectionMetric::MacroF1 => r.macro_f1,
            SelectionMetric::Jaccard => r.jaccard,
        }
    }
}

impl std::str::FromStr for SelectionMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "miF1" | "micro_f1" => Ok(SelectionMetric::MicroF1),
            "maF1" | "macro_f1" => Ok(SelectionMetric::MacroF1),
            "jacS" | "jaccard" => Ok(SelectionMetric::Jaccard),
            other => Err(Error::Usage(format!("unknown selection metric `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum EncoderKind {
    #[default]
    Toy,
    Bert,
}

/// Training hyper-parameters. Serialized flat, one key per field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub early_stop_patience: usize,
    pub lr_encoder: f64,
    pub lr_head: f64,
    pub dropout: f64,
    pub alpha: f64,
    pub seed: u64,
    pub ablation: Ablation,
    pub selection_metric: SelectionMetric,
    pub threshold: f64,
    pub encoder: EncoderKind,
    /// Checkpoint directory or registry id for the pretrained encoder.
    pub encoder_path: Option<String>,
    pub max_len: usize,
    pub toy_width: usize,
    pub toy_window: Option<usize>,
    pub toy_position_embeddings: bool,
    /// Also log eval-mode metrics on the training set each epoch.
    pub eval_train: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 32,
            epochs: 20,
            early_stop_patience: 10,
            lr_encoder: 2e-5,
            lr_head: 1e-3,
            dropout: 0.1,
            alpha: 0.2,
            seed: 42,
            ablation: Ablation::None,
            selection_metric: SelectionMetric::Jaccard,
            threshold: 0.5,
            encoder: EncoderKind::Toy,
            encoder_path: None,
            max_len: crate::model::DEFAULT_MAX_LEN,
            toy_width: 32,
            toy_window: None,
            toy_position_embeddings: false,
            eval_train: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let usage = |m: String| Err(Error::Usage(m));
        if self.batch_size == 0 || self.epochs == 0 {
            return usage("batch_size and epochs must be positive".into());
        }
        if !(self.lr_encoder >= 0.0 && self.lr_head >= 0.0) {
            return usage(format!("learning rates must be non-negative, got {} / {}", self.lr_encoder, self.lr_head));
        }
        if self.early_stop_patience == 0 || self.early_stop_patience > self.epochs {
            return usage(format!(
                "early_stop_patience must lie in 1..={}, got {}",
                self.epochs, self.early_stop_patience
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return usage(format!("dropout must lie in [0, 1), got {}", self.dropout));
        }
        LossConfig::new(self.alpha)?;
        check_threshold(self.threshold)?;
        if self.toy_width == 0 || self.max_len < 2 {
            return usage("toy_width and max_len must be positive".into());
        }
        Ok(())
    }

    pub fn loss_config(&self) -> Result<LossConfig> {
        LossConfig::new(self.ablation.effective_alpha(self.alpha))
    }

    fn learning_rate(&self, group: ParamGroup) -> f64 {
        match group {
            ParamGroup::Encoder => self.lr_encoder,
            ParamGroup::Head => self.lr_head,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LogSplit {
    Train,
    Valid,
}

/// One row of the training log CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogRow {
    pub epoch: usize,
    pub split: LogSplit,
    pub loss: f64,
    pub metrics: Option<(f64, f64, f64)>,
}

pub const LOG_HEADER: &str = "epoch,split,loss,miF1,maF1,jacS";

pub fn format_log(rows: &[LogRow]) -> String {
    let mut out = String::from(LOG_HEADER);
    out.push('\n');
    for r in rows {
        let split = match r.split {
            LogSplit::Train => "train",
            LogSplit::Valid => "valid",
        };
        match r.metrics {
            Some((mi, ma, jac)) => out.push_str(&format!("{},{split},{},{mi},{ma},{jac}\n", r.epoch, r.loss)),
            None => out.push_str(&format!("{},{split},{},,,\n", r.epoch, r.loss)),
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub checkpoint: PathBuf,
    pub log_path: PathBuf,
    pub log: Vec<LogRow>,
    pub best_epoch: usize,
    pub best_score: f64,
    pub epochs_run: usize,
    pub validation_rounds: usize,
}

/// Toy vocabulary: special tokens, label surface tokens and every training token.
pub fn build_toy_vocab(train: &Dataset) -> Vocab {
    let words = train
        .space
        .surface_tokens()
        .iter()
        .map(String::as_str)
        .chain(train.examples.iter().flat_map(|e| e.tokens.iter().map(String::as_str)));
    Vocab::build(words)
}

/// Fresh model as configured, initialized from `cfg.seed`.
pub fn init_model(cfg: &TrainConfig, train: &Dataset) -> Result<SpanModel> {
    let mut rng = ModelRng::seed_from_u64(cfg.seed);
    let encoder = match cfg.encoder {
        EncoderKind::Toy => {
            let toy = ToyConfig {
                width: cfg.toy_width,
                window: cfg.toy_window,
                position_embeddings: cfg.toy_position_embeddings,
                max_len: cfg.max_len,
            };
            AnyEncoder::Toy(ToyEncoder::new(toy, build_toy_vocab(train), &mut rng))
        }
        EncoderKind::Bert => {
            let id = cfg
                .encoder_path
                .as_deref()
                .ok_or_else(|| Error::Usage("the bert encoder needs encoder_path".into()))?;
            let dir = resolve_checkpoint(id)?;
            AnyEncoder::Bert(Box::new(BertEncoder::load_pretrained(&dir)?))
        }
    };
    Ok(SpanModel::new(train.space.clone(), encoder, cfg.ablation.head_kind(), cfg.dropout, &mut rng))
}

/// Eval-mode probabilities and thresholded predictions for every example.
pub fn predict_dataset(
    model: &SpanModel,
    dataset: &Dataset,
    threshold: f64,
) -> Result<(Vec<ProbabilityVector>, Vec<LabelVector>)> {
    let probs: Vec<ProbabilityVector> = dataset.examples.iter().map(|e| model.forward(e)).collect::<Result<_>>()?;
    let labels = probs.iter().map(|p| predict(p, threshold)).collect();
    Ok((probs, labels))
}

/// Eval-mode loss and metrics.
pub fn evaluate_model(
    model: &SpanModel,
    dataset: &Dataset,
    threshold: f64,
    loss: LossConfig,
) -> Result<(f64, MetricReport)> {
    let (probs, preds) = predict_dataset(model, dataset, threshold)?;
    let gold = dataset.labels();
    let value = joint_loss(&gold, &probs.iter().map(|p| p.as_slice()).collect::<Vec<_>>(), loss)?;
    Ok((value.total, evaluate(&gold, &preds)?))
}

fn check_spaces(a: &Dataset, b: &Dataset) -> Result<()> {
    if a.space.names() != b.space.names() {
        return Err(Error::Usage("train and valid use different label spaces".into()));
    }
    Ok(())
}

/// Trains from a fresh model and writes `checkpoint/` and `train_log.csv` under `out_dir`.
pub fn train(cfg: &TrainConfig, train: &Dataset, valid: &Dataset, out_dir: &Path) -> Result<TrainOutcome> {
    cfg.validate()?;
    let model = init_model(cfg, train)?;
    train_model(cfg, model, train, valid, out_dir)
}

pub fn train_model(
    cfg: &TrainConfig,
    mut model: SpanModel,
    train: &Dataset,
    valid: &Dataset,
    out_dir: &Path,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Usage("training set is empty".into()));
    }
    if valid.is_empty() {
        return Err(Error::Usage("validation set is empty".into()));
    }
    check_spaces(train, valid)?;
    if model.space.names() != train.space.names() {
        return Err(Error::Usage("model and data use different label spaces".into()));
    }
    let loss_cfg = cfg.loss_config()?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let checkpoint = out_dir.join("checkpoint");
    let log_path = out_dir.join("train_log.csv");

    // Separate stream from initialization so the model init is reproducible on its own.
    let mut rng = ModelRng::seed_from_u64(cfg.seed.wrapping_add(0x5eed));
    let mut adam = Adam::new(AdamConfig::default());
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut log = Vec::new();
    let mut best: Option<(usize, f64)> = None;
    let mut since_best = 0;
    let mut epochs_run = 0;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            model.zero_grad();
            let mut caches = Vec::with_capacity(batch.len());
            for &i in batch {
                caches.push(model.forward_train(&train.examples[i].tokens, &mut rng)?);
            }
            let ys: Vec<LabelVector> = batch.iter().map(|&i| train.examples[i].labels.clone()).collect();
            let ps: Vec<&[f64]> = caches.iter().map(|c| c.probs()).collect();
            let value = joint_loss(&ys, &ps, loss_cfg)?;
            if !value.total.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b, value: value.total });
            }
            let grads = joint_loss_grad(&ys, &ps, loss_cfg)?;
            for (cache, g) in caches.iter().zip(&grads) {
                model.backward(cache, g)?;
            }
            let mut params: Vec<_> = model
                .grouped_params_mut()
                .into_iter()
                .map(|(group, p)| (p, cfg.learning_rate(group)))
                .collect();
            adam.step(&mut params);
            if !model.all_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b, value: f64::NAN });
            }
            loss_sum += value.total * batch.len() as f64;
        }
        epochs_run = epoch;
        let train_loss = loss_sum / train.len() as f64;
        let train_metrics = if cfg.eval_train {
            let (_, r) = evaluate_model(&model, train, cfg.threshold, loss_cfg)?;
            Some((r.micro_f1, r.macro_f1, r.jaccard))
        } else {
            None
        };
        log.push(LogRow { epoch, split: LogSplit::Train, loss: train_loss, metrics: train_metrics });

        let (valid_loss, report) = evaluate_model(&model, valid, cfg.threshold, loss_cfg)?;
        log.push(LogRow {
            epoch,
            split: LogSplit::Valid,
            loss: valid_loss,
            metrics: Some((report.micro_f1, report.macro_f1, report.jaccard)),
        });
        let score = cfg.selection_metric.of(&report);
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((epoch, score));
            since_best = 0;
            let meta = checkpoint_meta(cfg, &model, Some(epoch), Some(score));
            save_checkpoint(&checkpoint, &model, &meta)?;
        } else {
            since_best += 1;
        }
        write_log(&log_path, &log)?;
        if since_best >= cfg.early_stop_patience {
            break;
        }
    }

    let (best_epoch, best_score) = best.expect("at least one epoch");
    Ok(TrainOutcome {
        checkpoint,
        log_path,
        log,
        best_epoch,
        best_score,
        epochs_run,
        validation_rounds: epochs_run,
    })
}

fn write_log(path: &Path, rows: &[LogRow]) -> Result<()> {
    let tmp = path.with_extension("csv.tmp");
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(format_log(rows).as_bytes()).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn checkpoint_meta(
    cfg: &TrainConfig,
    model: &SpanModel,
    best_epoch: Option<usize>,
    best_score: Option<f64>,
) -> CheckpointMeta {
    CheckpointMeta {
        space: model.space.clone(),
        threshold: cfg.threshold,
        alpha: cfg.ablation.effective_alpha(cfg.alpha),
        seed: cfg.seed,
        ablation: cfg.ablation,
        head: model.head.kind(),
        dropout: model.dropout,
        encoder: model.encoder_spec(),
        best_epoch,
        best_score,
        config: cfg.clone(),
    }
}

/// Loads a checkpoint and scores it on `dataset`.
pub fn evaluate_checkpoint(checkpoint: &Path, dataset: &Dataset, threshold: f64) -> Result<MetricReport> {
    let (model, _) = load_checkpoint(checkpoint)?;
    evaluate_loaded(&model, dataset, threshold)
}

pub fn evaluate_loaded(model: &SpanModel, dataset: &Dataset, threshold: f64) -> Result<MetricReport> {
    check_threshold(threshold)?;
    if model.space.names() != dataset.space.names() {
        return Err(Error::Usage("checkpoint label space does not match the dataset".into()));
    }
    let (_, preds) = predict_dataset(model, dataset, threshold)?;
    evaluate(&dataset.labels(), &preds)
}
