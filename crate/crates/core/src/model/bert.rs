//! Pretrained bidirectional-transformer encoder (BERT layout).
//!
//! Loads a Hugging Face style checkpoint directory holding `config.json`,
//! `vocab.txt` and `model.safetensors`. The forward and backward passes are
//! written out by hand in `f64` so the encoder plugs into the same training
//! loop as the toy encoder.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{s, Array1, Array2, Axis};
use rand::Rng;
use safetensors::{Dtype, SafeTensors};
use serde::{Deserialize, Serialize};

use super::input::ModelInput;
use super::vocab::Vocab;
use super::{Encoder, HiddenStates, ModelRng};
use crate::param::{Param, Parameterized};
use crate::{Error, Result};

/// Environment variable naming the directory where registry ids are resolved.
pub const CACHE_ENV: &str = "SPANEMO_CACHE";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BertConfig {
    pub vocab_size: usize,
    pub hidden_size: usize,
    pub num_hidden_layers: usize,
    pub num_attention_heads: usize,
    pub intermediate_size: usize,
    pub max_position_embeddings: usize,
    #[serde(default = "default_type_vocab")]
    pub type_vocab_size: usize,
    #[serde(default = "default_ln_eps")]
    pub layer_norm_eps: f64,
    #[serde(default = "default_dropout")]
    pub hidden_dropout_prob: f64,
    #[serde(default = "default_dropout")]
    pub attention_probs_dropout_prob: f64,
    #[serde(default = "default_act")]
    pub hidden_act: String,
}

fn default_type_vocab() -> usize {
    2
}
fn default_ln_eps() -> f64 {
    1e-12
}
fn default_dropout() -> f64 {
    0.1
}
fn default_act() -> String {
    "gelu".into()
}

impl BertConfig {
    fn head_dim(&self) -> usize {
        self.hidden_size / self.num_attention_heads
    }

    fn validate(&self) -> Result<()> {
        if self.hidden_size == 0 || self.num_attention_heads == 0 || !self.hidden_size.is_multiple_of(self.num_attention_heads) {
            return Err(Error::Encoder(format!(
                "hidden size {} is not divisible by {} heads",
                self.hidden_size, self.num_attention_heads
            )));
        }
        if !matches!(self.hidden_act.as_str(), "gelu" | "gelu_python") {
            return Err(Error::Encoder(format!("unsupported activation `{}`", self.hidden_act)));
        }
        Ok(())
    }
}

/// Resolves a local checkpoint directory or a registry id under `$SPANEMO_CACHE`.
pub fn resolve_checkpoint(path_or_id: &str) -> Result<PathBuf> {
    let direct = PathBuf::from(path_or_id);
    if direct.is_dir() {
        return Ok(direct);
    }
    if let Some(cache) = std::env::var_os(CACHE_ENV) {
        let cache = PathBuf::from(cache);
        for candidate in [cache.join(path_or_id), cache.join(path_or_id.replace('/', "--"))] {
            if candidate.is_dir() {
                return Ok(candidate);
            }
        }
    }
    Err(Error::Encoder(format!(
        "no checkpoint directory `{path_or_id}` (also looked under ${CACHE_ENV})"
    )))
}

#[derive(Debug, Clone, PartialEq)]
struct LayerNorm {
    gamma: Param,
    beta: Param,
}

impl LayerNorm {
    fn new(prefix: &str, width: usize) -> Self {
        LayerNorm {
            gamma: Param::new(format!("{prefix}.LayerNorm.weight"), Array2::ones((1, width))),
            beta: Param::zeros(format!("{prefix}.LayerNorm.bias"), 1, width),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Linear {
    /// `out × in`, applied as `x Wᵀ + b`.
    weight: Param,
    bias: Param,
}

impl Linear {
    fn new(prefix: &str, inp: usize, out: usize) -> Self {
        Linear { weight: Param::zeros(format!("{prefix}.weight"), out, inp), bias: Param::zeros(format!("{prefix}.bias"), 1, out) }
    }

    fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        x.dot(&self.weight.value.t()) + &self.bias.value
    }

    /// Accumulates gradients, returns `∂L/∂x`.
    fn backward(&mut self, x: &Array2<f64>, dy: &Array2<f64>) -> Array2<f64> {
        self.weight.grad += &dy.t().dot(x);
        self.bias.grad += &dy.sum_axis(Axis(0)).insert_axis(Axis(0));
        dy.dot(&self.weight.value)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Layer {
    query: Linear,
    key: Linear,
    value: Linear,
    attn_out: Linear,
    attn_norm: LayerNorm,
    intermediate: Linear,
    output: Linear,
    out_norm: LayerNorm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BertEncoder {
    cfg: BertConfig,
    vocab: Vocab,
    word: Param,
    position: Param,
    token_type: Param,
    emb_norm: LayerNorm,
    layers: Vec<Layer>,
}

struct NormCache {
    xhat: Array2<f64>,
    inv_std: Array1<f64>,
}

struct LayerCache {
    x: Array2<f64>,
    q: Array2<f64>,
    k: Array2<f64>,
    v: Array2<f64>,
    probs: Vec<Array2<f64>>,
    prob_masks: Vec<Option<Array2<f64>>>,
    ctx: Array2<f64>,
    attn_mask: Option<Array2<f64>>,
    norm1: NormCache,
    x1: Array2<f64>,
    pre_act: Array2<f64>,
    act: Array2<f64>,
    out_mask: Option<Array2<f64>>,
    norm2: NormCache,
}

pub struct BertCache {
    emb_norm: NormCache,
    emb_mask: Option<Array2<f64>>,
    layers: Vec<LayerCache>,
}

fn layer_norm(r: &Array2<f64>, ln: &LayerNorm, eps: f64) -> (Array2<f64>, NormCache) {
    let mean = r.mean_axis(Axis(1)).expect("non-empty rows");
    let centered = r - &mean.clone().insert_axis(Axis(1));
    let var = centered.mapv(|v| v * v).mean_axis(Axis(1)).expect("non-empty rows");
    let inv_std = var.mapv(|v| 1.0 / (v + eps).sqrt());
    let xhat = &centered * &inv_std.clone().insert_axis(Axis(1));
    let y = &xhat * &ln.gamma.value + &ln.beta.value;
    (y, NormCache { xhat, inv_std })
}

fn layer_norm_backward(dy: &Array2<f64>, ln: &mut LayerNorm, cache: &NormCache) -> Array2<f64> {
    ln.gamma.grad += &(dy * &cache.xhat).sum_axis(Axis(0)).insert_axis(Axis(0));
    ln.beta.grad += &dy.sum_axis(Axis(0)).insert_axis(Axis(0));
    let dxhat = dy * &ln.gamma.value;
    let m1 = dxhat.mean_axis(Axis(1)).expect("rows").insert_axis(Axis(1));
    let m2 = (&dxhat * &cache.xhat).mean_axis(Axis(1)).expect("rows").insert_axis(Axis(1));
    (&dxhat - &m1 - &(&cache.xhat * &m2)) * &cache.inv_std.clone().insert_axis(Axis(1))
}

fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + libm::erf(x / std::f64::consts::SQRT_2))
}

fn gelu_grad(x: f64) -> f64 {
    let cdf = 0.5 * (1.0 + libm::erf(x / std::f64::consts::SQRT_2));
    let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    cdf + x * pdf
}

fn softmax_rows(m: &mut Array2<f64>) {
    for mut row in m.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
}

fn dropout_mask(shape: (usize, usize), rate: f64, rng: Option<&mut ModelRng>) -> Option<Array2<f64>> {
    let rng = rng?;
    if rate <= 0.0 {
        return None;
    }
    let keep = 1.0 / (1.0 - rate);
    Some(Array2::from_shape_simple_fn(shape, || if rng.random::<f64>() < rate { 0.0 } else { keep }))
}

fn apply(mask: &Option<Array2<f64>>, x: Array2<f64>) -> Array2<f64> {
    match mask {
        Some(m) => x * m,
        None => x,
    }
}

impl BertEncoder {
    /// Zero-initialized encoder with the given shape.
    pub fn zeros(cfg: BertConfig, vocab: Vocab) -> Result<Self> {
        cfg.validate()?;
        if vocab.len() > cfg.vocab_size {
            return Err(Error::Encoder(format!(
                "vocabulary has {} entries but the model embeds only {}",
                vocab.len(),
                cfg.vocab_size
            )));
        }
        let h = cfg.hidden_size;
        let layers = (0..cfg.num_hidden_layers)
            .map(|i| {
                let p = format!("encoder.layer.{i}");
                Layer {
                    query: Linear::new(&format!("{p}.attention.self.query"), h, h),
                    key: Linear::new(&format!("{p}.attention.self.key"), h, h),
                    value: Linear::new(&format!("{p}.attention.self.value"), h, h),
                    attn_out: Linear::new(&format!("{p}.attention.output.dense"), h, h),
                    attn_norm: LayerNorm::new(&format!("{p}.attention.output"), h),
                    intermediate: Linear::new(&format!("{p}.intermediate.dense"), h, cfg.intermediate_size),
                    output: Linear::new(&format!("{p}.output.dense"), cfg.intermediate_size, h),
                    out_norm: LayerNorm::new(&format!("{p}.output"), h),
                }
            })
            .collect();
        Ok(BertEncoder {
            word: Param::zeros("embeddings.word_embeddings.weight", cfg.vocab_size, h),
            position: Param::zeros("embeddings.position_embeddings.weight", cfg.max_position_embeddings, h),
            token_type: Param::zeros("embeddings.token_type_embeddings.weight", cfg.type_vocab_size, h),
            emb_norm: LayerNorm::new("embeddings", h),
            layers,
            cfg,
            vocab,
        })
    }

    /// Random init (normal, std 0.02) for tests and from-scratch runs.
    pub fn random(cfg: BertConfig, vocab: Vocab, rng: &mut ModelRng) -> Result<Self> {
        let mut enc = BertEncoder::zeros(cfg, vocab)?;
        for p in enc.params_mut() {
            if p.name.ends_with("LayerNorm.weight") || p.name.ends_with(".bias") {
                continue;
            }
            *p = Param::normal(p.name.clone(), p.value.nrows(), p.value.ncols(), 0.02, rng);
        }
        Ok(enc)
    }

    /// Loads `config.json`, `vocab.txt` and `model.safetensors` from `dir`.
    pub fn load_pretrained(dir: &Path) -> Result<Self> {
        let cfg_path = dir.join("config.json");
        let text = fs::read_to_string(&cfg_path).map_err(|e| Error::io(&cfg_path, e))?;
        let cfg: BertConfig = serde_json::from_str(&text)?;
        let vocab = Vocab::load(&dir.join("vocab.txt"))?;
        let weights_path = dir.join("model.safetensors");
        let bytes = fs::read(&weights_path).map_err(|e| Error::io(&weights_path, e))?;
        let st = SafeTensors::deserialize(&bytes)
            .map_err(|e| Error::Encoder(format!("{}: {e}", weights_path.display())))?;
        let names: HashMap<String, String> = st
            .names()
            .into_iter()
            .map(|n| (canonical_name(n), n.to_string()))
            .collect();

        let mut enc = BertEncoder::zeros(cfg, vocab)?;
        for p in enc.params_mut() {
            let stored = names
                .get(&p.name)
                .ok_or_else(|| Error::Encoder(format!("checkpoint lacks tensor `{}`", p.name)))?;
            let view = st.tensor(stored).map_err(|e| Error::Encoder(e.to_string()))?;
            let values = decode_tensor(view.dtype(), view.data())
                .ok_or_else(|| Error::Encoder(format!("tensor `{stored}` has unsupported dtype {:?}", view.dtype())))?;
            let (rows, cols) = (p.value.nrows(), p.value.ncols());
            if values.len() != rows * cols {
                return Err(Error::Encoder(format!(
                    "tensor `{stored}` has shape {:?}, expected {rows}×{cols}",
                    view.shape()
                )));
            }
            p.value = Array2::from_shape_vec((rows, cols), values).expect("length checked");
        }
        Ok(enc)
    }

    pub fn config(&self) -> &BertConfig {
        &self.cfg
    }

    fn embed(&self, input: &ModelInput) -> Result<Array2<f64>> {
        let n = input.len();
        if n > self.cfg.max_position_embeddings {
            return Err(Error::InputTooLong { len: n, max: self.cfg.max_position_embeddings });
        }
        let mut e = Array2::zeros((n, self.cfg.hidden_size));
        for (t, mut row) in e.axis_iter_mut(Axis(0)).enumerate() {
            let id = input.token_ids[t] as usize;
            let seg = input.segment_ids[t] as usize;
            if id >= self.cfg.vocab_size || seg >= self.cfg.type_vocab_size {
                return Err(Error::Encoder(format!("token {id} / segment {seg} outside the embedding tables")));
            }
            row.assign(&self.word.value.row(id));
            row += &self.position.value.row(t);
            row += &self.token_type.value.row(seg);
        }
        Ok(e)
    }

    fn run(&self, input: &ModelInput, mut rng: Option<&mut ModelRng>) -> Result<(Array2<f64>, BertCache)> {
        let cfg = &self.cfg;
        let eps = cfg.layer_norm_eps;
        let n = input.len();
        let (h, heads, dh) = (cfg.hidden_size, cfg.num_attention_heads, cfg.head_dim());
        let scale = 1.0 / (dh as f64).sqrt();
        // Additive key mask: padded keys are pushed to ~zero probability.
        let key_bias: Array1<f64> = input.attention_mask.iter().map(|&m| if m == 1 { 0.0 } else { -10000.0 }).collect();

        let (x0, emb_norm) = layer_norm(&self.embed(input)?, &self.emb_norm, eps);
        let emb_mask = dropout_mask((n, h), cfg.hidden_dropout_prob, rng.as_deref_mut());
        let mut x = apply(&emb_mask, x0);

        let mut caches = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let q = layer.query.forward(&x);
            let k = layer.key.forward(&x);
            let v = layer.value.forward(&x);
            let mut ctx = Array2::zeros((n, h));
            let mut probs = Vec::with_capacity(heads);
            let mut prob_masks = Vec::with_capacity(heads);
            for hd in 0..heads {
                let cols = s![.., hd * dh..(hd + 1) * dh];
                let mut scores = q.slice(cols).dot(&k.slice(cols).t()) * scale + &key_bias;
                softmax_rows(&mut scores);
                let pm = dropout_mask((n, n), cfg.attention_probs_dropout_prob, rng.as_deref_mut());
                let dropped = apply(&pm, scores.clone());
                ctx.slice_mut(cols).assign(&dropped.dot(&v.slice(cols)));
                probs.push(scores);
                prob_masks.push(pm);
            }
            let attn_mask = dropout_mask((n, h), cfg.hidden_dropout_prob, rng.as_deref_mut());
            let attn = apply(&attn_mask, layer.attn_out.forward(&ctx));
            let (x1, norm1) = layer_norm(&(&x + &attn), &layer.attn_norm, eps);
            let pre_act = layer.intermediate.forward(&x1);
            let act = pre_act.mapv(gelu);
            let out_mask = dropout_mask((n, h), cfg.hidden_dropout_prob, rng.as_deref_mut());
            let out = apply(&out_mask, layer.output.forward(&act));
            let (x2, norm2) = layer_norm(&(&x1 + &out), &layer.out_norm, eps);
            caches.push(LayerCache {
                x: std::mem::replace(&mut x, x2),
                q,
                k,
                v,
                probs,
                prob_masks,
                ctx,
                attn_mask,
                norm1,
                x1,
                pre_act,
                act,
                out_mask,
                norm2,
            });
        }
        Ok((x, BertCache { emb_norm, emb_mask, layers: caches }))
    }
}

/// Strips the `bert.` prefix and maps legacy `gamma`/`beta` names.
fn canonical_name(name: &str) -> String {
    let n = name.strip_prefix("bert.").unwrap_or(name);
    n.replace("LayerNorm.gamma", "LayerNorm.weight").replace("LayerNorm.beta", "LayerNorm.bias")
}

fn decode_tensor(dtype: Dtype, data: &[u8]) -> Option<Vec<f64>> {
    match dtype {
        Dtype::F64 => Some(data.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect()),
        Dtype::F32 => Some(data.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64).collect()),
        Dtype::BF16 => Some(
            data.chunks_exact(2)
                .map(|c| f32::from_bits((u16::from_le_bytes([c[0], c[1]]) as u32) << 16) as f64)
                .collect(),
        ),
        Dtype::F16 => Some(data.chunks_exact(2).map(|c| f16_to_f64(u16::from_le_bytes([c[0], c[1]]))).collect()),
        _ => None,
    }
}

fn f16_to_f64(bits: u16) -> f64 {
    let sign = if bits & 0x8000 != 0 { -1.0 } else { 1.0 };
    let exp = ((bits >> 10) & 0x1f) as i32;
    let frac = (bits & 0x3ff) as f64;
    match exp {
        0 => sign * frac * 2f64.powi(-24),
        31 if frac == 0.0 => sign * f64::INFINITY,
        31 => f64::NAN,
        e => sign * (1.0 + frac / 1024.0) * 2f64.powi(e - 15),
    }
}

impl Parameterized for BertEncoder {
    fn params(&self) -> Vec<&Param> {
        let mut v = vec![&self.word, &self.position, &self.token_type, &self.emb_norm.gamma, &self.emb_norm.beta];
        for l in &self.layers {
            for lin in [&l.query, &l.key, &l.value, &l.attn_out] {
                v.push(&lin.weight);
                v.push(&lin.bias);
            }
            v.push(&l.attn_norm.gamma);
            v.push(&l.attn_norm.beta);
            for lin in [&l.intermediate, &l.output] {
                v.push(&lin.weight);
                v.push(&lin.bias);
            }
            v.push(&l.out_norm.gamma);
            v.push(&l.out_norm.beta);
        }
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut v = vec![
            &mut self.word,
            &mut self.position,
            &mut self.token_type,
            &mut self.emb_norm.gamma,
            &mut self.emb_norm.beta,
        ];
        for l in &mut self.layers {
            for lin in [&mut l.query, &mut l.key, &mut l.value, &mut l.attn_out] {
                v.push(&mut lin.weight);
                v.push(&mut lin.bias);
            }
            v.push(&mut l.attn_norm.gamma);
            v.push(&mut l.attn_norm.beta);
            for lin in [&mut l.intermediate, &mut l.output] {
                v.push(&mut lin.weight);
                v.push(&mut lin.bias);
            }
            v.push(&mut l.out_norm.gamma);
            v.push(&mut l.out_norm.beta);
        }
        v
    }
}

impl Encoder for BertEncoder {
    type Cache = BertCache;

    fn hidden_width(&self) -> usize {
        self.cfg.hidden_size
    }

    fn max_len(&self) -> usize {
        self.cfg.max_position_embeddings
    }

    fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    fn encode(&self, input: &ModelInput) -> Result<HiddenStates> {
        Ok(HiddenStates::new(self.run(input, None)?.0))
    }

    fn encode_train(&self, input: &ModelInput, rng: &mut ModelRng) -> Result<(HiddenStates, BertCache)> {
        let (h, cache) = self.run(input, Some(rng))?;
        Ok((HiddenStates::new(h), cache))
    }

    fn backward(&mut self, input: &ModelInput, cache: &BertCache, d_hidden: &Array2<f64>) -> Result<()> {
        let (n, h) = (input.len(), self.cfg.hidden_size);
        if d_hidden.dim() != (n, h) {
            return Err(Error::Dimension(format!("gradient {:?} vs hidden {:?}", d_hidden.dim(), (n, h))));
        }
        let (heads, dh) = (self.cfg.num_attention_heads, self.cfg.head_dim());
        let scale = 1.0 / (dh as f64).sqrt();
        let mut dx = d_hidden.clone();
        for (layer, c) in self.layers.iter_mut().zip(&cache.layers).rev() {
            let dr2 = layer_norm_backward(&dx, &mut layer.out_norm, &c.norm2);
            let dout = apply(&c.out_mask, dr2.clone());
            let dact = layer.output.backward(&c.act, &dout);
            let dpre = &dact * &c.pre_act.mapv(gelu_grad);
            let dx1 = &dr2 + &layer.intermediate.backward(&c.x1, &dpre);

            let dr1 = layer_norm_backward(&dx1, &mut layer.attn_norm, &c.norm1);
            let dattn = apply(&c.attn_mask, dr1.clone());
            let dctx = layer.attn_out.backward(&c.ctx, &dattn);

            let mut dq = Array2::zeros((n, h));
            let mut dk = Array2::zeros((n, h));
            let mut dv = Array2::zeros((n, h));
            for hd in 0..heads {
                let cols = s![.., hd * dh..(hd + 1) * dh];
                let p = &c.probs[hd];
                let dropped = apply(&c.prob_masks[hd], p.clone());
                let dctx_h = dctx.slice(cols);
                dv.slice_mut(cols).assign(&dropped.t().dot(&dctx_h));
                let dp = apply(&c.prob_masks[hd], dctx_h.dot(&c.v.slice(cols).t()));
                let row_dot = (&dp * p).sum_axis(Axis(1)).insert_axis(Axis(1));
                let dscores = p * &(&dp - &row_dot) * scale;
                dq.slice_mut(cols).assign(&dscores.dot(&c.k.slice(cols)));
                dk.slice_mut(cols).assign(&dscores.t().dot(&c.q.slice(cols)));
            }
            let mut d_in = dr1;
            d_in += &layer.query.backward(&c.x, &dq);
            d_in += &layer.key.backward(&c.x, &dk);
            d_in += &layer.value.backward(&c.x, &dv);
            dx = d_in;
        }
        let dx = apply(&cache.emb_mask, dx);
        let de = layer_norm_backward(&dx, &mut self.emb_norm, &cache.emb_norm);
        for t in 0..n {
            let row = de.row(t);
            self.word.grad.row_mut(input.token_ids[t] as usize).scaled_add(1.0, &row);
            self.position.grad.row_mut(t).scaled_add(1.0, &row);
            self.token_type.grad.row_mut(input.segment_ids[t] as usize).scaled_add(1.0, &row);
        }
        Ok(())
    }
}
