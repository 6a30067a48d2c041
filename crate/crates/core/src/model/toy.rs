//! Small deterministic encoder for desk-scale training and tests.
//!
//! ```text
//! x_t = E[token_t] + S[segment_t] (+ P[t])
//! m_t = mean of x_s over |s − t| ≤ radius   (whole sequence when radius is None)
//! h_t = tanh(x_t + m_t U + c)
//! ```

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::input::ModelInput;
use super::vocab::Vocab;
use super::{Encoder, HiddenStates, ModelRng};
use crate::param::{Param, Parameterized};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToyConfig {
    pub width: usize,
    /// Mixing window radius; `None` averages over the whole sequence.
    pub window: Option<usize>,
    pub position_embeddings: bool,
    pub max_len: usize,
}

impl Default for ToyConfig {
    fn default() -> Self {
        ToyConfig { width: 32, window: None, position_embeddings: false, max_len: super::DEFAULT_MAX_LEN }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyEncoder {
    cfg: ToyConfig,
    vocab: Vocab,
    pub tokens: Param,
    pub segments: Param,
    pub positions: Option<Param>,
    pub mix: Param,
    pub mix_bias: Param,
}

#[derive(Debug, Clone)]
pub struct ToyCache {
    mixed: Array2<f64>,
    hidden: Array2<f64>,
    counts: Vec<f64>,
}

impl ToyEncoder {
    pub fn new<R: Rng>(cfg: ToyConfig, vocab: Vocab, rng: &mut R) -> Self {
        let d = cfg.width;
        let tokens = Param::normal("toy.tokens", vocab.len(), d, 0.5, rng);
        let segments = Param::normal("toy.segments", 2, d, 0.1, rng);
        let positions = cfg.position_embeddings.then(|| Param::normal("toy.positions", cfg.max_len, d, 0.1, rng));
        let mix = Param::normal("toy.mix", d, d, (1.0 / d as f64).sqrt(), rng);
        let mix_bias = Param::zeros("toy.mix_bias", 1, d);
        ToyEncoder { cfg, vocab, tokens, segments, positions, mix, mix_bias }
    }

    /// All-zero parameters; useful for rigging embeddings by hand.
    pub fn zeros(cfg: ToyConfig, vocab: Vocab) -> Self {
        let d = cfg.width;
        ToyEncoder {
            tokens: Param::zeros("toy.tokens", vocab.len(), d),
            segments: Param::zeros("toy.segments", 2, d),
            positions: cfg.position_embeddings.then(|| Param::zeros("toy.positions", cfg.max_len, d)),
            mix: Param::zeros("toy.mix", d, d),
            mix_bias: Param::zeros("toy.mix_bias", 1, d),
            cfg,
            vocab,
        }
    }

    pub fn config(&self) -> &ToyConfig {
        &self.cfg
    }

    fn window(&self, t: usize, len: usize) -> (usize, usize) {
        match self.cfg.window {
            None => (0, len - 1),
            Some(r) => (t.saturating_sub(r), (t + r).min(len - 1)),
        }
    }

    fn embed(&self, input: &ModelInput) -> Result<Array2<f64>> {
        let n = input.len();
        if n > self.cfg.max_len {
            return Err(Error::InputTooLong { len: n, max: self.cfg.max_len });
        }
        let mut x = Array2::zeros((n, self.cfg.width));
        for (t, mut row) in x.axis_iter_mut(Axis(0)).enumerate() {
            let id = input.token_ids[t] as usize;
            if id >= self.vocab.len() {
                return Err(Error::Encoder(format!("token id {id} outside vocabulary of {}", self.vocab.len())));
            }
            row.assign(&self.tokens.value.row(id));
            row += &self.segments.value.row(input.segment_ids[t].min(1) as usize);
            if let Some(p) = &self.positions {
                row += &p.value.row(t);
            }
        }
        Ok(x)
    }

    fn run(&self, input: &ModelInput) -> Result<ToyCache> {
        let x = self.embed(input)?;
        let (n, d) = x.dim();
        let mask: Vec<f64> = input.attention_mask.iter().map(|&m| m as f64).collect();

        // prefix[k] = Σ_{s<k} mask_s x_s
        let mut prefix = Array2::<f64>::zeros((n + 1, d));
        let mut count_prefix = vec![0.0; n + 1];
        for t in 0..n {
            let next = &prefix.row(t) + &(&x.row(t) * mask[t]);
            prefix.row_mut(t + 1).assign(&next);
            count_prefix[t + 1] = count_prefix[t] + mask[t];
        }
        let mut mixed = Array2::zeros((n, d));
        let mut counts = vec![0.0; n];
        for t in 0..n {
            let (lo, hi) = self.window(t, n);
            let c = count_prefix[hi + 1] - count_prefix[lo];
            counts[t] = c;
            if c > 0.0 {
                let m = (&prefix.row(hi + 1) - &prefix.row(lo)) / c;
                mixed.row_mut(t).assign(&m);
            }
        }
        let hidden = (&x + &mixed.dot(&self.mix.value) + &self.mix_bias.value).mapv(f64::tanh);
        Ok(ToyCache { mixed, hidden, counts })
    }
}

impl Parameterized for ToyEncoder {
    fn params(&self) -> Vec<&Param> {
        let mut v = vec![&self.tokens, &self.segments];
        if let Some(p) = &self.positions {
            v.push(p);
        }
        v.push(&self.mix);
        v.push(&self.mix_bias);
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut v = vec![&mut self.tokens, &mut self.segments];
        if let Some(p) = &mut self.positions {
            v.push(p);
        }
        v.push(&mut self.mix);
        v.push(&mut self.mix_bias);
        v
    }
}

impl Encoder for ToyEncoder {
    type Cache = ToyCache;

    fn hidden_width(&self) -> usize {
        self.cfg.width
    }

    fn max_len(&self) -> usize {
        self.cfg.max_len
    }

    fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    fn encode(&self, input: &ModelInput) -> Result<HiddenStates> {
        Ok(HiddenStates::new(self.run(input)?.hidden))
    }

    fn encode_train(&self, input: &ModelInput, _rng: &mut ModelRng) -> Result<(HiddenStates, ToyCache)> {
        let cache = self.run(input)?;
        Ok((HiddenStates::new(cache.hidden.clone()), cache))
    }

    fn backward(&mut self, input: &ModelInput, cache: &ToyCache, d_hidden: &Array2<f64>) -> Result<()> {
        let (n, d) = cache.hidden.dim();
        if d_hidden.dim() != (n, d) {
            return Err(Error::Dimension(format!("gradient {:?} vs hidden {:?}", d_hidden.dim(), (n, d))));
        }
        let dz = d_hidden * &cache.hidden.mapv(|h| 1.0 - h * h);
        self.mix.grad += &cache.mixed.t().dot(&dz);
        self.mix_bias.grad += &dz.sum_axis(Axis(0)).insert_axis(Axis(0));
        let dm = dz.dot(&self.mix.value.t());

        // dx_s = dz_s + mask_s Σ_{t : s ∈ window(t)} dm_t / count_t; windows are symmetric.
        let mut g_prefix = Array2::<f64>::zeros((n + 1, d));
        for t in 0..n {
            let g: Array1<f64> = if cache.counts[t] > 0.0 { &dm.row(t) / cache.counts[t] } else { Array1::zeros(d) };
            let next = &g_prefix.row(t) + &g;
            g_prefix.row_mut(t + 1).assign(&next);
        }
        for s in 0..n {
            let (lo, hi) = self.window(s, n);
            let mask = input.attention_mask[s] as f64;
            let dx = &dz.row(s) + &((&g_prefix.row(hi + 1) - &g_prefix.row(lo)) * mask);
            let id = input.token_ids[s] as usize;
            self.tokens.grad.row_mut(id).scaled_add(1.0, &dx);
            self.segments.grad.row_mut(input.segment_ids[s].min(1) as usize).scaled_add(1.0, &dx);
            if let Some(p) = &mut self.positions {
                p.grad.row_mut(s).scaled_add(1.0, &dx);
            }
        }
        Ok(())
    }
}
