//! Scoring heads.
//!
//! [`HeadParameters`] is the span head: every token vector `h_t` is scored as
//! `p · tanh(W h_t + b)`. [`PooledHead`] is the sentence-only ablation that
//! classifies from the `[CLS]` vector.

use ndarray::{s, Array1, Array2, ArrayView1, Axis};
use rand::Rng;

use super::HiddenStates;
use crate::param::Param;
use crate::{Error, Result};

/// Inverted-dropout keep mask; `None` in eval mode.
fn dropout_mask<R: Rng>(width: usize, rate: f64, rng: Option<&mut R>) -> Option<Array1<f64>> {
    let rng = rng?;
    if rate <= 0.0 {
        return None;
    }
    let keep = 1.0 / (1.0 - rate);
    Some(Array1::from_shape_fn(width, |_| if rng.random::<f64>() < rate { 0.0 } else { keep }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeadParameters {
    /// Hidden layer weight, `D × D`, applied as `h W`.
    pub w: Param,
    pub b: Param,
    /// Position vector, `1 × D`.
    pub p: Param,
}

/// Saved activations at the scored positions.
#[derive(Debug, Clone)]
pub struct SpanHeadCache {
    positions: Vec<usize>,
    act: Vec<Array1<f64>>,
    mask: Vec<Option<Array1<f64>>>,
}

impl HeadParameters {
    pub fn new<R: Rng>(width: usize, rng: &mut R) -> Self {
        let std = (1.0 / width as f64).sqrt();
        HeadParameters {
            w: Param::normal("head.w", width, width, std, rng),
            b: Param::zeros("head.b", 1, width),
            p: Param::normal("head.p", 1, width, std, rng),
        }
    }

    pub fn zeros(width: usize) -> Self {
        HeadParameters {
            w: Param::zeros("head.w", width, width),
            b: Param::zeros("head.b", 1, width),
            p: Param::zeros("head.p", 1, width),
        }
    }

    pub fn from_arrays(w: Array2<f64>, b: Array1<f64>, p: Array1<f64>) -> Result<Self> {
        let d = w.nrows();
        if w.ncols() != d || b.len() != d || p.len() != d {
            return Err(Error::Dimension(format!(
                "head shapes W {:?}, b {}, p {} are inconsistent",
                w.dim(),
                b.len(),
                p.len()
            )));
        }
        Ok(HeadParameters {
            w: Param::new("head.w", w),
            b: Param::new("head.b", b.insert_axis(Axis(0))),
            p: Param::new("head.p", p.insert_axis(Axis(0))),
        })
    }

    pub fn width(&self) -> usize {
        self.w.value.nrows()
    }

    fn check(&self, h: &HiddenStates) -> Result<()> {
        if h.width() != self.width() {
            return Err(Error::Dimension(format!(
                "hidden width {} does not match head width {}",
                h.width(),
                self.width()
            )));
        }
        Ok(())
    }

    fn hidden(&self, row: ArrayView1<f64>) -> Array1<f64> {
        (row.dot(&self.w.value) + self.b.value.row(0)).mapv(f64::tanh)
    }

    /// Eval-mode score of every token.
    pub fn score_tokens(&self, h: &HiddenStates) -> Result<Vec<f64>> {
        self.check(h)?;
        let act = (h.matrix().dot(&self.w.value) + &self.b.value).mapv(f64::tanh);
        Ok(act.dot(&self.p.value.row(0)).to_vec())
    }

    /// Scores only `positions`, with dropout on the hidden layer when `rng` is given.
    pub fn forward_positions<R: Rng>(
        &self,
        h: &HiddenStates,
        positions: &[usize],
        dropout: f64,
        mut rng: Option<&mut R>,
    ) -> Result<(Vec<f64>, SpanHeadCache)> {
        self.check(h)?;
        let mut scores = Vec::with_capacity(positions.len());
        let mut act = Vec::with_capacity(positions.len());
        let mut mask = Vec::with_capacity(positions.len());
        for &t in positions {
            if t >= h.len() {
                return Err(Error::Dimension(format!("position {t} outside sequence of {}", h.len())));
            }
            let a = self.hidden(h.row(t));
            let m = dropout_mask(self.width(), dropout, rng.as_deref_mut());
            let dropped = match &m {
                Some(m) => &a * m,
                None => a.clone(),
            };
            scores.push(dropped.dot(&self.p.value.row(0)));
            act.push(a);
            mask.push(m);
        }
        Ok((scores, SpanHeadCache { positions: positions.to_vec(), act, mask }))
    }

    /// Accumulates parameter gradients and returns `∂L/∂H`.
    pub fn backward(&mut self, h: &HiddenStates, cache: &SpanHeadCache, d_scores: &[f64]) -> Array2<f64> {
        let mut dh = Array2::zeros(h.matrix().raw_dim());
        for (i, &t) in cache.positions.iter().enumerate() {
            let ds = d_scores[i];
            let a = &cache.act[i];
            let (dropped, mut da) = match &cache.mask[i] {
                Some(m) => (a * m, self.p.value.row(0).to_owned() * m * ds),
                None => (a.clone(), self.p.value.row(0).to_owned() * ds),
            };
            self.p.grad.row_mut(0).scaled_add(ds, &dropped);
            da *= &a.mapv(|v| 1.0 - v * v);
            let du = da;
            let ht = h.row(t);
            self.w.grad += &outer(ht, du.view());
            self.b.grad.row_mut(0).scaled_add(1.0, &du);
            dh.row_mut(t).scaled_add(1.0, &self.w.value.dot(&du));
        }
        dh
    }

    pub fn params(&self) -> Vec<&Param> {
        vec![&self.w, &self.b, &self.p]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.w, &mut self.b, &mut self.p]
    }
}

/// `p · tanh(W h_t + b)` for every token position.
pub fn score_tokens(h: &HiddenStates, head: &HeadParameters) -> Result<Vec<f64>> {
    head.score_tokens(h)
}

pub(crate) fn outer(a: ArrayView1<f64>, b: ArrayView1<f64>) -> Array2<f64> {
    let a2 = a.insert_axis(Axis(1));
    let b2 = b.insert_axis(Axis(0));
    a2.dot(&b2)
}

/// `[CLS]`-pooled classifier: `logits = tanh(W h₀ + b) V + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledHead {
    pub w: Param,
    pub b: Param,
    /// `D × C` output projection.
    pub out: Param,
    pub out_b: Param,
}

#[derive(Debug, Clone)]
pub struct PooledHeadCache {
    act: Array1<f64>,
    mask: Option<Array1<f64>>,
}

impl PooledHead {
    pub fn new<R: Rng>(width: usize, classes: usize, rng: &mut R) -> Self {
        let std = (1.0 / width as f64).sqrt();
        PooledHead {
            w: Param::normal("pooled.w", width, width, std, rng),
            b: Param::zeros("pooled.b", 1, width),
            out: Param::normal("pooled.out", width, classes, std, rng),
            out_b: Param::zeros("pooled.out_b", 1, classes),
        }
    }

    pub fn zeros(width: usize, classes: usize) -> Self {
        PooledHead {
            w: Param::zeros("pooled.w", width, width),
            b: Param::zeros("pooled.b", 1, width),
            out: Param::zeros("pooled.out", width, classes),
            out_b: Param::zeros("pooled.out_b", 1, classes),
        }
    }

    pub fn width(&self) -> usize {
        self.w.value.nrows()
    }

    pub fn classes(&self) -> usize {
        self.out.value.ncols()
    }

    pub fn forward<R: Rng>(
        &self,
        h: &HiddenStates,
        dropout: f64,
        rng: Option<&mut R>,
    ) -> Result<(Vec<f64>, PooledHeadCache)> {
        if h.width() != self.width() || h.is_empty() {
            return Err(Error::Dimension(format!(
                "pooled head of width {} given hidden states {:?}",
                self.width(),
                h.matrix().dim()
            )));
        }
        let act = (h.row(0).dot(&self.w.value) + self.b.value.row(0)).mapv(f64::tanh);
        let mask = dropout_mask(self.width(), dropout, rng);
        let dropped = match &mask {
            Some(m) => &act * m,
            None => act.clone(),
        };
        let logits = dropped.dot(&self.out.value) + self.out_b.value.row(0);
        Ok((logits.to_vec(), PooledHeadCache { act, mask }))
    }

    pub fn backward(&mut self, h: &HiddenStates, cache: &PooledHeadCache, d_logits: &[f64]) -> Array2<f64> {
        let dl = Array1::from(d_logits.to_vec());
        let dropped = match &cache.mask {
            Some(m) => &cache.act * m,
            None => cache.act.clone(),
        };
        self.out.grad += &outer(dropped.view(), dl.view());
        self.out_b.grad.row_mut(0).scaled_add(1.0, &dl);
        let mut da = self.out.value.dot(&dl);
        if let Some(m) = &cache.mask {
            da *= m;
        }
        da *= &cache.act.mapv(|v| 1.0 - v * v);
        self.w.grad += &outer(h.row(0), da.view());
        self.b.grad.row_mut(0).scaled_add(1.0, &da);
        let mut dh = Array2::zeros(h.matrix().raw_dim());
        dh.slice_mut(s![0, ..]).assign(&self.w.value.dot(&da));
        dh
    }

    pub fn params(&self) -> Vec<&Param> {
        vec![&self.w, &self.b, &self.out, &self.out_b]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.w, &mut self.b, &mut self.out, &mut self.out_b]
    }
}
