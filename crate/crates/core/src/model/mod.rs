//! The span-prediction model.
//!
//! An input is assembled as `[CLS] label₁ … label_C [SEP] sentence`, encoded
//! into one hidden vector per token, scored token-by-token by the span head,
//! and the scores at the label positions go through a sigmoid to give the
//! per-emotion probabilities.

pub mod bert;
mod head;
mod input;
mod toy;
pub mod vocab;

use ndarray::{Array2, ArrayView1};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use head::{score_tokens, HeadParameters, PooledHead, PooledHeadCache, SpanHeadCache};
pub use input::{
    assemble_input, assemble_sentence_only, ModelInput, WordSpan, DEFAULT_MAX_LEN, LABEL_SEGMENT, SENTENCE_SEGMENT,
};
pub use toy::{ToyCache, ToyConfig, ToyEncoder};
pub use vocab::Vocab;

use crate::data::Example;
use crate::param::{Param, ParamGroup, Parameterized};
use crate::{Error, LabelSpace, LabelVector, ProbabilityVector, Result};
use bert::{BertCache, BertEncoder};

/// RNG used for initialization, dropout and shuffling.
pub type ModelRng = ChaCha8Rng;

/// Encoder output, one row per input position (`T × D`).
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenStates(Array2<f64>);

impl HiddenStates {
    pub fn new(m: Array2<f64>) -> Self {
        HiddenStates(m)
    }

    pub fn len(&self) -> usize {
        self.0.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.0.nrows() == 0
    }

    pub fn width(&self) -> usize {
        self.0.ncols()
    }

    pub fn row(&self, t: usize) -> ArrayView1<'_, f64> {
        self.0.row(t)
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn matrix_mut(&mut self) -> &mut Array2<f64> {
        &mut self.0
    }
}

/// Contract every encoder satisfies: deterministic in eval mode, trainable
/// through `backward`, which accumulates into the encoder's own gradients.
pub trait Encoder: Parameterized {
    type Cache;

    fn hidden_width(&self) -> usize;
    fn max_len(&self) -> usize;
    fn vocab(&self) -> &Vocab;
    fn encode(&self, input: &ModelInput) -> Result<HiddenStates>;
    fn encode_train(&self, input: &ModelInput, rng: &mut ModelRng) -> Result<(HiddenStates, Self::Cache)>;
    fn backward(&mut self, input: &ModelInput, cache: &Self::Cache, d_hidden: &Array2<f64>) -> Result<()>;
}

#[derive(Debug, Clone, PartialEq)]
pub enum AnyEncoder {
    Toy(ToyEncoder),
    Bert(Box<BertEncoder>),
}

pub enum AnyEncoderCache {
    Toy(ToyCache),
    Bert(Box<BertCache>),
}

impl Parameterized for AnyEncoder {
    fn params(&self) -> Vec<&Param> {
        match self {
            AnyEncoder::Toy(e) => e.params(),
            AnyEncoder::Bert(e) => e.params(),
        }
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        match self {
            AnyEncoder::Toy(e) => e.params_mut(),
            AnyEncoder::Bert(e) => e.params_mut(),
        }
    }
}

impl Encoder for AnyEncoder {
    type Cache = AnyEncoderCache;

    fn hidden_width(&self) -> usize {
        match self {
            AnyEncoder::Toy(e) => e.hidden_width(),
            AnyEncoder::Bert(e) => e.hidden_width(),
        }
    }

    fn max_len(&self) -> usize {
        match self {
            AnyEncoder::Toy(e) => e.max_len(),
            AnyEncoder::Bert(e) => e.max_len(),
        }
    }

    fn vocab(&self) -> &Vocab {
        match self {
            AnyEncoder::Toy(e) => e.vocab(),
            AnyEncoder::Bert(e) => e.vocab(),
        }
    }

    fn encode(&self, input: &ModelInput) -> Result<HiddenStates> {
        match self {
            AnyEncoder::Toy(e) => e.encode(input),
            AnyEncoder::Bert(e) => e.encode(input),
        }
    }

    fn encode_train(&self, input: &ModelInput, rng: &mut ModelRng) -> Result<(HiddenStates, AnyEncoderCache)> {
        match self {
            AnyEncoder::Toy(e) => e.encode_train(input, rng).map(|(h, c)| (h, AnyEncoderCache::Toy(c))),
            AnyEncoder::Bert(e) => e.encode_train(input, rng).map(|(h, c)| (h, AnyEncoderCache::Bert(Box::new(c)))),
        }
    }

    fn backward(&mut self, input: &ModelInput, cache: &AnyEncoderCache, d_hidden: &Array2<f64>) -> Result<()> {
        match (self, cache) {
            (AnyEncoder::Toy(e), AnyEncoderCache::Toy(c)) => e.backward(input, c, d_hidden),
            (AnyEncoder::Bert(e), AnyEncoderCache::Bert(c)) => e.backward(input, c, d_hidden),
            _ => Err(Error::Encoder("cache does not belong to this encoder".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadKind {
    /// Scores read off the label segment.
    Span,
    /// Sentence-only input, `[CLS]`-pooled classifier.
    Pooled,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Head {
    Span(HeadParameters),
    Pooled(PooledHead),
}

impl Head {
    pub fn kind(&self) -> HeadKind {
        match self {
            Head::Span(_) => HeadKind::Span,
            Head::Pooled(_) => HeadKind::Pooled,
        }
    }

    pub fn params(&self) -> Vec<&Param> {
        match self {
            Head::Span(h) => h.params(),
            Head::Pooled(h) => h.params(),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        match self {
            Head::Span(h) => h.params_mut(),
            Head::Pooled(h) => h.params_mut(),
        }
    }
}

enum HeadCache {
    Span(SpanHeadCache),
    Pooled(PooledHeadCache),
}

/// Everything saved by a training-mode forward pass.
pub struct ForwardCache {
    input: ModelInput,
    hidden: HiddenStates,
    encoder: AnyEncoderCache,
    head: HeadCache,
    probs: Vec<f64>,
}

impl ForwardCache {
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn input(&self) -> &ModelInput {
        &self.input
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpanModel {
    pub space: LabelSpace,
    pub encoder: AnyEncoder,
    pub head: Head,
    /// Dropout rate on the head's hidden layer during training.
    pub dropout: f64,
}

impl SpanModel {
    pub fn new(space: LabelSpace, encoder: AnyEncoder, kind: HeadKind, dropout: f64, rng: &mut ModelRng) -> Self {
        let d = encoder.hidden_width();
        let head = match kind {
            HeadKind::Span => Head::Span(HeadParameters::new(d, rng)),
            HeadKind::Pooled => Head::Pooled(PooledHead::new(d, space.len(), rng)),
        };
        SpanModel { space, encoder, head, dropout }
    }

    pub fn uses_label_segment(&self) -> bool {
        matches!(self.head, Head::Span(_))
    }

    pub fn assemble(&self, tokens: &[String]) -> Result<ModelInput> {
        let vocab = self.encoder.vocab();
        let max_len = self.encoder.max_len();
        match self.head {
            Head::Span(_) => assemble_input(&self.space, tokens, vocab, max_len),
            Head::Pooled(_) => assemble_sentence_only(tokens, vocab, max_len),
        }
    }

    pub fn hidden_states(&self, input: &ModelInput) -> Result<HiddenStates> {
        self.encoder.encode(input)
    }

    /// Eval-mode probabilities for a normalized token sequence.
    pub fn forward_tokens(&self, tokens: &[String]) -> Result<ProbabilityVector> {
        let input = self.assemble(tokens)?;
        let h = self.encoder.encode(&input)?;
        let logits = match &self.head {
            Head::Span(head) => head.forward_positions::<ModelRng>(&h, &input.label_positions, 0.0, None)?.0,
            Head::Pooled(head) => head.forward::<ModelRng>(&h, 0.0, None)?.0,
        };
        ProbabilityVector::new(logits.into_iter().map(sigmoid).collect())
    }

    pub fn forward(&self, example: &Example) -> Result<ProbabilityVector> {
        self.forward_tokens(&example.tokens)
    }

    /// Training-mode forward pass with dropout.
    pub fn forward_train(&self, tokens: &[String], rng: &mut ModelRng) -> Result<ForwardCache> {
        let input = self.assemble(tokens)?;
        let (hidden, enc_cache) = self.encoder.encode_train(&input, rng)?;
        let (logits, head) = match &self.head {
            Head::Span(head) => {
                let (s, c) = head.forward_positions(&hidden, &input.label_positions, self.dropout, Some(rng))?;
                (s, HeadCache::Span(c))
            }
            Head::Pooled(head) => {
                let (s, c) = head.forward(&hidden, self.dropout, Some(rng))?;
                (s, HeadCache::Pooled(c))
            }
        };
        let probs = logits.into_iter().map(sigmoid).collect();
        Ok(ForwardCache { input, hidden, encoder: enc_cache, head, probs })
    }

    /// Back-propagates `∂L/∂ŷ`, accumulating gradients in head and encoder.
    pub fn backward(&mut self, cache: &ForwardCache, d_probs: &[f64]) -> Result<()> {
        if d_probs.len() != cache.probs.len() {
            return Err(Error::Dimension(format!(
                "{} probability gradients for {} outputs",
                d_probs.len(),
                cache.probs.len()
            )));
        }
        let d_logits: Vec<f64> = d_probs.iter().zip(&cache.probs).map(|(g, p)| g * p * (1.0 - p)).collect();
        let dh = match (&mut self.head, &cache.head) {
            (Head::Span(h), HeadCache::Span(c)) => h.backward(&cache.hidden, c, &d_logits),
            (Head::Pooled(h), HeadCache::Pooled(c)) => h.backward(&cache.hidden, c, &d_logits),
            _ => return Err(Error::Encoder("head cache mismatch".into())),
        };
        self.encoder.backward(&cache.input, &cache.encoder, &dh)
    }

    pub fn zero_grad(&mut self) {
        self.encoder.zero_grad();
        for p in self.head.params_mut() {
            p.zero_grad();
        }
    }

    /// Every parameter tagged with its optimizer group, in a fixed order.
    pub fn grouped_params_mut(&mut self) -> Vec<(ParamGroup, &mut Param)> {
        let mut out: Vec<(ParamGroup, &mut Param)> =
            self.encoder.params_mut().into_iter().map(|p| (ParamGroup::Encoder, p)).collect();
        out.extend(self.head.params_mut().into_iter().map(|p| (ParamGroup::Head, p)));
        out
    }

    pub fn grouped_params(&self) -> Vec<(ParamGroup, &Param)> {
        let mut out: Vec<(ParamGroup, &Param)> =
            self.encoder.params().into_iter().map(|p| (ParamGroup::Encoder, p)).collect();
        out.extend(self.head.params().into_iter().map(|p| (ParamGroup::Head, p)));
        out
    }

    pub fn all_finite(&self) -> bool {
        self.grouped_params().iter().all(|(_, p)| p.is_finite())
    }
}

/// Free-function form of [`SpanModel::forward`] for a separately held encoder and span head.
pub fn forward<E: Encoder>(
    example: &Example,
    space: &LabelSpace,
    encoder: &E,
    head: &HeadParameters,
) -> Result<ProbabilityVector> {
    let input = assemble_input(space, &example.tokens, encoder.vocab(), encoder.max_len())?;
    let h = encoder.encode(&input)?;
    let scores = head.score_tokens(&h)?;
    ProbabilityVector::new(input.label_positions.iter().map(|&t| sigmoid(scores[t])).collect())
}

/// Bit `i` is set iff `ŷ[i] > threshold` (strict).
pub fn predict(probs: &ProbabilityVector, threshold: f64) -> LabelVector {
    debug_assert!(threshold > 0.0 && threshold < 1.0);
    LabelVector::from_bools(&probs.as_slice().iter().map(|&p| p > threshold).collect::<Vec<_>>())
}

pub const DEFAULT_THRESHOLD: f64 = 0.5;

pub fn check_threshold(threshold: f64) -> Result<f64> {
    if threshold > 0.0 && threshold < 1.0 {
        Ok(threshold)
    } else {
        Err(Error::Usage(format!("threshold must lie in (0, 1), got {threshold}")))
    }
}
