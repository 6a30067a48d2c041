//! Two-segment input assembly: `[CLS] label₁ … label_C [SEP] sentence`.

use std::ops::Range;

use serde::Serialize;

use super::vocab::Vocab;
use crate::{Error, LabelSpace, Result};

/// Default maximum sequence length.
pub const DEFAULT_MAX_LEN: usize = 128;

pub const LABEL_SEGMENT: u8 = 0;
pub const SENTENCE_SEGMENT: u8 = 1;

/// One sentence word and the sequence positions of its pieces.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WordSpan {
    pub word: String,
    pub pieces: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModelInput {
    pub token_ids: Vec<u32>,
    pub segment_ids: Vec<u8>,
    /// Position of the first piece of each label, in label-space order.
    /// Empty for sentence-only inputs.
    pub label_positions: Vec<usize>,
    pub attention_mask: Vec<u8>,
    pub words: Vec<WordSpan>,
}

impl ModelInput {
    pub fn len(&self) -> usize {
        self.token_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_ids.is_empty()
    }

    /// Number of positions belonging to the label segment, excluding `[CLS]`/`[SEP]`.
    pub fn label_token_count(&self) -> usize {
        if self.label_positions.is_empty() {
            return 0;
        }
        self.segment_ids.iter().filter(|&&s| s == LABEL_SEGMENT).count() - 2
    }
}

/// Label segment first, then the sentence; only the sentence is truncated.
pub fn assemble_input(space: &LabelSpace, tokens: &[String], vocab: &Vocab, max_len: usize) -> Result<ModelInput> {
    let mut token_ids = vec![vocab.cls_id()];
    let mut label_positions = Vec::with_capacity(space.len());
    for surface in space.surface_tokens() {
        let pieces = label_pieces(surface, vocab)?;
        label_positions.push(token_ids.len());
        token_ids.extend(pieces);
    }
    token_ids.push(vocab.sep_id());
    if token_ids.len() > max_len {
        return Err(Error::InputTooLong { len: token_ids.len(), max: max_len });
    }
    let label_len = token_ids.len();
    let words = append_sentence(&mut token_ids, tokens, vocab, max_len);

    let n = token_ids.len();
    let segment_ids = (0..n).map(|i| if i < label_len { LABEL_SEGMENT } else { SENTENCE_SEGMENT }).collect();
    Ok(ModelInput { token_ids, segment_ids, label_positions, attention_mask: vec![1; n], words })
}

/// `[CLS] sentence [SEP]` with no label tokens, for the pooled-head ablation.
pub fn assemble_sentence_only(tokens: &[String], vocab: &Vocab, max_len: usize) -> Result<ModelInput> {
    if max_len < 2 {
        return Err(Error::InputTooLong { len: 2, max: max_len });
    }
    let mut token_ids = vec![vocab.cls_id()];
    let words = append_sentence(&mut token_ids, tokens, vocab, max_len - 1);
    token_ids.push(vocab.sep_id());
    let n = token_ids.len();
    Ok(ModelInput {
        token_ids,
        segment_ids: vec![LABEL_SEGMENT; n],
        label_positions: Vec::new(),
        attention_mask: vec![1; n],
        words,
    })
}

fn label_pieces(surface: &str, vocab: &Vocab) -> Result<Vec<u32>> {
    let pieces = vocab.pieces(surface);
    if pieces == [vocab.unk_id()] && vocab.id(surface) != Some(vocab.unk_id()) {
        return Err(Error::Encoder(format!("label token `{surface}` is not covered by the vocabulary")));
    }
    Ok(pieces)
}

/// Appends whole words while they fit within `limit` positions.
fn append_sentence(token_ids: &mut Vec<u32>, tokens: &[String], vocab: &Vocab, limit: usize) -> Vec<WordSpan> {
    let mut words = Vec::with_capacity(tokens.len());
    for word in tokens {
        let pieces = vocab.pieces(word);
        if token_ids.len() + pieces.len() > limit {
            break;
        }
        let start = token_ids.len();
        token_ids.extend(&pieces);
        words.push(WordSpan { word: word.clone(), pieces: start..token_ids.len() });
    }
    words
}
