//! WordPiece vocabulary shared by the toy encoder and BERT checkpoints.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use crate::{Error, Result};

pub const PAD: &str = "[PAD]";
pub const UNK: &str = "[UNK]";
pub const CLS: &str = "[CLS]";
pub const SEP: &str = "[SEP]";

const CONTINUATION: &str = "##";
const MAX_WORD_CHARS: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    cls: u32,
    sep: u32,
    unk: u32,
}

impl Vocab {
    /// Every special token must be present.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            // First occurrence wins, as in BERT vocab files.
            index.entry(t.clone()).or_insert(i as u32);
        }
        let find = |s: &str| {
            index
                .get(s)
                .copied()
                .ok_or_else(|| Error::Encoder(format!("vocabulary lacks special token {s}")))
        };
        let (cls, sep, unk) = (find(CLS)?, find(SEP)?, find(UNK)?);
        Ok(Vocab { tokens, index, cls, sep, unk })
    }

    /// Special tokens first, then the given words in sorted order.
    pub fn build<'a, I: IntoIterator<Item = &'a str>>(words: I) -> Self {
        let specials = [PAD, UNK, CLS, SEP];
        let set: BTreeSet<&str> = words.into_iter().filter(|w| !specials.contains(w)).collect();
        let tokens = specials.iter().copied().chain(set).map(String::from).collect();
        Vocab::from_tokens(tokens).expect("specials present")
    }

    /// One token per line (`vocab.txt`).
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Vocab::from_tokens(text.lines().map(|l| l.trim_end_matches('\r').to_string()).collect())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = self.tokens.join("\n");
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn cls_id(&self) -> u32 {
        self.cls
    }

    pub fn sep_id(&self) -> u32 {
        self.sep
    }

    pub fn unk_id(&self) -> u32 {
        self.unk
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    /// Splits a word into vocabulary pieces.
    ///
    /// A word present as a whole is one piece. Otherwise greedy
    /// longest-match-first WordPiece with `##` continuations; a word that
    /// cannot be covered becomes a single `[UNK]`.
    pub fn pieces(&self, word: &str) -> Vec<u32> {
        if let Some(id) = self.id(word) {
            return vec![id];
        }
        let chars: Vec<char> = word.chars().collect();
        if chars.is_empty() || chars.len() > MAX_WORD_CHARS {
            return vec![self.unk];
        }
        let mut out = Vec::new();
        let mut start = 0;
        while start < chars.len() {
            let mut end = chars.len();
            let mut found = None;
            while start < end {
                let piece: String = chars[start..end].iter().collect();
                let piece = if start > 0 { format!("{CONTINUATION}{piece}") } else { piece };
                if let Some(id) = self.id(&piece) {
                    found = Some(id);
                    break;
                }
                end -= 1;
            }
            match found {
                Some(id) => out.push(id),
                None => return vec![self.unk],
            }
            start = end;
        }
        out
    }

    /// True if `word` maps to something other than `[UNK]`.
    pub fn covers(&self, word: &str) -> bool {
        self.pieces(word) != [self.unk]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Vocab {
        Vocab::build(["happy", "optim", "##ism", "un", "##happy", "joy"])
    }

    #[test]
    fn whole_words_are_single_pieces() {
        let v = toy();
        assert_eq!(v.pieces("happy"), vec![v.id("happy").unwrap()]);
    }

    #[test]
    fn wordpiece_split() {
        let v = toy();
        assert_eq!(v.pieces("optimism"), vec![v.id("optim").unwrap(), v.id("##ism").unwrap()]);
        assert_eq!(v.pieces("unhappy"), vec![v.id("un").unwrap(), v.id("##happy").unwrap()]);
    }

    #[test]
    fn unknown_words() {
        let v = toy();
        assert_eq!(v.pieces("zzz"), vec![v.unk_id()]);
        assert_eq!(v.pieces("optimisms"), vec![v.unk_id()]);
        assert!(!v.covers("zzz"));
    }

    #[test]
    fn missing_specials_rejected() {
        assert!(Vocab::from_tokens(vec!["[CLS]".into(), "a".into()]).is_err());
    }

    #[test]
    fn save_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vocab.txt");
        let v = toy();
        v.save(&path).unwrap();
        assert_eq!(Vocab::load(&path).unwrap(), v);
    }
}
