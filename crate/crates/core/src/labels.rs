//! Emotion label space and the vectors indexed by it.
//!
//! Label order is fixed at construction and every vector, matrix and plot in
//! the crate indexes labels in that order.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// The 11 SemEval-2018 E-c emotion columns, in file order.
pub const SEMEVAL_EMOTIONS: [&str; 11] = [
    "anger",
    "anticipation",
    "disgust",
    "fear",
    "joy",
    "love",
    "optimism",
    "pessimism",
    "sadness",
    "surprise",
    "trust",
];

const SPANISH_SURFACE: [&str; 11] = [
    "ira",
    "anticipación",
    "asco",
    "miedo",
    "alegría",
    "amor",
    "optimismo",
    "pesimismo",
    "tristeza",
    "sorpresa",
    "confianza",
];

const ARABIC_SURFACE: [&str; 11] = [
    "غضب",
    "ترقب",
    "اشمئزاز",
    "خوف",
    "سعادة",
    "حب",
    "تفاؤل",
    "تشاؤم",
    "حزن",
    "مفاجأة",
    "ثقة",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    #[default]
    English,
    Arabic,
    Spanish,
}

impl Language {
    /// Registry id of the pretrained encoder used for this language.
    pub fn default_encoder_id(self) -> &'static str {
        match self {
            Language::English => "bert-base-uncased",
            Language::Arabic => "asafaya/bert-base-arabic",
            Language::Spanish => "dccuchile/bert-base-spanish-wwm-uncased",
        }
    }
}

impl std::str::FromStr for Language {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "english" | "en" => Ok(Language::English),
            "arabic" | "ar" => Ok(Language::Arabic),
            "spanish" | "es" => Ok(Language::Spanish),
            other => Err(Error::Usage(format!("unknown language `{other}`"))),
        }
    }
}

/// Ordered set of emotion classes.
///
/// `names` are the dataset column headers; `surface_tokens` are the words
/// placed in the label segment of the model input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSpace {
    names: Vec<String>,
    surface_tokens: Vec<String>,
}

impl LabelSpace {
    /// Surface tokens default to the lower-cased names.
    pub fn new<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        let surface: Vec<String> = names.iter().map(|n| n.as_ref().to_lowercase()).collect();
        Self::with_surface_tokens(names, &surface)
    }

    pub fn with_surface_tokens<S: AsRef<str>, T: AsRef<str>>(
        names: &[S],
        surface_tokens: &[T],
    ) -> Result<Self> {
        if names.len() < 2 {
            return Err(Error::Usage(format!(
                "a label space needs at least 2 classes, got {}",
                names.len()
            )));
        }
        if names.len() != surface_tokens.len() {
            return Err(Error::Dimension(format!(
                "{} names but {} surface tokens",
                names.len(),
                surface_tokens.len()
            )));
        }
        let mut seen = HashSet::new();
        for n in names {
            if !seen.insert(n.as_ref()) {
                return Err(Error::Usage(format!("duplicate label name `{}`", n.as_ref())));
            }
        }
        for t in surface_tokens {
            if t.as_ref().trim().is_empty() {
                return Err(Error::Usage("empty label surface token".into()));
            }
        }
        Ok(LabelSpace {
            names: names.iter().map(|n| n.as_ref().to_string()).collect(),
            surface_tokens: surface_tokens.iter().map(|t| t.as_ref().to_string()).collect(),
        })
    }

    /// Same names, surface tokens for `language`.
    pub fn for_language(language: Language) -> Self {
        let surface: &[&str] = match language {
            Language::English => &SEMEVAL_EMOTIONS,
            Language::Arabic => &ARABIC_SURFACE,
            Language::Spanish => &SPANISH_SURFACE,
        };
        LabelSpace::with_surface_tokens(&SEMEVAL_EMOTIONS, surface).expect("static label set")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn surface_tokens(&self) -> &[String] {
        &self.surface_tokens
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Builds a label vector from label names.
    pub fn vector_of(&self, names: &[&str]) -> Result<LabelVector> {
        let mut bits = vec![0u8; self.len()];
        for name in names {
            let i = self
                .index_of(name)
                .ok_or_else(|| Error::Usage(format!("unknown label `{name}`")))?;
            bits[i] = 1;
        }
        LabelVector::new(bits)
    }

    /// Reorders the space; `order[i]` is the old index placed at position `i`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.len() {
            return Err(Error::Dimension("permutation length".into()));
        }
        let names: Vec<&str> = order.iter().map(|&i| self.names[i].as_str()).collect();
        let surface: Vec<&str> = order.iter().map(|&i| self.surface_tokens[i].as_str()).collect();
        LabelSpace::with_surface_tokens(&names, &surface)
    }
}

/// The 11-class SemEval-2018 E-c space in canonical column order.
pub fn default_semeval_space() -> LabelSpace {
    LabelSpace::for_language(Language::English)
}

/// Binary gold or predicted label set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u8>", into = "Vec<u8>")]
pub struct LabelVector(Vec<u8>);

impl LabelVector {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::Usage(format!("label bit must be 0 or 1, got {b}")));
        }
        Ok(LabelVector(bits))
    }

    pub fn zeros(len: usize) -> Self {
        LabelVector(vec![0; len])
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        LabelVector(bits.iter().map(|&b| b as u8).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i] == 1
    }

    /// Number of positive labels.
    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b == 1).count()
    }

    pub fn is_neutral(&self) -> bool {
        self.count() == 0
    }

    pub fn positives(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &b)| b == 1).map(|(i, _)| i)
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&b| b as f64).collect()
    }

    pub fn permuted(&self, order: &[usize]) -> Self {
        LabelVector(order.iter().map(|&i| self.0[i]).collect())
    }
}

impl TryFrom<Vec<u8>> for LabelVector {
    type Error = Error;

    fn try_from(bits: Vec<u8>) -> Result<Self> {
        LabelVector::new(bits)
    }
}

impl From<LabelVector> for Vec<u8> {
    fn from(v: LabelVector) -> Self {
        v.0
    }
}

/// Per-class probabilities, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Usage(format!("probability {p} outside [0, 1]")));
        }
        Ok(ProbabilityVector(probs))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for ProbabilityVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl std::ops::Index<usize> for ProbabilityVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Negative (`y⁰`) and positive (`y¹`) index sets of a label vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelPartition {
    pub negatives: Vec<usize>,
    pub positives: Vec<usize>,
}

pub fn partition(y: &LabelVector) -> LabelPartition {
    let (positives, negatives) = (0..y.len()).partition(|&i| y.get(i));
    LabelPartition { negatives, positives }
}
