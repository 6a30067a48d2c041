//! SemEval-2018 E-c data: loading, normalization and statistics.

mod normalize;
mod stats;
pub mod synthetic;
mod tsv;

use std::collections::HashSet;
use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use normalize::{collapse_repeats, is_placeholder, normalize, MAX_REPEAT, URL_TOKEN, USER_TOKEN};
pub use stats::{compute_stats, DatasetStats};
pub use tsv::{load_ec_tsv, load_ec_tsv_unlabeled, parse_ec_tsv, write_ec_tsv};

use crate::{Error, LabelSpace, LabelVector, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    /// Guesses the split from a file name such as `2018-E-c-En-dev.txt`.
    pub fn infer(path: &Path) -> Option<Split> {
        let name = path.file_name()?.to_string_lossy().to_lowercase();
        if name.contains("train") {
            Some(Split::Train)
        } else if name.contains("dev") || name.contains("valid") {
            Some(Split::Valid)
        } else if name.contains("test") {
            Some(Split::Test)
        } else {
            None
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        })
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "valid" | "dev" => Ok(Split::Valid),
            "test" => Ok(Split::Test),
            other => Err(Error::Usage(format!("unknown split `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub id: String,
    pub raw_text: String,
    pub tokens: Vec<String>,
    pub labels: LabelVector,
}

impl Example {
    /// Normalizes `raw_text` into tokens.
    pub fn new(id: impl Into<String>, raw_text: impl Into<String>, labels: LabelVector) -> Self {
        let raw_text = raw_text.into();
        let tokens = normalize(&raw_text);
        Example { id: id.into(), raw_text, tokens, labels }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub split: Split,
    pub examples: Vec<Example>,
    pub space: LabelSpace,
}

impl Dataset {
    pub fn new(split: Split, space: LabelSpace, examples: Vec<Example>) -> Result<Self> {
        let mut ids = HashSet::new();
        for ex in &examples {
            if ex.labels.len() != space.len() {
                return Err(Error::Dimension(format!(
                    "example {} has {} labels, space has {}",
                    ex.id,
                    ex.labels.len(),
                    space.len()
                )));
            }
            if !ids.insert(ex.id.as_str()) {
                return Err(Error::Parse { row: ex.id.clone(), message: "duplicate id".into() });
            }
        }
        Ok(Dataset { split, examples, space })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn labels(&self) -> Vec<LabelVector> {
        self.examples.iter().map(|e| e.labels.clone()).collect()
    }

    pub fn find(&self, id: &str) -> Option<&Example> {
        self.examples.iter().find(|e| e.id == id)
    }

    /// One `{"id","tokens","labels"}` object per line.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        #[derive(Serialize)]
        struct Line<'a> {
            id: &'a str,
            tokens: &'a [String],
            labels: &'a LabelVector,
        }
        for ex in &self.examples {
            let line = Line { id: &ex.id, tokens: &ex.tokens, labels: &ex.labels };
            serde_json::to_writer(&mut w, &line)?;
            w.write_all(b"\n").map_err(|e| Error::io("<jsonl>", e))?;
        }
        Ok(())
    }
}
