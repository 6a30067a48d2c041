//! Checkpoint persistence.
//!
//! A checkpoint is a directory with three files:
//!
//! - `params.bin`: parameter archive (see [`write_archive`]);
//! - `meta.json`: label space, threshold, α, seed, ablation, encoder shape and training config;
//! - `vocab.txt`: the encoder vocabulary.
//!
//! Archive layout, little-endian: magic `EMOPARAM`, `u32` version, `u32`
//! tensor count, then per tensor a `u32` name length, UTF-8 name, `u32`
//! rows, `u32` cols, and `rows × cols` `f64` values in row-major order.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::model::bert::{BertConfig, BertEncoder};
use crate::model::{AnyEncoder, Head, HeadKind, HeadParameters, PooledHead, SpanModel, ToyConfig, ToyEncoder, Vocab};
use crate::trainer::{Ablation, TrainConfig};
use crate::{Error, LabelSpace, Result};

const MAGIC: &[u8; 8] = b"EMOPARAM";
const VERSION: u32 = 1;

pub const PARAMS_FILE: &str = "params.bin";
pub const META_FILE: &str = "meta.json";
pub const VOCAB_FILE: &str = "vocab.txt";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EncoderSpec {
    Toy(ToyConfig),
    Bert(BertConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub space: LabelSpace,
    pub threshold: f64,
    pub alpha: f64,
    pub seed: u64,
    pub ablation: Ablation,
    pub head: HeadKind,
    pub dropout: f64,
    pub encoder: EncoderSpec,
    pub best_epoch: Option<usize>,
    pub best_score: Option<f64>,
    pub config: TrainConfig,
}

pub fn write_archive<W: Write>(mut w: W, tensors: &[(&str, &Array2<f64>)]) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(VERSION)?;
    w.write_u32::<LittleEndian>(tensors.len() as u32)?;
    for (name, t) in tensors {
        w.write_u32::<LittleEndian>(name.len() as u32)?;
        w.write_all(name.as_bytes())?;
        w.write_u32::<LittleEndian>(t.nrows() as u32)?;
        w.write_u32::<LittleEndian>(t.ncols() as u32)?;
        for &v in t.iter() {
            w.write_f64::<LittleEndian>(v)?;
        }
    }
    w.flush()
}

pub fn read_archive<R: Read>(mut r: R) -> Result<Vec<(String, Array2<f64>)>> {
    let bad = |m: String| Error::Checkpoint(m);
    let io = |e: std::io::Error| Error::Checkpoint(format!("truncated archive: {e}"));
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != MAGIC {
        return Err(bad("not a parameter archive".into()));
    }
    let version = r.read_u32::<LittleEndian>().map_err(io)?;
    if version != VERSION {
        return Err(bad(format!("unsupported archive version {version}")));
    }
    let count = r.read_u32::<LittleEndian>().map_err(io)?;
    let mut out = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let len = r.read_u32::<LittleEndian>().map_err(io)? as usize;
        let mut name = vec![0u8; len];
        r.read_exact(&mut name).map_err(io)?;
        let name = String::from_utf8(name).map_err(|_| bad("tensor name is not UTF-8".into()))?;
        let rows = r.read_u32::<LittleEndian>().map_err(io)? as usize;
        let cols = r.read_u32::<LittleEndian>().map_err(io)? as usize;
        let mut data = vec![0.0; rows * cols];
        r.read_f64_into::<LittleEndian>(&mut data).map_err(io)?;
        out.push((name, Array2::from_shape_vec((rows, cols), data).expect("sized above")));
    }
    Ok(out)
}

fn tmp_sibling(dir: &Path, tag: &str) -> PathBuf {
    let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "checkpoint".into());
    dir.with_file_name(format!(".{name}.{tag}-{}", std::process::id()))
}

/// Writes into a temporary sibling directory, then renames it into place.
pub fn save_checkpoint(dir: &Path, model: &SpanModel, meta: &CheckpointMeta) -> Result<()> {
    let tmp = tmp_sibling(dir, "tmp");
    if tmp.exists() {
        fs::remove_dir_all(&tmp).map_err(|e| Error::io(&tmp, e))?;
    }
    if let Some(parent) = dir.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::create_dir_all(&tmp).map_err(|e| Error::io(&tmp, e))?;

    let params = model.grouped_params();
    let tensors: Vec<(&str, &Array2<f64>)> = params.iter().map(|(_, p)| (p.name.as_str(), &p.value)).collect();
    let path = tmp.join(PARAMS_FILE);
    let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
    write_archive(BufWriter::new(file), &tensors).map_err(|e| Error::io(&path, e))?;

    let path = tmp.join(META_FILE);
    fs::write(&path, serde_json::to_string_pretty(meta)?).map_err(|e| Error::io(&path, e))?;
    model.encoder_vocab().save(&tmp.join(VOCAB_FILE))?;

    if dir.exists() {
        let old = tmp_sibling(dir, "old");
        fs::rename(dir, &old).map_err(|e| Error::io(dir, e))?;
        fs::rename(&tmp, dir).map_err(|e| Error::io(dir, e))?;
        fs::remove_dir_all(&old).map_err(|e| Error::io(&old, e))?;
    } else {
        fs::rename(&tmp, dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(())
}

pub fn load_meta(dir: &Path) -> Result<CheckpointMeta> {
    let path = dir.join(META_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn load_checkpoint(dir: &Path) -> Result<(SpanModel, CheckpointMeta)> {
    let meta = load_meta(dir)?;
    let vocab = Vocab::load(&dir.join(VOCAB_FILE))?;
    let encoder = match &meta.encoder {
        EncoderSpec::Toy(cfg) => AnyEncoder::Toy(ToyEncoder::zeros(cfg.clone(), vocab)),
        EncoderSpec::Bert(cfg) => AnyEncoder::Bert(Box::new(BertEncoder::zeros(cfg.clone(), vocab)?)),
    };
    let width = {
        use crate::model::Encoder;
        encoder.hidden_width()
    };
    let head = match meta.head {
        HeadKind::Span => Head::Span(HeadParameters::zeros(width)),
        HeadKind::Pooled => Head::Pooled(PooledHead::zeros(width, meta.space.len())),
    };
    let mut model = SpanModel { space: meta.space.clone(), encoder, head, dropout: meta.dropout };

    let path = dir.join(PARAMS_FILE);
    let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
    let tensors = read_archive(BufReader::new(file))?;
    let mut params = model.grouped_params_mut();
    if tensors.len() != params.len() {
        return Err(Error::Checkpoint(format!(
            "archive holds {} tensors, model expects {}",
            tensors.len(),
            params.len()
        )));
    }
    for ((name, value), (_, p)) in tensors.into_iter().zip(params.iter_mut()) {
        if name != p.name || value.dim() != p.value.dim() {
            return Err(Error::Checkpoint(format!(
                "tensor `{name}` {:?} does not match `{}` {:?}",
                value.dim(),
                p.name,
                p.value.dim()
            )));
        }
        p.value = value;
    }
    Ok((model, meta))
}

impl SpanModel {
    pub fn encoder_vocab(&self) -> &Vocab {
        use crate::model::Encoder;
        self.encoder.vocab()
    }

    pub fn encoder_spec(&self) -> EncoderSpec {
        match &self.encoder {
            AnyEncoder::Toy(e) => EncoderSpec::Toy(e.config().clone()),
            AnyEncoder::Bert(e) => EncoderSpec::Bert(e.config().clone()),
        }
    }
}
