use std::fs;
use std::io::Write;
use std::path::Path;

use super::{Dataset, Example, Split};
use crate::{Error, LabelSpace, LabelVector, Result};

/// Loads an E-c file: header `ID<TAB>Tweet<TAB><label>...`, then one row per tweet.
pub fn load_ec_tsv(path: &Path, space: &LabelSpace, split: Split) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_ec_tsv(&text, space, split)
}

pub fn parse_ec_tsv(text: &str, space: &LabelSpace, split: Split) -> Result<Dataset> {
    parse(text, space, split, false)
}

/// Like [`load_ec_tsv`], but label cells may also be `NONE` (unlabeled
/// release files); such cells read as 0.
pub fn load_ec_tsv_unlabeled(path: &Path, space: &LabelSpace, split: Split) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(&text, space, split, true)
}

fn parse(text: &str, space: &LabelSpace, split: Split, allow_none: bool) -> Result<Dataset> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Schema("missing header row".into()))?;
    check_header(header.trim_end_matches('\r'), space)?;

    let width = 2 + space.len();
    let mut examples = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let id = cols[0].to_string();
        if cols.len() != width {
            return Err(Error::Parse {
                row: id,
                message: format!("line {}: expected {width} columns, found {}", lineno + 2, cols.len()),
            });
        }
        let mut bits = Vec::with_capacity(space.len());
        for (name, cell) in space.names().iter().zip(&cols[2..]) {
            match cell.trim() {
                "0" => bits.push(0),
                "1" => bits.push(1),
                "NONE" if allow_none => bits.push(0),
                other => {
                    return Err(Error::Parse {
                        row: id,
                        message: format!("column `{name}` has value `{other}`, expected 0 or 1"),
                    })
                }
            }
        }
        examples.push(Example::new(id, cols[1], LabelVector::new(bits)?));
    }
    Dataset::new(split, space.clone(), examples)
}

fn check_header(header: &str, space: &LabelSpace) -> Result<()> {
    let cols: Vec<&str> = header.split('\t').map(str::trim).collect();
    if cols.len() < 2 || cols[0] != "ID" || cols[1] != "Tweet" {
        return Err(Error::Schema(format!(
            "header must start with `ID<TAB>Tweet`, found `{}`",
            cols.iter().take(2).copied().collect::<Vec<_>>().join("<TAB>")
        )));
    }
    let found = &cols[2..];
    let expected = space.names();
    for (i, name) in expected.iter().enumerate() {
        match found.get(i) {
            None => return Err(Error::Schema(format!("missing label column `{name}`"))),
            Some(f) if f != name => {
                return Err(Error::Schema(format!(
                    "label column {} is `{f}`, expected `{name}`",
                    i + 1
                )))
            }
            _ => {}
        }
    }
    if found.len() > expected.len() {
        return Err(Error::Schema(format!(
            "unexpected extra label columns: {}",
            found[expected.len()..].join(", ")
        )));
    }
    Ok(())
}

/// Writes rows in the E-c layout; `labels` overrides the dataset's gold labels
/// (used for predictions).
pub fn write_ec_tsv<W: Write>(mut w: W, dataset: &Dataset, labels: Option<&[LabelVector]>) -> Result<()> {
    let io = |e| Error::io("<tsv>", e);
    write!(w, "ID\tTweet").map_err(io)?;
    for name in dataset.space.names() {
        write!(w, "\t{name}").map_err(io)?;
    }
    writeln!(w).map_err(io)?;
    for (i, ex) in dataset.examples.iter().enumerate() {
        let y = labels.map_or(&ex.labels, |l| &l[i]);
        write!(w, "{}\t{}", ex.id, ex.raw_text).map_err(io)?;
        for b in y.bits() {
            write!(w, "\t{b}").map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    Ok(())
}
