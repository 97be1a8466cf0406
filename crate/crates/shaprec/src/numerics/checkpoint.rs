//! Text checkpoint format for model parameters.
//!
//! Layout (tab-delimited):
//!
//! ```text
//! shaprec-checkpoint v1
//! header <key> <value>            # repeated, order preserved
//! block  <name> <rows> <cols>     # followed by `rows` lines of data
//! <hex> <hex> ...                 # `cols` values per line
//! ```
//!
//! Each value is the 16-digit hex encoding of the `f64` bit pattern, so a
//! save → load round trip is bit-exact. Blocks appear in a documented,
//! fixed order per model kind (see `dae` and `shapley`).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

const MAGIC: &str = "shaprec-checkpoint v1";

/// One named parameter block (vectors are 1×n blocks).
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Block {
    pub fn matrix(name: impl Into<String>, m: &crate::numerics::DenseMatrix) -> Self {
        Block {
            name: name.into(),
            rows: m.rows(),
            cols: m.cols(),
            data: m.data().to_vec(),
        }
    }

    pub fn vector(name: impl Into<String>, v: &[f64]) -> Self {
        Block {
            name: name.into(),
            rows: 1,
            cols: v.len(),
            data: v.to_vec(),
        }
    }

    pub fn to_matrix(&self) -> crate::numerics::DenseMatrix {
        crate::numerics::DenseMatrix::from_vec(self.rows, self.cols, self.data.clone())
    }
}

/// Header fields plus parameter blocks.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Checkpoint {
    pub header: Vec<(String, String)>,
    pub blocks: Vec<Block>,
}

impl Checkpoint {
    pub fn header_value(&self, key: &str) -> Option<&str> {
        self.header
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn block(&self, name: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.name == name)
    }

    /// Header value parsed as `T`, with a uniform error message.
    pub fn parsed_header<T: std::str::FromStr>(&self, path: &Path, key: &str) -> Result<T> {
        let raw = self
            .header_value(key)
            .ok_or_else(|| Error::MalformedArtifact {
                path: path.to_path_buf(),
                message: format!("missing header field `{key}`"),
            })?;
        raw.parse().map_err(|_| Error::MalformedArtifact {
            path: path.to_path_buf(),
            message: format!("header field `{key}` has invalid value `{raw}`"),
        })
    }
}

pub fn write_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    let mut out = String::new();
    out.push_str(MAGIC);
    out.push('\n');
    for (k, v) in &ckpt.header {
        debug_assert!(!k.contains(['\t', '\n']) && !v.contains(['\t', '\n']));
        let _ = writeln!(out, "header\t{k}\t{v}");
    }
    for b in &ckpt.blocks {
        let _ = writeln!(out, "block\t{}\t{}\t{}", b.name, b.rows, b.cols);
        for r in 0..b.rows {
            let row = &b.data[r * b.cols..(r + 1) * b.cols];
            let mut line = String::with_capacity(row.len() * 17);
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    line.push(' ');
                }
                let _ = write!(line, "{:016x}", v.to_bits());
            }
            out.push_str(&line);
            out.push('\n');
        }
    }
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let malformed = |message: String| Error::MalformedArtifact {
        path: path.to_path_buf(),
        message,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, line)) if line == MAGIC => {}
        _ => return Err(malformed(format!("expected `{MAGIC}` on line 1"))),
    }
    let mut ckpt = Checkpoint::default();
    let mut pending: Option<(Block, usize)> = None;
    for (idx, line) in lines {
        let lineno = idx + 1;
        if let Some((ref mut block, ref mut remaining)) = pending {
            let mut row = Vec::with_capacity(block.cols);
            for tok in line.split(' ') {
                let bits = u64::from_str_radix(tok, 16)
                    .map_err(|_| malformed(format!("line {lineno}: bad hex value `{tok}`")))?;
                row.push(f64::from_bits(bits));
            }
            if row.len() != block.cols {
                return Err(malformed(format!(
                    "line {lineno}: expected {} values, got {}",
                    block.cols,
                    row.len()
                )));
            }
            block.data.extend_from_slice(&row);
            *remaining -= 1;
            if *remaining == 0 {
                let (block, _) = pending.take().unwrap();
                ckpt.blocks.push(block);
            }
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        match fields.as_slice() {
            ["header", k, v] => ckpt.header.push((k.to_string(), v.to_string())),
            ["block", name, rows, cols] => {
                let rows: usize = rows
                    .parse()
                    .map_err(|_| malformed(format!("line {lineno}: bad row count")))?;
                let cols: usize = cols
                    .parse()
                    .map_err(|_| malformed(format!("line {lineno}: bad col count")))?;
                let block = Block {
                    name: name.to_string(),
                    rows,
                    cols,
                    data: Vec::with_capacity(rows * cols),
                };
                if rows == 0 {
                    ckpt.blocks.push(block);
                } else {
                    pending = Some((block, rows));
                }
            }
            _ => return Err(malformed(format!("line {lineno}: unrecognized record"))),
        }
    }
    if pending.is_some() {
        return Err(malformed("truncated block data".to_string()));
    }
    Ok(ckpt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{xavier_init, Rng};

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = std::env::temp_dir().join("shaprec-ckpt-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("rt.ckpt");

        let mut rng = Rng::new(123);
        let w = xavier_init(3, 5, &mut rng);
        let b = vec![0.1, -0.25, f64::MIN_POSITIVE];
        let ckpt = Checkpoint {
            header: vec![
                ("kind".into(), "test".into()),
                ("seed".into(), "123".into()),
            ],
            blocks: vec![Block::matrix("w", &w), Block::vector("b", &b)],
        };
        write_checkpoint(&path, &ckpt).unwrap();
        let back = read_checkpoint(&path).unwrap();
        assert_eq!(back, ckpt);
        for (orig, loaded) in w.data().iter().zip(back.block("w").unwrap().data.iter()) {
            assert_eq!(orig.to_bits(), loaded.to_bits());
        }
    }

    #[test]
    fn rejects_garbage() {
        let dir = std::env::temp_dir().join("shaprec-ckpt-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.ckpt");
        std::fs::write(&path, "not a checkpoint\n").unwrap();
        assert!(read_checkpoint(&path).is_err());
    }
}
