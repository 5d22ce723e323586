//! Word vectors in the plain text format: a `count dim` header followed by
//! one `token f1 ... fv` line per word.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng;

use super::matrix::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::text_pipeline::{Vocabulary, PAD, SPECIAL_TOKENS};

pub fn save_word_vectors(path: &Path, vocab: &Vocabulary, emb: &EmbeddingMatrix) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(format!("create {}", path.display()), e))?;
    let mut out = BufWriter::new(file);
    let werr = |e| Error::io(format!("write {}", path.display()), e);
    writeln!(out, "{} {}", vocab.len(), emb.dim).map_err(werr)?;
    for (id, token) in vocab.tokens().iter().enumerate() {
        write!(out, "{token}").map_err(werr)?;
        for v in emb.row(id as u32) {
            // `{:?}` prints the shortest representation that round-trips.
            write!(out, " {v:?}").map_err(werr)?;
        }
        writeln!(out).map_err(werr)?;
    }
    out.flush().map_err(werr)
}

/// Result of aligning a word-vector file with a vocabulary.
#[derive(Debug, Clone)]
pub struct PretrainedLoad {
    pub embedding: EmbeddingMatrix,
    /// Fraction of non-special vocabulary tokens found in the file.
    pub coverage: f64,
}

/// Loads vectors for `vocab` from a text word-vector file. Tokens missing
/// from the file are drawn from `uniform(-0.5/v, 0.5/v)`.
pub fn load_pretrained(path: &Path, vocab: &Vocabulary, dim: usize, rng: &mut impl Rng) -> Result<PretrainedLoad> {
    let file = File::open(path).map_err(|e| Error::io(format!("open {}", path.display()), e))?;
    let mut lines = BufReader::new(file).lines();
    let bad = |lineno: usize, msg: &str| Error::Data(format!("{} line {lineno}: {msg}", path.display()));
    let header = lines
        .next()
        .ok_or_else(|| bad(1, "missing header"))?
        .map_err(|e| Error::io(format!("read {}", path.display()), e))?;
    let mut parts = header.split_whitespace();
    let (_count, file_dim) = match (parts.next(), parts.next(), parts.next()) {
        (Some(c), Some(d), None) => (
            c.parse::<usize>().map_err(|_| bad(1, "header count is not an integer"))?,
            d.parse::<usize>().map_err(|_| bad(1, "header dim is not an integer"))?,
        ),
        _ => return Err(bad(1, "header must be `count dim`")),
    };
    if file_dim != dim {
        return Err(Error::Config(format!(
            "{}: vector dimension {file_dim} does not match configured dimension {dim}",
            path.display()
        )));
    }

    let mut found: HashMap<u32, Vec<f64>> = HashMap::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line.map_err(|e| Error::io(format!("read {}", path.display()), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let token = fields.next().ok_or_else(|| bad(lineno, "empty line"))?;
        let values: Vec<f64> = fields
            .map(|f| f.parse::<f64>().map_err(|_| bad(lineno, &format!("not a number: {f:?}"))))
            .collect::<Result<_>>()?;
        if values.len() != dim {
            return Err(bad(lineno, &format!("expected {dim} values, found {}", values.len())));
        }
        if let Some(id) = vocab.id(token) {
            found.insert(id, values);
        }
    }

    let mut embedding = EmbeddingMatrix::random(vocab.len(), dim, rng);
    let mut covered = 0usize;
    for (id, values) in &found {
        if *id == PAD {
            continue;
        }
        if *id as usize >= SPECIAL_TOKENS.len() {
            covered += 1;
        }
        embedding.row_mut(*id).copy_from_slice(values);
    }
    let ordinary = vocab.len() - SPECIAL_TOKENS.len();
    let coverage = if ordinary == 0 { 1.0 } else { covered as f64 / ordinary as f64 };
    Ok(PretrainedLoad { embedding, coverage })
}
