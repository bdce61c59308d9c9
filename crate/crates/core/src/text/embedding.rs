use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tokenize;
use crate::error::{Error, Result};

/// Width of the contextual sentence embeddings consumed by the text branch.
pub const EMBEDDING_DIM: usize = 768;

/// One line of the embedding JSONL file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub id: String,
    pub vec: Vec<f64>,
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<BTreeMap<String, EmbeddingRecord>> {
    let path = path.as_ref();
    let origin = path.display().to_string();
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut out = BTreeMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |msg: String| Error::Parse {
            path: origin.clone(),
            line: i + 1,
            msg,
        };
        let rec: EmbeddingRecord =
            serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        if rec.vec.len() != EMBEDDING_DIM {
            return Err(Error::EmbeddingDim {
                id: rec.id,
                got: rec.vec.len(),
                expected: EMBEDDING_DIM,
            });
        }
        if rec.vec.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("embedding for segment {}", rec.id)));
        }
        if out.contains_key(&rec.id) {
            return Err(parse_err(format!("duplicate segment id `{}`", rec.id)));
        }
        out.insert(rec.id.clone(), rec);
    }
    Ok(out)
}

pub fn write_embeddings<'a>(
    path: impl AsRef<Path>,
    records: impl IntoIterator<Item = &'a EmbeddingRecord>,
) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Deterministic unit-norm bag-of-hashed-tokens vector.
///
/// Stands in for transformer embeddings when no exported file is available:
/// texts sharing vocabulary land close together.
pub fn hash_embedding(text: &str, dim: usize) -> Vec<f64> {
    let mut tokens = tokenize(text);
    if tokens.is_empty() {
        tokens.push(String::from("\u{0}empty"));
    }
    let mut acc = vec![0.0; dim];
    for token in &tokens {
        let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(token.as_bytes()));
        for a in acc.iter_mut() {
            *a += rng.gen_range(-1.0..1.0);
        }
    }
    let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
    acc.iter().map(|v| v / norm).collect()
}
