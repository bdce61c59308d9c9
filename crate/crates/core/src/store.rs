//! On-disk feature store.
//!
//! ```text
//! <dir>/features.jsonl          one metadata record per segment
//! <dir>/arrays/<n>_<id>.mfcc.f64       MFCC matrix, little-endian f64
//! <dir>/arrays/<n>_<id>.embedding.f64  embedding vector, little-endian f64
//! <dir>/lexicon_pca.json        fitted lexicon reduction
//! ```
//!
//! Writing the same segments twice produces identical bytes.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::FeatureBundle;
use crate::mfcc::MfccMatrix;
use crate::pipeline::LexiconReduction;

pub const FEATURES_FILE: &str = "features.jsonl";
pub const ARRAYS_DIR: &str = "arrays";
pub const PCA_FILE: &str = "lexicon_pca.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayRef {
    pub path: String,
    pub shape: Vec<usize>,
}

/// One line of `features.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreRecord {
    pub id: String,
    pub time: Option<Vec<f64>>,
    pub spectral: Option<Vec<f64>>,
    /// Raw category proportions before PCA.
    pub lexicon: Option<Vec<f64>>,
    /// PCA-reduced lexicon vector.
    pub liwc: Option<Vec<f64>>,
    pub mfcc: Option<ArrayRef>,
    pub embedding: Option<ArrayRef>,
}

/// A segment ready to be stored.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredSegment {
    pub bundle: FeatureBundle,
    pub lexicon: Option<Vec<f64>>,
}

fn file_stem(index: usize, id: &str) -> String {
    let clean: String = id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' })
        .collect();
    format!("{index:05}_{clean}")
}

fn write_f64(path: &Path, values: &[f64]) -> Result<()> {
    let mut bytes = Vec::with_capacity(values.len() * 8);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes)?;
    Ok(())
}

fn read_f64(path: &Path, expected: usize) -> Result<Vec<f64>> {
    let bytes = fs::read(path)?;
    if bytes.len() != expected * 8 {
        return Err(Error::Parse {
            path: path.display().to_string(),
            line: 0,
            msg: format!("expected {} bytes, found {}", expected * 8, bytes.len()),
        });
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

pub fn write_store(dir: impl AsRef<Path>, segments: &[StoredSegment], reduction: Option<&LexiconReduction>) -> Result<()> {
    let dir = dir.as_ref();
    let arrays = dir.join(ARRAYS_DIR);
    if arrays.exists() {
        fs::remove_dir_all(&arrays)?;
    }
    fs::create_dir_all(&arrays)?;
    let mut lines = Vec::new();
    for (i, seg) in segments.iter().enumerate() {
        let b = &seg.bundle;
        let stem = file_stem(i, &b.id);
        let mfcc = match &b.mfcc {
            Some(m) => {
                let rel = format!("{ARRAYS_DIR}/{stem}.mfcc.f64");
                write_f64(&dir.join(&rel), &m.data)?;
                Some(ArrayRef {
                    path: rel,
                    shape: m.image_shape().to_vec(),
                })
            }
            None => None,
        };
        let embedding = match &b.embedding {
            Some(v) => {
                let rel = format!("{ARRAYS_DIR}/{stem}.embedding.f64");
                write_f64(&dir.join(&rel), v)?;
                Some(ArrayRef {
                    path: rel,
                    shape: vec![v.len()],
                })
            }
            None => None,
        };
        let rec = StoreRecord {
            id: b.id.clone(),
            time: b.time.clone(),
            spectral: b.spectral.clone(),
            lexicon: seg.lexicon.clone(),
            liwc: b.liwc.clone(),
            mfcc,
            embedding,
        };
        lines.push(serde_json::to_string(&rec)?);
    }
    let mut f = fs::File::create(dir.join(FEATURES_FILE))?;
    for l in lines {
        writeln!(f, "{l}")?;
    }
    match reduction {
        Some(r) => fs::write(dir.join(PCA_FILE), serde_json::to_string_pretty(r)?)?,
        None => {
            let p = dir.join(PCA_FILE);
            if p.exists() {
                fs::remove_file(p)?;
            }
        }
    }
    Ok(())
}

/// Loads every stored segment in file order.
pub fn read_store(dir: impl AsRef<Path>) -> Result<Vec<StoredSegment>> {
    let dir = dir.as_ref();
    let path: PathBuf = dir.join(FEATURES_FILE);
    let reader = BufReader::new(fs::File::open(&path)?);
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: StoreRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: n + 1,
            msg: e.to_string(),
        })?;
        let mfcc = match &rec.mfcc {
            Some(a) => {
                let [orders, n_coeffs, frames]: [usize; 3] =
                    a.shape.clone().try_into().map_err(|_| Error::Parse {
                        path: path.display().to_string(),
                        line: n + 1,
                        msg: format!("MFCC shape {:?} is not 3-D", a.shape),
                    })?;
                Some(MfccMatrix {
                    n_coeffs,
                    orders,
                    frames,
                    data: read_f64(&dir.join(&a.path), orders * n_coeffs * frames)?,
                })
            }
            None => None,
        };
        let embedding = match &rec.embedding {
            Some(a) => Some(read_f64(&dir.join(&a.path), a.shape.iter().product())?),
            None => None,
        };
        out.push(StoredSegment {
            bundle: FeatureBundle {
                id: rec.id,
                liwc: rec.liwc,
                time: rec.time,
                spectral: rec.spectral,
                mfcc,
                embedding,
            },
            lexicon: rec.lexicon,
        });
    }
    Ok(out)
}

pub fn read_reduction(dir: impl AsRef<Path>) -> Result<Option<LexiconReduction>> {
    let p = dir.as_ref().join(PCA_FILE);
    if !p.exists() {
        return Ok(None);
    }
    Ok(Some(serde_json::from_slice(&fs::read(p)?)?))
}
