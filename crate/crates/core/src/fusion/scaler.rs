use serde::{Deserialize, Serialize};

use super::{BranchMask, Example, FeatureBundle};
use crate::error::{Error, Result};
use crate::mfcc::MfccMatrix;

/// Standard deviations below this are treated as 1 so constant features pass through centred.
const STD_FLOOR: f64 = 1e-12;

/// Per-position z-scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit<'a>(rows: impl IntoIterator<Item = &'a [f64]>) -> Result<Self> {
        let mut n = 0usize;
        let mut sum: Vec<f64> = Vec::new();
        let mut sq: Vec<f64> = Vec::new();
        for row in rows {
            if n == 0 {
                sum = vec![0.0; row.len()];
                sq = vec![0.0; row.len()];
            } else if row.len() != sum.len() {
                return Err(Error::ShapeMismatch {
                    op: "standardizer",
                    left: vec![sum.len()],
                    right: vec![row.len()],
                });
            }
            for (i, v) in row.iter().enumerate() {
                sum[i] += v;
                sq[i] += v * v;
            }
            n += 1;
        }
        if n == 0 {
            return Err(Error::invalid("cannot fit a scaler on zero rows"));
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / n as f64).collect();
        let std = sq
            .iter()
            .zip(&mean)
            .map(|(q, m)| {
                let s = (q / n as f64 - m * m).max(0.0).sqrt();
                if s < STD_FLOOR {
                    1.0
                } else {
                    s
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

/// Scalers for every modality, fitted on a training fold only.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub liwc: Option<Standardizer>,
    pub time: Option<Standardizer>,
    pub spectral: Option<Standardizer>,
    /// One entry per MFCC channel, pooled over frames.
    pub mfcc: Option<Standardizer>,
    pub embedding: Option<Standardizer>,
}

impl FeatureScaler {
    pub fn fit(examples: &[Example], mask: BranchMask, spectral: bool) -> Result<Self> {
        let f = || examples.iter().map(|e| &e.features);
        let mut s = Self::default();
        if mask.a {
            s.liwc = Some(Standardizer::fit(f().map(|b| b.liwc_input()).collect::<Result<Vec<_>>>()?)?);
        }
        if mask.b {
            let time: Vec<&[f64]> = f()
                .map(|b| {
                    b.time.as_deref().ok_or(Error::MissingModality {
                        segment: b.id.clone(),
                        branch: 'b',
                    })
                })
                .collect::<Result<_>>()?;
            s.time = Some(Standardizer::fit(time)?);
            if spectral {
                let spec: Vec<&[f64]> = f()
                    .map(|b| {
                        b.spectral.as_deref().ok_or(Error::MissingModality {
                            segment: b.id.clone(),
                            branch: 'b',
                        })
                    })
                    .collect::<Result<_>>()?;
                s.spectral = Some(Standardizer::fit(spec)?);
            }
        }
        if mask.c {
            let mats: Vec<&MfccMatrix> = f().map(|b| b.mfcc_input()).collect::<Result<_>>()?;
            s.mfcc = Some(fit_channels(&mats)?);
        }
        if mask.d {
            s.embedding = Some(Standardizer::fit(
                f().map(|b| b.embedding_input()).collect::<Result<Vec<_>>>()?,
            )?);
        }
        Ok(s)
    }

    /// Scales whichever modalities have a fitted scaler; others are copied.
    pub fn transform(&self, b: &FeatureBundle) -> FeatureBundle {
        let vec = |s: &Option<Standardizer>, v: &Option<Vec<f64>>| match (s, v) {
            (Some(s), Some(v)) => Some(s.apply(v)),
            _ => v.clone(),
        };
        let mfcc = match (&self.mfcc, &b.mfcc) {
            (Some(s), Some(m)) => {
                let mut m = m.clone();
                for ch in 0..m.channels().min(s.mean.len()) {
                    let (mu, sd) = (s.mean[ch], s.std[ch]);
                    for v in &mut m.data[ch * m.frames..(ch + 1) * m.frames] {
                        *v = (*v - mu) / sd;
                    }
                }
                Some(m)
            }
            (_, m) => m.clone(),
        };
        FeatureBundle {
            id: b.id.clone(),
            liwc: vec(&self.liwc, &b.liwc),
            time: vec(&self.time, &b.time),
            spectral: vec(&self.spectral, &b.spectral),
            mfcc,
            embedding: vec(&self.embedding, &b.embedding),
        }
    }

    pub fn transform_all(&self, examples: &[Example]) -> Vec<Example> {
        examples
            .iter()
            .map(|e| Example {
                features: self.transform(&e.features),
                label: e.label,
            })
            .collect()
    }
}

fn fit_channels(mats: &[&MfccMatrix]) -> Result<Standardizer> {
    let channels = mats.first().map_or(0, |m| m.channels());
    let mut sum = vec![0.0; channels];
    let mut sq = vec![0.0; channels];
    let mut n = 0usize;
    for m in mats {
        if m.channels() != channels {
            return Err(Error::ShapeMismatch {
                op: "mfcc scaler",
                left: vec![channels],
                right: vec![m.channels()],
            });
        }
        for ch in 0..channels {
            for v in m.row(ch) {
                sum[ch] += v;
                sq[ch] += v * v;
            }
        }
        n += m.frames;
    }
    if n == 0 {
        return Err(Error::invalid("cannot fit an MFCC scaler on zero frames"));
    }
    let mean: Vec<f64> = sum.iter().map(|s| s / n as f64).collect();
    let std = sq
        .iter()
        .zip(&mean)
        .map(|(q, m)| {
            let s = (q / n as f64 - m * m).max(0.0).sqrt();
            if s < STD_FLOOR {
                1.0
            } else {
                s
            }
        })
        .collect();
    Ok(Standardizer { mean, std })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardizer_centres_and_scales() {
        let rows = [vec![1.0, 5.0], vec![3.0, 5.0]];
        let s = Standardizer::fit(rows.iter().map(|r| r.as_slice())).unwrap();
        assert_eq!(s.mean, vec![2.0, 5.0]);
        assert_eq!(s.std, vec![1.0, 1.0]);
        assert_eq!(s.apply(&[3.0, 5.0]), vec![1.0, 0.0]);
    }
}
