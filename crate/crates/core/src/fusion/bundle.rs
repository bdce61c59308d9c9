use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mfcc::MfccMatrix;

/// Per-segment features. Modalities are optional so that a store can be
/// partially populated; the enabled branches decide which are required.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureBundle {
    pub id: String,
    pub liwc: Option<Vec<f64>>,
    pub time: Option<Vec<f64>>,
    pub spectral: Option<Vec<f64>>,
    pub mfcc: Option<MfccMatrix>,
    pub embedding: Option<Vec<f64>>,
}

impl FeatureBundle {
    pub fn empty(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            liwc: None,
            time: None,
            spectral: None,
            mfcc: None,
            embedding: None,
        }
    }

    fn missing(&self, branch: char) -> Error {
        Error::MissingModality {
            segment: self.id.clone(),
            branch,
        }
    }

    pub(crate) fn liwc_input(&self) -> Result<&[f64]> {
        self.liwc.as_deref().ok_or_else(|| self.missing('a'))
    }

    pub(crate) fn acoustic_input(&self, spectral: bool) -> Result<Vec<f64>> {
        let mut v = self.time.clone().ok_or_else(|| self.missing('b'))?;
        if spectral {
            v.extend(self.spectral.as_deref().ok_or_else(|| self.missing('b'))?);
        }
        Ok(v)
    }

    pub(crate) fn mfcc_input(&self) -> Result<&MfccMatrix> {
        self.mfcc.as_ref().ok_or_else(|| self.missing('c'))
    }

    pub(crate) fn embedding_input(&self) -> Result<&[f64]> {
        self.embedding.as_deref().ok_or_else(|| self.missing('d'))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub features: FeatureBundle,
    pub label: bool,
}

/// Enabled branches. Parsed from and printed as a subset of `abcd`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct BranchMask {
    pub a: bool,
    pub b: bool,
    pub c: bool,
    pub d: bool,
}

impl BranchMask {
    pub const ALL: Self = Self {
        a: true,
        b: true,
        c: true,
        d: true,
    };

    pub fn any(&self) -> bool {
        self.a || self.b || self.c || self.d
    }
}

impl Default for BranchMask {
    fn default() -> Self {
        Self::ALL
    }
}

impl FromStr for BranchMask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut m = Self {
            a: false,
            b: false,
            c: false,
            d: false,
        };
        for ch in s.chars().filter(|c| !matches!(c, ',' | ' ')) {
            let slot = match ch.to_ascii_lowercase() {
                'a' => &mut m.a,
                'b' => &mut m.b,
                'c' => &mut m.c,
                'd' => &mut m.d,
                other => return Err(Error::invalid(format!("unknown branch `{other}`"))),
            };
            *slot = true;
        }
        if !m.any() {
            return Err(Error::invalid("branch mask enables no branch"));
        }
        Ok(m)
    }
}

impl fmt::Display for BranchMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (on, ch) in [(self.a, 'a'), (self.b, 'b'), (self.c, 'c'), (self.d, 'd')] {
            if on {
                write!(f, "{ch}")?;
            }
        }
        Ok(())
    }
}

impl TryFrom<String> for BranchMask {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<BranchMask> for String {
    fn from(m: BranchMask) -> String {
        m.to_string()
    }
}

/// Input sizes for the enabled branches, fixed when a model is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDims {
    pub liwc: usize,
    pub acoustic: usize,
    /// `[orders, coefficients, frames]`
    pub mfcc: [usize; 3],
    pub embedding: usize,
}

impl InputDims {
    /// Infers sizes from the data and checks every example agrees.
    pub fn infer(examples: &[Example], mask: BranchMask, spectral: bool) -> Result<Self> {
        let first = examples
            .first()
            .ok_or_else(|| Error::invalid("no examples to infer input sizes from"))?;
        let dims_of = |f: &FeatureBundle| -> Result<Self> {
            Ok(Self {
                liwc: if mask.a { f.liwc_input()?.len() } else { 0 },
                acoustic: if mask.b { f.acoustic_input(spectral)?.len() } else { 0 },
                mfcc: if mask.c { f.mfcc_input()?.image_shape() } else { [0; 3] },
                embedding: if mask.d { f.embedding_input()?.len() } else { 0 },
            })
        };
        let dims = dims_of(&first.features)?;
        for ex in &examples[1..] {
            let d = dims_of(&ex.features)?;
            if d != dims {
                return Err(Error::invalid(format!(
                    "segment {} has input sizes {d:?}, expected {dims:?}",
                    ex.features.id
                )));
            }
        }
        if mask.a && dims.liwc == 0 {
            return Err(Error::invalid("lexicon sequence is empty"));
        }
        Ok(dims)
    }
}
