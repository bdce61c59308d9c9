use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::audio::AudioClip;
use crate::error::{Error, Result};

pub const SEGMENT_SECONDS: f64 = 10.0;
/// Reviewer scores are on a 0..=5 Likert scale.
pub const MAX_SCORE: u8 = 5;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregationRule {
    #[default]
    Mean,
    Max,
    /// Most frequent score; with three distinct scores, the median.
    Majority,
}

impl std::str::FromStr for AggregationRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Self::Mean),
            "max" => Ok(Self::Max),
            "majority" => Ok(Self::Majority),
            other => Err(Error::invalid(format!("unknown aggregation rule `{other}`"))),
        }
    }
}

pub fn aggregate_scores(scores: [u8; 3], rule: AggregationRule) -> Result<f64> {
    if let Some(s) = scores.iter().find(|&&s| s > MAX_SCORE) {
        return Err(Error::invalid(format!("score {s} outside 0..={MAX_SCORE}")));
    }
    let mut sorted = scores;
    sorted.sort_unstable();
    Ok(match rule {
        AggregationRule::Mean => scores.iter().map(|&s| s as f64).sum::<f64>() / 3.0,
        AggregationRule::Max => sorted[2] as f64,
        // any repeated score sits in the middle once sorted
        AggregationRule::Majority => sorted[1] as f64,
    })
}

/// `true` (violent) iff `label >= threshold`.
pub fn binarize(label: f64, threshold: f64) -> bool {
    label >= threshold
}

/// One manifest line. Aggregated and binary labels are derived, never stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub id: String,
    pub audio_path: String,
    pub transcript: String,
    pub r1: u8,
    pub r2: u8,
    pub r3: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

impl SegmentRecord {
    pub fn scores(&self) -> [u8; 3] {
        [self.r1, self.r2, self.r3]
    }

    pub fn label(&self, rule: AggregationRule) -> Result<f64> {
        aggregate_scores(self.scores(), rule)
    }

    pub fn is_violent(&self, rule: AggregationRule, threshold: f64) -> Result<bool> {
        Ok(binarize(self.label(rule)?, threshold))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub records: Vec<SegmentRecord>,
    /// Directory relative audio paths resolve against.
    pub base_dir: PathBuf,
    pub segment_seconds: f64,
}

impl Manifest {
    pub fn new(records: Vec<SegmentRecord>, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut ids = BTreeSet::new();
        for r in &records {
            if r.id.is_empty() {
                return Err(Error::invalid("segment with empty id"));
            }
            if !ids.insert(r.id.as_str()) {
                return Err(Error::invalid(format!("duplicate segment id `{}`", r.id)));
            }
            aggregate_scores(r.scores(), AggregationRule::Mean)
                .map_err(|e| Error::invalid(format!("segment {}: {e}", r.id)))?;
        }
        Ok(Self {
            records,
            base_dir: base_dir.into(),
            segment_seconds: SEGMENT_SECONDS,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let origin = path.display().to_string();
        let reader = BufReader::new(std::fs::File::open(path)?);
        let mut records = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: SegmentRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
                path: origin.clone(),
                line: i + 1,
                msg: e.to_string(),
            })?;
            records.push(rec);
        }
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::new(records, base)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn audio_path(&self, record: &SegmentRecord) -> PathBuf {
        let p = Path::new(&record.audio_path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn targets(&self, rule: AggregationRule, threshold: f64) -> Result<Vec<bool>> {
        self.records.iter().map(|r| r.is_violent(rule, threshold)).collect()
    }

    /// `ID,Transcript,R1,R2,R3,Label` with the aggregated label.
    pub fn to_csv(&self, rule: AggregationRule) -> Result<String> {
        let mut out = String::from("ID,Transcript,R1,R2,R3,Label\n");
        for r in &self.records {
            let transcript = r.transcript.replace('"', "\"\"");
            out.push_str(&format!(
                "{},\"{}\",{},{},{},{}\n",
                r.id,
                transcript,
                r.r1,
                r.r2,
                r.r3,
                r.label(rule)?
            ));
        }
        Ok(out)
    }
}

/// Cuts consecutive non-overlapping `duration`-second chunks; a trailing
/// partial chunk is dropped. Clips shorter than one chunk give an empty list.
pub fn segment_audio(clip: &AudioClip, duration_secs: f64) -> Result<Vec<AudioClip>> {
    if !(duration_secs > 0.0) {
        return Err(Error::invalid(format!("segment duration {duration_secs} must be positive")));
    }
    let chunk = (duration_secs * clip.sample_rate() as f64).round() as usize;
    if chunk == 0 {
        return Err(Error::invalid("segment shorter than one sample"));
    }
    clip.samples()
        .chunks_exact(chunk)
        .map(|c| AudioClip::new(c.to_vec(), clip.sample_rate()))
        .collect()
}
