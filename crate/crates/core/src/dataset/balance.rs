use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::manifest::{AggregationRule, Manifest};
use crate::error::Result;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub total: usize,
    pub violent: usize,
    pub non_violent: usize,
    pub violent_fraction: f64,
    pub non_violent_fraction: f64,
}

impl ClassCounts {
    fn new(violent: usize, non_violent: usize) -> Self {
        let total = violent + non_violent;
        let frac = |c: usize| if total == 0 { 0.0 } else { c as f64 / total as f64 };
        Self {
            total,
            violent,
            non_violent,
            violent_fraction: frac(violent),
            non_violent_fraction: frac(non_violent),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassBalance {
    pub overall: ClassCounts,
    pub per_source: BTreeMap<String, ClassCounts>,
    pub warnings: Vec<String>,
}

/// Class totals, overall and per `source` (records without one count as `unknown`).
pub fn class_balance(manifest: &Manifest, rule: AggregationRule, threshold: f64) -> Result<ClassBalance> {
    let mut per: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let (mut v, mut nv) = (0, 0);
    for r in &manifest.records {
        let entry = per
            .entry(r.source.clone().unwrap_or_else(|| "unknown".into()))
            .or_default();
        if r.is_violent(rule, threshold)? {
            v += 1;
            entry.0 += 1;
        } else {
            nv += 1;
            entry.1 += 1;
        }
    }
    let overall = ClassCounts::new(v, nv);
    let per_source: BTreeMap<_, _> = per
        .into_iter()
        .map(|(k, (a, b))| (k, ClassCounts::new(a, b)))
        .collect();

    let mut warnings = Vec::new();
    if v == 0 {
        warnings.push("no violent segments".into());
    }
    if nv == 0 {
        warnings.push("no non-violent segments".into());
    }
    let summed: usize = per_source.values().map(|c| c.total).sum();
    if summed != overall.total {
        warnings.push(format!("per-source totals sum to {summed}, overall is {}", overall.total));
    }
    Ok(ClassBalance {
        overall,
        per_source,
        warnings,
    })
}

/// Externally reported counts for one source collection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeclaredSource {
    pub name: String,
    pub total: usize,
    pub violent: usize,
    pub non_violent: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeclaredCounts {
    pub sources: Vec<DeclaredSource>,
    pub total: usize,
    pub violent: usize,
    pub non_violent: usize,
}

/// Lists every arithmetic inconsistency in a set of reported counts.
pub fn check_declared_counts(d: &DeclaredCounts) -> Vec<String> {
    let mut issues = Vec::new();
    for s in &d.sources {
        if s.violent + s.non_violent != s.total {
            issues.push(format!(
                "{}: {} violent + {} non-violent = {} != {}",
                s.name,
                s.violent,
                s.non_violent,
                s.violent + s.non_violent,
                s.total
            ));
        }
    }
    let mut check = |what: &str, sum: usize, declared: usize| {
        if sum != declared {
            issues.push(format!("{what}: sources sum to {sum}, declared {declared}"));
        }
    };
    check("total", d.sources.iter().map(|s| s.total).sum(), d.total);
    check("violent", d.sources.iter().map(|s| s.violent).sum(), d.violent);
    check("non-violent", d.sources.iter().map(|s| s.non_violent).sum(), d.non_violent);
    if d.violent + d.non_violent != d.total {
        issues.push(format!(
            "overall: {} + {} != {}",
            d.violent, d.non_violent, d.total
        ));
    }
    issues
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub threshold: f64,
    pub violent: usize,
    pub non_violent: usize,
}

/// Binary class counts for each candidate threshold.
pub fn threshold_sweep(manifest: &Manifest, rule: AggregationRule, thresholds: &[f64]) -> Result<Vec<SweepRow>> {
    let labels: Vec<f64> = manifest
        .records
        .iter()
        .map(|r| r.label(rule))
        .collect::<Result<_>>()?;
    Ok(thresholds
        .iter()
        .map(|&t| {
            let violent = labels.iter().filter(|&&l| l >= t).count();
            SweepRow {
                threshold: t,
                violent,
                non_violent: labels.len() - violent,
            }
        })
        .collect())
}
