//! Segment manifest, reviewer score aggregation and label statistics.

mod anova;
mod balance;
mod manifest;

pub use anova::{anova_oneway, AnovaResult};
pub use balance::{
    check_declared_counts, class_balance, threshold_sweep, ClassBalance, ClassCounts,
    DeclaredCounts, DeclaredSource, SweepRow,
};
pub use manifest::{
    aggregate_scores, binarize, segment_audio, AggregationRule, Manifest, SegmentRecord,
    MAX_SCORE, SEGMENT_SECONDS,
};
