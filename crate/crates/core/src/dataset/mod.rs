//! Ingestion, encoding and partitioning of the screening table.

mod encode;
mod raw;
mod schema;
mod split;
pub mod surrogate;

pub use encode::{
    default_binary_tokens, encode, encode_with, ColumnEncoding, EncodedDataset, FeatureEncoder,
    NumericScaling, ScalingParams,
};
pub use raw::{parse_csv, parse_reader, parse_unlabeled_reader, RawTable};
pub use schema::{Column, ColumnKind, Schema, DEFAULT_MISSING_TOKEN};
pub use split::{split, split_sizes, Subset};

use serde::Serialize;

/// Instance and class counts of one subset, before and after dropping rows
/// with missing values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubsetSummary {
    pub subset: Subset,
    pub n: usize,
    pub n_positive: usize,
    pub n_negative: usize,
    pub n_missing_dropped: usize,
}

/// Per-subset counts for training, selection and testing.
pub fn summarize(ds: &EncodedDataset) -> Vec<SubsetSummary> {
    Subset::USED
        .iter()
        .map(|&s| {
            let (n_negative, n_positive) = ds.class_counts(s);
            SubsetSummary {
                subset: s,
                n: n_negative + n_positive,
                n_positive,
                n_negative,
                n_missing_dropped: ds.dropped.iter().filter(|(_, orig)| *orig == s).count(),
            }
        })
        .collect()
}
