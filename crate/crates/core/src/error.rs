use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type. Data errors carry enough position information to
/// point at the offending row or column of the input file.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed CSV in {path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("row {row} has {got} fields, expected {expected}")]
    RaggedRow { row: usize, expected: usize, got: usize },

    #[error("non-numeric value {value:?} in feature column {column:?} at row {row}")]
    NonNumericCell { row: usize, column: String, value: String },

    #[error("missing value in column {column:?} at row {row}")]
    MissingValue { row: usize, column: String },

    #[error("label column {name:?} not found in header")]
    MissingLabelColumn { name: String },

    #[error("dataset needs at least 2 instances, got {got}")]
    TooFewInstances { got: usize },

    #[error("dataset needs at least 1 feature column, got {got}")]
    TooFewFeatures { got: usize },

    #[error("dataset is already scaled")]
    AlreadyScaled,

    #[error("dataset must be scaled to [0,1] first")]
    NotScaled,

    #[error("{primitive} expects {expected} inputs, got {got}")]
    ArityMismatch { primitive: String, expected: usize, got: usize },

    #[error("feature index {index} out of range for {num_features} features")]
    FeatureIndexOutOfRange { index: usize, num_features: usize },

    #[error("tree {line}: {message}")]
    TreeParse { line: usize, message: String },

    #[error("tree depth {depth} exceeds the maximum of {max}")]
    TreeTooDeep { depth: usize, max: usize },

    #[error("an individual must hold at least one tree")]
    EmptyIndividual,

    #[error("rank correlation needs at least 2 items, got {got}")]
    TooFewRanks { got: usize },

    #[error("component count {components} out of range [1, {num_features}]")]
    ComponentsOutOfRange { components: usize, num_features: usize },

    #[error("front point ({0}, {1}) lies outside the unit square")]
    PointOutsideUnitSquare(f64, f64),

    #[error("dataset has no labels; pass a label spec when loading")]
    LabelsMissing,

    #[error("neighbor cache {path}: {message}")]
    NeighborCache { path: PathBuf, message: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
