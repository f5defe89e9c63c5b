//! Feature matrix assembly, log-max normalization, the 80/20 label split and
//! the linear scoring model fitted by least squares.

mod matrix;
mod regression;
mod split;

pub use matrix::{
    assemble, normalize, parse_normalized_matrix, parse_normalization, parse_raw_matrix, Feature,
    NormalizedMatrix, NormalizedRow, Normalizer, RawMatrix, RawRow, FEATURE_COUNT,
};
pub use regression::{
    least_squares, parse_weights, score, train, train_on, training_rows, LeastSquaresFit, WeightVector,
    INTERCEPT_NAME, PREFERRED_LANGUAGE, RIDGE,
};
pub use split::{split_labels, TrainTestSplit, DEFAULT_TRAIN_FRACTION, MIN_LABELS};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("duplicate feature row for {0}")]
    DuplicateRow(String),
    #[error("too few labels: found {found}, need at least {required}")]
    TooFewLabels { found: usize, required: usize },
    #[error("train fraction {0} not in (0, 1)")]
    InvalidTrainFraction(f64),
    #[error("no feature row for labeled entity {0}")]
    MissingRow(String),
    #[error("no label for entity {0}")]
    MissingLabel(String),
    #[error("singular normal equations: {0}")]
    Singular(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}
