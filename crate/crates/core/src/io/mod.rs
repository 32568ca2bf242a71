//! Dataset ingestion, model files, and prediction export.

mod dataset;
mod model_file;
mod predictions;

use std::path::Path;

use thiserror::Error;

pub use dataset::{
    default_class_names, load_csv, load_csv_with_classes, read_csv, write_csv, write_csv_to, FeatureDataset,
    LABEL_COLUMN, UNLABELED,
};
pub use model_file::{
    from_artifact, load_model, read_model, save_model, to_artifact, write_model, ArtifactConfig, ModelArtifact,
    PrototypeRecord, TrainingMeta, FORMAT_VERSION,
};
pub use predictions::{export_predictions, format_real, write_predictions, PredictionSummary, PREDICTION_HEADER};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("file is empty")]
    EmptyFile,
    #[error("missing or malformed header (expected f0,f1,...,f{{d-1}},label)")]
    MissingHeader,
    #[error("row {row}: expected {expected} fields, got {got}")]
    RaggedRow { row: usize, expected: usize, got: usize },
    #[error("row {row}: column {column} is not a number ({value:?})")]
    NonNumericFeature { row: usize, column: usize, value: String },
    #[error("row {row}: column {column} is not finite")]
    NonFiniteFeature { row: usize, column: usize },
    #[error("row {row}: unknown label {label:?}")]
    UnknownLabel { row: usize, label: String },
    #[error("row {row}: instance is unlabeled")]
    UnlabeledRow { row: usize },
    #[error("row {row}: {message}")]
    Csv { row: usize, message: String },
    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u64),
    #[error("corrupt model field: {0}")]
    CorruptField(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("write failed: {0}")]
    WriteFailure(String),
}

impl DataError {
    pub(crate) fn io(path: &Path, err: std::io::Error) -> Self {
        DataError::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }

    pub(crate) fn write(err: impl std::fmt::Display) -> Self {
        DataError::WriteFailure(err.to_string())
    }
}
