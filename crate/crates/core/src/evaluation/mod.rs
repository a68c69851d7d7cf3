//! Representation quality (triplet confusion matrices), the heuristic
//! behavior classifier, and embedding export.

mod classify;
mod export;
mod label;
pub mod synthetic;
mod triplet;

use std::path::PathBuf;

use thiserror::Error;

pub use classify::{
    classify_behavior, classify_features, features, Calibration, ClassifierFeatures, CALIBRATION_VERSION,
};
pub use export::{archive_rows, export_embeddings, parse_rows, render_rows, ExportRow, EXPORT_HEADER};
pub use label::Label;
pub use triplet::{triplet_confusion, ConfusionMatrix, LabeledBehavior, ENUMERATION_LIMIT, SAMPLED_TRIPLETS};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("need at least two labels, found {0}")]
    TooFewLabels(usize),
    #[error("mixed behavior vectors: {0}")]
    Mixed(String),
    #[error("nothing to export")]
    EmptyExport,
    #[error("calibration: {0}")]
    Calibration(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
