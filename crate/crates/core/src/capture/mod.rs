//! Rendering trajectories into greyscale frames, three-frame behavior
//! summaries, and the training dataset file format.

mod dataset;
pub mod pgm;
mod raster;
mod stack;

use std::path::PathBuf;

use thiserror::Error;

use crate::binio::FormatError;
use crate::sim::EpisodeError;

pub use dataset::{
    generate_dataset, read_dataset, write_dataset, DatasetHeader, DatasetReader, DatasetRecord, DatasetSummary,
    DatasetWriter, MAGIC as DATASET_MAGIC, VERSION as DATASET_VERSION,
};
pub use raster::{rasterize, Frame, SUPERSAMPLE};
pub use stack::{stack_indices, subsample, FrameStack, STACK_CHANNELS};

/// Frame size used for datasets and the learned encoder.
pub const DEFAULT_FRAME_SIZE: usize = 64;

#[derive(Debug, Error)]
pub enum CaptureError {
    #[error("frame {width}x{height} is smaller than 8x8")]
    FrameTooSmall { width: usize, height: usize },
    #[error("episode of {0} steps is too short to subsample (need at least 2)")]
    EpisodeTooShort(usize),
    #[error("dataset must contain at least one record")]
    EmptyDataset,
    #[error("{0} records exceed the format's u32 record count")]
    TooManyRecords(usize),
    #[error(transparent)]
    Episode(#[from] EpisodeError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Format {
        path: PathBuf,
        #[source]
        source: FormatError,
    },
}
