//! Novelty search over controller genomes and k-medoids selection of
//! representative behaviors.

mod archive;
mod config;
mod ga;
mod kmedoids;
mod novelty;
mod run;

use std::path::PathBuf;

use thiserror::Error;

use crate::behavior::{Backend, EmbedError};
use crate::binio::FormatError;
use crate::capture::CaptureError;
use crate::sim::EpisodeError;

pub use archive::{
    ArchiveEntry, NoveltyArchive, INDEX_HEADER as ARCHIVE_INDEX_HEADER, MAGIC as ARCHIVE_MAGIC,
    VERSION as ARCHIVE_VERSION,
};
pub use config::{SearchConfig, SeedPolicy};
pub use ga::{evolve_generation, single_point_crossover, tournament};
pub use kmedoids::{assign, k_medoids, k_medoids_with, Clustering, DistanceMatrix, DEFAULT_RESTARTS};
pub use novelty::{mean_of_k_smallest, novelty, novelty_among};
pub use run::{evaluate, run_discovery, run_discovery_with, EvalBackend, GenerationSummary};

#[derive(Debug, Error)]
pub enum DiscoveryError {
    #[error("novelty of a behavior against an empty archive is undefined")]
    EmptyArchive,
    #[error("invalid search configuration: {0}")]
    Config(String),
    #[error("vector dimension {found} does not match {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("backend mismatch: {0} vs {1}")]
    Backend(Backend, Backend),
    #[error("behavior vector {index} has a non-finite component")]
    NonFinite { index: usize },
    #[error("k = {k} outside 1..={n}")]
    KOutOfRange { k: usize, n: usize },
    #[error("population has {genomes} genomes and {scores} scores, expected {expected}")]
    PopulationSize { expected: usize, genomes: usize, scores: usize },
    #[error(transparent)]
    Episode(#[from] EpisodeError),
    #[error(transparent)]
    Capture(#[from] CaptureError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
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

/// A discovery run that stopped early. `partial` holds every generation
/// completed before the failure.
#[derive(Debug, Error)]
#[error("discovery failed in generation {generation}{}: {source}", genome.map(|g| format!(", genome {g}")).unwrap_or_default())]
pub struct RunError {
    pub generation: usize,
    pub genome: Option<usize>,
    #[source]
    pub source: DiscoveryError,
    pub partial: Box<NoveltyArchive>,
}
