use std::path::{Path, PathBuf};

use thiserror::Error;

use swarmdisc::behavior::EmbedError;
use swarmdisc::capture::CaptureError;
use swarmdisc::discovery::{DiscoveryError, RunError};
use swarmdisc::evaluation::EvalError;
use swarmdisc::sim::{EpisodeError, ProfileError};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const OUTPUT: i32 = 3;
    pub const INPUT_FORMAT: i32 = 4;
    pub const EMBEDDING: i32 = 5;
}

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, invalid configuration or a missing input file.
    #[error("{0}")]
    Usage(String),
    #[error("cannot write {}: {source}", path.display())]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    InputFormat(String),
    #[error("embedding backend: {0}")]
    Embedding(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Output { .. } => exit::OUTPUT,
            CliError::InputFormat(_) => exit::INPUT_FORMAT,
            CliError::Embedding(_) => exit::EMBEDDING,
            CliError::Failed(_) => exit::FAILURE,
        }
    }

    pub fn output(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
        move |source| CliError::Output {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }
}

/// Opening a file that is not there is a usage error; other read failures
/// are treated as unreadable input.
fn input_io(path: &Path, source: &std::io::Error) -> CliError {
    if source.kind() == std::io::ErrorKind::NotFound {
        CliError::Usage(format!("{}: file not found", path.display()))
    } else {
        CliError::InputFormat(format!("{}: {source}", path.display()))
    }
}

impl From<ProfileError> for CliError {
    fn from(e: ProfileError) -> Self {
        match &e {
            ProfileError::Io { source, path } => input_io(Path::new(path), source),
            ProfileError::Malformed { .. }
            | ProfileError::UnknownKey { line: 1.., .. }
            | ProfileError::DuplicateKey { .. }
            | ProfileError::MissingKey(_) => CliError::InputFormat(format!("profile: {e}")),
            _ => CliError::Usage(format!("profile: {e}")),
        }
    }
}

impl From<EpisodeError> for CliError {
    fn from(e: EpisodeError) -> Self {
        match e {
            EpisodeError::Profile(p) => p.into(),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<EmbedError> for CliError {
    fn from(e: EmbedError) -> Self {
        CliError::Embedding(e.to_string())
    }
}

impl From<CaptureError> for CliError {
    fn from(e: CaptureError) -> Self {
        match e {
            CaptureError::Io { path, source } => CliError::Output { path, source },
            CaptureError::Format { path, source } => CliError::InputFormat(format!("{}: {source}", path.display())),
            CaptureError::Episode(ep) => ep.into(),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<DiscoveryError> for CliError {
    fn from(e: DiscoveryError) -> Self {
        match e {
            DiscoveryError::Embed(inner) => inner.into(),
            DiscoveryError::Episode(inner) => inner.into(),
            DiscoveryError::Capture(inner) => inner.into(),
            DiscoveryError::Io { path, source } => CliError::Output { path, source },
            DiscoveryError::Format { path, source } => {
                CliError::InputFormat(format!("{}: {source}", path.display()))
            }
            DiscoveryError::Config(_) | DiscoveryError::KOutOfRange { .. } => CliError::Usage(e.to_string()),
            other => CliError::Failed(other.to_string()),
        }
    }
}

impl From<RunError> for CliError {
    fn from(e: RunError) -> Self {
        let msg = e.to_string();
        match CliError::from(e.source) {
            CliError::Embedding(_) => CliError::Embedding(msg),
            CliError::Usage(_) => CliError::Usage(msg),
            CliError::InputFormat(_) => CliError::InputFormat(msg),
            CliError::Output { path, source } => CliError::Output { path, source },
            CliError::Failed(_) => CliError::Failed(msg),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Io { path, source } => CliError::Output { path, source },
            EvalError::Parse(_) | EvalError::Mixed(_) => CliError::InputFormat(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

/// Maps a failure to read `path` into the matching error class.
pub fn read_error(path: &Path, source: std::io::Error) -> CliError {
    input_io(path, &source)
}
