use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: {what} is {got_w}x{got_h}, expected {want_w}x{want_h}")]
    ShapeMismatch {
        what: &'static str,
        got_w: usize,
        got_h: usize,
        want_w: usize,
        want_h: usize,
    },

    #[error("degenerate projection: point lies on the camera plane (z = 0)")]
    DegenerateProjection,

    #[error("unknown dataset `{name}`; known: {}", known.join(", "))]
    UnknownDataset { name: String, known: Vec<&'static str> },

    #[error("dataset `{0}` has no reprojection threshold (covisibility is dataset-provided or FoV-approximated)")]
    NoThreshold(&'static str),

    #[error("evaluation mask selects no pixels")]
    EmptyMask,

    #[error("no pairs to report")]
    NoPairs,

    #[error("no camera sees any occupied voxel")]
    NoVisibleVoxels,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
}

impl Error {
    /// Short stable identifier used in machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid-input",
            Error::ShapeMismatch { .. } => "shape-mismatch",
            Error::DegenerateProjection => "degenerate-projection",
            Error::UnknownDataset { .. } => "unknown-dataset",
            Error::NoThreshold(_) => "no-threshold",
            Error::EmptyMask => "empty-mask",
            Error::NoPairs => "no-pairs",
            Error::NoVisibleVoxels => "no-visible-voxels",
            Error::Io { .. } => "io",
            Error::Format { .. } => "format",
            Error::Parse { .. } => "parse",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            msg: msg.into(),
        }
    }
}
