use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the handcloud library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty point cloud")]
    EmptyCloud,

    #[error("non-finite coordinate at point {index}")]
    NonFinitePoint { index: usize },

    #[error("label count {labels} does not match point count {points}")]
    LabelLengthMismatch { points: usize, labels: usize },

    #[error("point cloud has no component labels")]
    MissingLabels,

    #[error("EMD requires equal cardinality (got {left} and {right})")]
    CardinalityMismatch { left: usize, right: usize },

    #[error("component {component} has {gt} ground-truth points but {pred} predicted points")]
    ComponentCardinalityMismatch {
        component: crate::geometry::ComponentId,
        gt: usize,
        pred: usize,
    },

    #[error("cost matrix is not square ({rows}x{cols})")]
    NonSquareMatrix { rows: usize, cols: usize },

    #[error("cost matrix entry ({row}, {col}) is not finite")]
    NonFiniteCost { row: usize, col: usize },

    #[error("invalid rigid transform: {0}")]
    InvalidTransform(String),

    #[error("invalid camera: {0}")]
    InvalidCamera(String),

    #[error("cloud outside frustum")]
    OutsideFrustum,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("component {0} is absent")]
    MissingComponent(crate::geometry::ComponentId),

    #[error("depth map has no valid pixels")]
    NoValidPixels,

    #[error("cloud has {points} points but outlier filtering needs more than k = {k}")]
    TooFewPoints { points: usize, k: usize },

    #[error("latent dimension {got} does not match expected {expected}")]
    LatentDimension { expected: usize, got: usize },

    #[error("training diverged at epoch {epoch}: {detail}")]
    Diverged { epoch: usize, detail: String },

    #[error("{path}: {location}: {message}")]
    Parse {
        path: PathBuf,
        location: String,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn parse(path: impl Into<PathBuf>, location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            location: location.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by malformed or unreadable input data.
    pub fn is_data_error(&self) -> bool {
        matches!(self, Error::Parse { .. } | Error::Io { .. })
    }

    /// True for numerical failures (divergence, NaN).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Diverged { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
