use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("vertex {0} has no incident face with nonzero area, normal is undefined")]
    ZeroNormal(usize),

    #[error("OBJ line {line}: {msg}")]
    ObjParse { line: usize, msg: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("no isosurface at threshold {0}")]
    NoIsosurface(f64),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("checkpoint version {found} is not supported (expected {expected})")]
    CheckpointVersion { found: u32, expected: u32 },

    #[error("self-intersecting body: {0}")]
    SelfIntersection(String),

    #[error("body out of frame: {0}")]
    OutOfFrame(String),

    #[error("degenerate anchor points: {0}")]
    DegenerateAnchors(String),

    #[error("format: {0}")]
    Format(String),

    #[error("item {index}: {source}")]
    Item {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// Strips any [`Error::Item`] wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Item { source, .. } => source.root(),
            other => other,
        }
    }
}
