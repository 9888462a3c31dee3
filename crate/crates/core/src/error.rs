//! Error types shared across the crate.

use thiserror::Error;

/// Failure while decoding a PLY or OBJ mesh.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("malformed header: {0}")]
    Header(String),

    #[error("unsupported format variant: {0}")]
    UnsupportedFormat(String),

    /// The mesh has geometry but no per-vertex red/green/blue, so damage
    /// cannot be classified.
    #[error("colorless mesh: vertices carry no red/green/blue properties")]
    Colorless,

    #[error("face {face} has {arity} vertices; only triangles are supported")]
    FaceArity { face: usize, arity: usize },

    #[error("face {face} references vertex {index}, but the mesh has {vertex_count} vertices")]
    IndexOutOfRange {
        face: usize,
        index: i64,
        vertex_count: usize,
    },

    #[error("vertex {vertex} has a non-finite coordinate")]
    NonFinite { vertex: usize },

    #[error("unexpected end of data while reading {0}")]
    UnexpectedEof(String),

    #[error("invalid value at {location}: {message}")]
    InvalidValue { location: String, message: String },
}

impl ParseError {
    pub(crate) fn invalid(location: impl Into<String>, message: impl Into<String>) -> Self {
        ParseError::InvalidValue {
            location: location.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("mesh has no vertex colors; damage classification needs red/green/blue")]
    ColorlessMesh,

    #[error("face index {index} out of range (mesh has {face_count} faces)")]
    FaceOutOfRange { index: usize, face_count: usize },

    #[error("labelings refer to different meshes")]
    MeshMismatch,

    /// Ground truth is empty, so recall and error have no denominator.
    #[error("metrics undefined: ground truth is empty")]
    UndefinedMetrics,

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch { expected: (u32, u32), found: (u32, u32) },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("face list line {line}: {message}")]
    FaceList { line: usize, message: String },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("image: {0}")]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures caused by the filesystem or OS rather than by the
    /// content of the inputs.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io(_) => true,
            Error::Image(image::ImageError::IoError(_)) => true,
            Error::Csv(e) => matches!(e.kind(), csv::ErrorKind::Io(_)),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
