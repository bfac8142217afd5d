use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("image too small: {width}x{height}, need at least {min}x{min}")]
    ImageTooSmall { width: usize, height: usize, min: usize },

    #[error("touch point set is empty")]
    EmptyTouchSet,

    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("scene has neither vision points nor touch patches")]
    EmptyScene,

    #[error("mesh has no triangles")]
    MeshEmpty,

    #[error("no sensor ray hit the surface")]
    NoContact,

    #[error("missing file: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("malformed manifest {}: {detail}", .path.display())]
    MalformedManifest { path: PathBuf, detail: String },

    #[error("malformed PLY: {0}")]
    MalformedPly(String),

    #[error("unsupported PLY format: {0}")]
    UnsupportedVersion(String),

    #[error("malformed JSON: {0}")]
    MalformedJson(String),

    #[error("malformed OBJ: {0}")]
    MalformedObj(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("non-finite loss at iteration {0}")]
    NonFiniteLoss(usize),

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("image codec: {0}")]
    Image(#[from] image::ImageError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
