use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("curve parameter {0} outside [0, 1]")]
    ParameterDomain(f64),

    #[error("invalid curve: {0}")]
    Curve(String),

    #[error("invalid problem: {0}")]
    Problem(String),

    #[error("unknown gallery entry `{0}`")]
    UnknownGallery(String),

    #[error("gallery parameter `{name}` = {value} out of range: {reason}")]
    GalleryParam {
        name: String,
        value: f64,
        reason: String,
    },

    #[error("mesh: {0}")]
    Mesh(String),

    #[error("element {element}: non-positive Jacobian determinant {det:e}")]
    Jacobian { element: usize, det: f64 },

    #[error("boundary edge {0} carries no arc tag")]
    UntaggedEdge(usize),

    #[error("singular reduced system: {0}")]
    Singular(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("point ({0}, {1}) lies outside the mesh")]
    Outside(f64, f64),

    #[error("steepest-descent trace stalled at ({x}, {y}) with |grad u| = {grad:e}")]
    CriticalPoint { x: f64, y: f64, grad: f64 },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
