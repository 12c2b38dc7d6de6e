use std::path::PathBuf;

/// Errors raised by the model-reduction toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("invalid material: {0}")]
    Material(String),

    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("element {element} inverted (det F = {det_f:.3e})")]
    ElementInversion { element: usize, det_f: f64 },

    #[error("singular matrix: zero pivot at row {row}")]
    Singular { row: usize },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("eigen solver did not converge: {0}")]
    EigenNonConvergence(String),

    #[error("Newton iteration diverged after reaching load fraction {last_converged:.6}")]
    NewtonDivergence { last_converged: f64 },

    #[error("time step failed at t = {time:.6e} s after {bisections} bisections")]
    TimeStepFailure { time: f64, bisections: usize },

    #[error("rank deficient polynomial term x^{a} y^{b} on the interface node set")]
    RankDeficientTerm { a: usize, b: usize },

    #[error("regression matrix is rank deficient in row {row}")]
    RegressorRankDeficient { row: usize },

    #[error("interface basis mismatch: {0}")]
    InterfaceMismatch(String),

    #[error("unpaired contact node {0}")]
    UnpairedContactNode(usize),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("unstable linearization: eigenvalue {0:.3e} < 0")]
    UnstableLinearization(f64),

    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
