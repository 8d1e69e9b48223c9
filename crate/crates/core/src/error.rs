use thiserror::Error;

use crate::graph::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not symmetric (max |A - A^T| = {asymmetry:e})")]
    Asymmetric { asymmetry: f64 },

    #[error("matrix is not orthogonal (max |Q^T Q - I| = {defect:e})")]
    NotOrthogonal { defect: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),

    #[error("duplicate edge {0} -- {1}")]
    DuplicateEdge(String, String),

    #[error("self-loop at vertex `{0}`")]
    SelfLoop(String),

    #[error("vertices `{0}` and `{1}` are not adjacent")]
    NotAdjacent(String, String),

    #[error("empty path")]
    EmptyPath,

    #[error("vertex `{0}` has zero degree")]
    ZeroDegree(String),

    #[error("invalid connection graph: {0}")]
    InvalidGraph(ValidationReport),

    #[error("graph is not consistent; witness cycle {witness:?}")]
    Inconsistent { witness: Vec<String> },

    #[error("factor {index} does not satisfy the product precondition: {reason}")]
    ProductPrecondition { index: usize, reason: String },

    #[error("cartesian product needs at least one factor")]
    EmptyProduct,

    #[error("group element {element} is not an automorphism: {reason}")]
    NotAutomorphism { element: usize, reason: String },

    #[error("connection is not G-proper on the orbit pair containing `{0}` -- `{1}`")]
    NotProper(String, String),

    #[error("series for a = {a}, t = {t} did not converge within {k_max} terms")]
    SeriesTruncation { a: i64, t: f64, k_max: usize },

    #[error("lattice window [{lo}, {hi}] does not cover the requested path [{from}, {to}]")]
    WindowExceeded { lo: i64, hi: i64, from: i64, to: i64 },

    #[error("negative diffusion time t = {0}")]
    NegativeTime(f64),

    #[error("integer matrix is singular")]
    Singular,

    #[error("degenerate torus: {0}")]
    DegenerateTorus(String),

    #[error("route unsupported: {0}")]
    UnsupportedRoute(String),

    #[error("lattice-sum radius {radius} exceeds the cap {cap} at t = {t}; try t <= {suggested_t:.3}")]
    RadiusOverflow {
        t: f64,
        radius: usize,
        cap: usize,
        suggested_t: f64,
    },

    #[error("imaginary residue {imag:e} exceeds tolerance relative to real part {real:e}")]
    ImaginaryResidue { imag: f64, real: f64 },

    #[error("vertex function is identically zero")]
    ZeroFunction,

    #[error("truncation rank {k} out of range 1..={max}")]
    RankOutOfRange { k: usize, max: usize },

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
