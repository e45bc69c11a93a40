use num_complex::Complex64;
use thiserror::Error;

/// Which diagonal corner of a block-triangular matrix failed to invert.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Corner {
    /// `pTp`
    Upper,
    /// `(1-p)T(1-p)`
    Lower,
}

impl std::fmt::Display for Corner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Corner::Upper => write!(f, "pTp"),
            Corner::Lower => write!(f, "(1-p)T(1-p)"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix has a non-finite entry at ({row}, {col})")]
    NotFinite { row: usize, col: usize },

    #[error("matrix is singular to working precision (pivot {pivot:e} at column {column})")]
    SingularMatrix { column: usize, pivot: f64 },

    #[error("QR iteration did not converge after {sweeps} sweeps")]
    NonConvergence { sweeps: usize },

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("division by a constant that evaluates to zero (byte {offset})")]
    DivisionByZeroConstant { offset: usize },

    #[error("denominator at byte {offset} is not a rational function of z")]
    NonRationalDenominator { offset: usize },

    #[error("function is singular at {point}")]
    SingularityHit { point: Complex64 },

    #[error("no valid contour: {reason}; supply a contour manually with --contour")]
    NoValidContour { reason: String },

    #[error("invalid contour: {reason}")]
    InvalidContour { reason: String },

    #[error("resolvent is singular at node {node} (node grazes the spectrum); perturb the radius")]
    SingularResolvent { node: Complex64 },

    #[error("eigenvalue cluster of size {size} exceeds 8 for a non-polynomial function")]
    ClusterTooLarge { size: usize },

    #[error("matrix is not normal (commutator residual {residual:e})")]
    NotNormal { residual: f64 },

    #[error("projection is not invariant (residual {residual:e})")]
    NotInvariant { residual: f64 },

    #[error("corner {corner} is singular")]
    SingularCorner { corner: Corner },

    #[error("0 lies in the support of the Brown measure (min |eigenvalue| = {min_modulus:e})")]
    ZeroInSupport { min_modulus: f64 },

    #[error("operators do not commute (residual {residual:e})")]
    NotCommuting { residual: f64 },

    #[error("operator is not nilpotent (spectral radius {spectral_radius:e})")]
    NotNilpotent { spectral_radius: f64 },

    #[error("projection must differ from 0 and 1")]
    TrivialProjection,

    #[error("invalid projection: {reason}")]
    InvalidProjection { reason: String },

    #[error("invalid flag: {reason}")]
    InvalidFlag { reason: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
