use thiserror::Error;

/// Which objective produced a non-finite loss: the MLE log-likelihood or one
/// half of the adversarial pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Actor {
    Likelihood,
    Generator,
    Discriminator,
}

impl std::fmt::Display for Actor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Actor::Likelihood => f.write_str("likelihood"),
            Actor::Generator => f.write_str("generator"),
            Actor::Discriminator => f.write_str("discriminator"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),

    #[error("not Hermitian: max |m_ij - conj(m_ji)| = {violation:e} exceeds {tol:e}")]
    NonHermitian { violation: f64, tol: f64 },

    #[error("not positive semidefinite: min eigenvalue {min_eigenvalue:e} below -{tol:e}")]
    NotPositive { min_eigenvalue: f64, tol: f64 },

    #[error("trace is {trace}, |trace - 1| exceeds {tol:e}")]
    BadTrace { trace: f64, tol: f64 },

    #[error("Cholesky factor is degenerate: Tr(TT†) = {0:e}")]
    DegenerateT(f64),

    #[error("Cholesky factor has nonzero entries above the diagonal or a complex diagonal")]
    NotLowerTriangular,

    #[error("Cholesky factorization failed for the regularized matrix")]
    FactorizationFailed,

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("parameter `{name}` must be non-negative, got {value}")]
    NegativeParameter { name: &'static str, value: f64 },

    #[error("odd cat state with |alpha| = {0:e} has vanishing norm")]
    DegenerateCat(f64),

    #[error("dimension {dim} too small, need more than {required}")]
    DimensionTooSmall { dim: usize, required: usize },

    #[error("amplitude vector has zero norm")]
    ZeroVector,

    #[error("rank {rank} invalid for dimension {dim}")]
    BadRank { rank: usize, dim: usize },

    #[error("parameter range for `{0}` is empty or inverted")]
    EmptyRange(String),

    #[error("grid must be strictly increasing, uniformly spaced and have at least 2 points")]
    NonMonotonicGrid,

    #[error("probability vector has no positive mass")]
    ZeroMass,

    #[error("operation requires a {expected} measurement set")]
    WrongKind { expected: &'static str },

    #[error("zeta must lie in [0, 1], got {0}")]
    BadZeta(f64),

    #[error("translation fraction must lie in [-1, 1], got {0}")]
    BadFraction(f64),

    #[error("salt/pepper proportions invalid: salt {salt}, pepper {pepper}")]
    BadProportion { salt: f64, pepper: f64 },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite {actor} loss at epoch {epoch}")]
    NonFiniteLoss { actor: Actor, epoch: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("format version mismatch: file has {found}, expected {expected}")]
    FormatVersionMismatch { found: u32, expected: u32 },

    #[error("checksum mismatch in record {0}")]
    ChecksumMismatch(usize),

    #[error("record {index}: {source}")]
    Record {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Variant name, used by the CLI on stderr.
    pub fn name(&self) -> &'static str {
        match self {
            Error::NotSquare(..) => "NotSquare",
            Error::NonHermitian { .. } => "NonHermitian",
            Error::NotPositive { .. } => "NotPositive",
            Error::BadTrace { .. } => "BadTrace",
            Error::DegenerateT(_) => "DegenerateT",
            Error::NotLowerTriangular => "NotLowerTriangular",
            Error::FactorizationFailed => "FactorizationFailed",
            Error::DimensionMismatch(..) => "DimensionMismatch",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::NegativeParameter { .. } => "NegativeParameter",
            Error::DegenerateCat(_) => "DegenerateCat",
            Error::DimensionTooSmall { .. } => "DimensionTooSmall",
            Error::ZeroVector => "ZeroVector",
            Error::BadRank { .. } => "BadRank",
            Error::EmptyRange(_) => "EmptyRange",
            Error::NonMonotonicGrid => "NonMonotonicGrid",
            Error::ZeroMass => "ZeroMass",
            Error::WrongKind { .. } => "WrongKind",
            Error::BadZeta(_) => "BadZeta",
            Error::BadFraction(_) => "BadFraction",
            Error::BadProportion { .. } => "BadProportion",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::NonFiniteLoss { .. } => "NonFiniteLoss",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::Parse(_) => "Parse",
            Error::Io(_) => "IoError",
            Error::Json(_) => "JsonError",
            Error::FormatVersionMismatch { .. } => "FormatVersionMismatch",
            Error::ChecksumMismatch(_) => "ChecksumMismatch",
            Error::Record { source, .. } => source.name(),
        }
    }

    /// True for failures of the numerical kind (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NonFiniteLoss { .. } | Error::DegenerateT(_) | Error::FactorizationFailed => true,
            Error::Record { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
