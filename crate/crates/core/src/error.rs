use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {op} undefined at {value}{}", location_suffix(*.at))]
    Domain {
        op: &'static str,
        value: f64,
        /// Byte offset of the offending expression node, when known.
        at: Option<usize>,
    },

    #[error("derivative order {requested} exceeds the supported order {max}")]
    Order { requested: usize, max: usize },

    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("matrix is singular or not positive definite (min eigenvalue {min_eigenvalue:e}, max {max_eigenvalue:e})")]
    Singular {
        min_eigenvalue: f64,
        max_eigenvalue: f64,
    },

    #[error("matrix is not positive semi-definite (eigenvalue {eigenvalue:e} below -{tolerance:e})")]
    NotPsd { eigenvalue: f64, tolerance: f64 },

    #[error("Hessian of the potential is not positive definite; spectrum {spectrum:?}")]
    NotMetric { spectrum: Vec<f64> },

    #[error("route mismatch in {quantity}: residual {residual:e} exceeds {tolerance:e}")]
    RouteMismatch {
        quantity: &'static str,
        residual: f64,
        tolerance: f64,
    },

    #[error("zero tensor has no sectional curvature")]
    ZeroTensor,

    #[error("zero vector has no holomorphic sectional curvature")]
    ZeroVector,

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("kernel rank drifted from {expected} to {found} inside the stencil")]
    RankDrift { expected: usize, found: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite input")]
    NonFinite,

    #[error("invalid configuration: {0}")]
    Config(String),
}

fn location_suffix(at: Option<usize>) -> String {
    match at {
        Some(offset) => format!(" (expression offset {offset})"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn domain(op: &'static str, value: f64) -> Self {
        Error::Domain {
            op,
            value,
            at: None,
        }
    }

    /// Attaches an expression location to a domain error that has none yet.
    pub(crate) fn located(self, offset: usize) -> Self {
        match self {
            Error::Domain { op, value, at: None } => Error::Domain {
                op,
                value,
                at: Some(offset),
            },
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
