use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("numeric failure: {message} (residual {residual:e})")]
    Numeric { message: String, residual: f64 },

    #[error("non-finite value at path {path}, step {step}")]
    NonFinitePath { path: usize, step: usize },

    #[error("overflow evaluating |f|^p for `{function}` (growth: {growth})")]
    Overflow { function: String, growth: String },

    #[error("no exact heat kernel available for {0}")]
    UnsupportedOracle(String),

    #[error("function `{function}` admits no quadrature reduction on {geometry}")]
    UnsupportedReduction { function: String, geometry: String },

    #[error("function `{function}` failed {class} certification (residual {residual:e})")]
    Classification {
        function: String,
        class: String,
        residual: f64,
    },

    #[error("[{claim}] {source}")]
    Claim {
        claim: String,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("cache format error: {0}")]
    Cache(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn numeric(msg: impl Into<String>, residual: f64) -> Self {
        Error::Numeric {
            message: msg.into(),
            residual,
        }
    }

    /// Attaches the claim id of the check that was running.
    pub fn in_claim(self, claim: &str) -> Self {
        match self {
            e @ Error::Claim { .. } => e,
            other => Error::Claim {
                claim: claim.to_string(),
                source: Box::new(other),
            },
        }
    }

    /// True for errors that come from a numerical routine rather than bad input.
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::Numeric { .. } | Error::NonFinitePath { .. } | Error::Overflow { .. } => true,
            Error::Claim { source, .. } => source.is_numeric(),
            _ => false,
        }
    }
}
