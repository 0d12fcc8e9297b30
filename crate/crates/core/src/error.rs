use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The model description violates an invariant of the catalog.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// An argument lies outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// The allowed draw-down `t - xi(t)` fell below the safety margin.
    #[error("draw-down function degenerate at t = {t}: gap {gap:e} below margin {margin:e}")]
    DrawdownDegenerate { t: f64, gap: f64, margin: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Laplace inversion could not reach the requested accuracy.
    #[error("inversion accuracy {estimate:e} at x = {x} exceeds {limit:e}")]
    InversionAccuracy { x: f64, estimate: f64, limit: f64 },

    #[error("root finding did not converge after {iterations} iterations: {context}")]
    RootFinding { iterations: usize, context: String },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("only {found} records of kind {kind}, need at least {required}")]
    InsufficientEvents {
        kind: String,
        found: usize,
        required: usize,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Stable machine-readable identifier, used by the CLI error object.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidModel(_) => "invalid-model",
            Error::Domain(_) => "domain",
            Error::DrawdownDegenerate { .. } => "drawdown-degenerate",
            Error::Unsupported(_) => "unsupported",
            Error::Precondition(_) => "precondition",
            Error::InversionAccuracy { .. } => "inversion-accuracy",
            Error::RootFinding { .. } => "root-finding",
            Error::Quadrature(_) => "quadrature",
            Error::InsufficientEvents { .. } => "insufficient-events",
            Error::Config(_) => "config",
            Error::Parse(_) => "parse",
        }
    }

    /// True for failures of a numerical method, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::InversionAccuracy { .. }
                | Error::RootFinding { .. }
                | Error::Quadrature(_)
                | Error::InsufficientEvents { .. }
        )
    }
}
