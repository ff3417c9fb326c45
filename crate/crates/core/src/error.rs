use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library can report.
///
/// Variants are grouped by the exit-code class the CLI maps them to
/// (see [`Error::exit_code`]).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("decay exponent alpha = {alpha} must exceed the lattice dimension {dim}")]
    NotSummable { alpha: f64, dim: usize },
    #[error("no amplitude on the search grid satisfies both decay-function properties")]
    NoValidAmplitude,
    #[error("window mismatch: {0}")]
    WindowMismatch(String),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("no convergence after {iterations} iterations (last increment {last:e})")]
    NoConvergence { iterations: usize, last: f64 },
    #[error("slot {slot} out of range for arity {arity}")]
    SlotOutOfRange { slot: usize, arity: usize },
    #[error("arity mismatch: expected {expected}, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("linear part is not invertible: {0}")]
    NotInvertible(String),
    #[error("operator is numerically singular (condition estimate {condition:e})")]
    Singular { condition: f64 },
    #[error("norm overflow at power {power}")]
    Overflow { power: usize },
    #[error("contour quadrature did not settle after {nodes} nodes (last change {last:e})")]
    QuadratureStalled { nodes: usize, last: f64 },
    #[error("contour passes within {distance:e} of the spectrum (required margin {margin:e})")]
    ContourTooClose { distance: f64, margin: f64 },
    #[error("leading band coefficient a0 must be nonzero")]
    ZeroLeadingCoefficient,
    #[error("spectrum is not inside the punctured unit disc: |lambda| = {modulus}")]
    NotContraction { modulus: f64 },
    #[error("order {order} is resonant (smallest gap {gap:e})")]
    ResonantOrder { order: usize, gap: f64 },
    #[error("method not applicable: {0}")]
    MethodInapplicable(String),
    #[error("problem too large: {entries} entries exceeds limit {limit}")]
    TooLarge { entries: f64, limit: usize },
    #[error("iterate left the certified domain at step {step} (norm {norm:e})")]
    DomainEscape { step: usize, norm: f64 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("schema error: {}", .0.join("; "))]
    Schema(Vec<String>),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Short machine-readable tag used in JSON reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NotSummable { .. } => "NotSummable",
            Error::NoValidAmplitude => "NoValidAmplitude",
            Error::WindowMismatch(_) => "WindowMismatch",
            Error::PreconditionViolated(_) => "PreconditionViolated",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::SlotOutOfRange { .. } => "SlotOutOfRange",
            Error::ArityMismatch { .. } => "ArityMismatch",
            Error::NotInvertible(_) => "NotInvertible",
            Error::Singular { .. } => "Singular",
            Error::Overflow { .. } => "Overflow",
            Error::QuadratureStalled { .. } => "QuadratureStalled",
            Error::ContourTooClose { .. } => "ContourTooClose",
            Error::ZeroLeadingCoefficient => "ZeroLeadingCoefficient",
            Error::NotContraction { .. } => "NotContraction",
            Error::ResonantOrder { .. } => "ResonantOrder",
            Error::MethodInapplicable(_) => "MethodInapplicable",
            Error::TooLarge { .. } => "TooLarge",
            Error::DomainEscape { .. } => "DomainEscape",
            Error::Parse(_) => "ParseError",
            Error::Schema(_) => "SchemaError",
            Error::Io(_) => "IoError",
        }
    }

    /// Process exit code: 2 config, 3 precondition, 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) | Error::Schema(_) | Error::Io(_) => 2,
            Error::NotSummable { .. }
            | Error::WindowMismatch(_)
            | Error::PreconditionViolated(_)
            | Error::SlotOutOfRange { .. }
            | Error::ArityMismatch { .. }
            | Error::NotInvertible(_)
            | Error::ContourTooClose { .. }
            | Error::ZeroLeadingCoefficient
            | Error::NotContraction { .. }
            | Error::ResonantOrder { .. }
            | Error::MethodInapplicable(_)
            | Error::TooLarge { .. } => 3,
            Error::NoValidAmplitude
            | Error::NoConvergence { .. }
            | Error::Singular { .. }
            | Error::Overflow { .. }
            | Error::QuadratureStalled { .. }
            | Error::DomainEscape { .. } => 4,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
