use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        what: String,
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("{matrix} is not symmetric positive definite (min eigenvalue {min_eigenvalue:e})")]
    NonSpd { matrix: String, min_eigenvalue: f64 },

    #[error("{matrix} is not symmetric (relative asymmetry {asymmetry:e})")]
    NonSymmetric { matrix: String, asymmetry: f64 },

    #[error("subsystem indices must be contiguous 1..={count}, found {found}")]
    NonContiguousIndex { count: usize, found: usize },

    #[error("coupling ({i},{j}) refers to an unknown subsystem")]
    UnknownSubsystem { i: usize, j: usize },

    #[error("innovation covariance is numerically singular (condition estimate {condition:e})")]
    SingularInnovation { condition: f64 },

    #[error("{matrix} is numerically singular (condition estimate {condition:e})")]
    SingularCovariance { matrix: String, condition: f64 },

    #[error("Riccati iteration did not converge after {iterations} iterations (last relative increment {last_increment:e})")]
    NoConvergence { iterations: usize, last_increment: f64 },

    #[error("belief at step {step} is {found}, expected {expected}")]
    WrongBeliefKind {
        step: usize,
        expected: &'static str,
        found: &'static str,
    },

    #[error("node {node} is missing broadcasts from neighbors {missing:?}")]
    MissingBroadcast { node: usize, missing: Vec<usize> },

    #[error("node {node} received a broadcast from {sender} for step {found}, expected step {expected}")]
    StaleBroadcast {
        node: usize,
        sender: usize,
        expected: usize,
        found: usize,
    },

    #[error("node {node} received more than one broadcast from {sender}")]
    DuplicateBroadcast { node: usize, sender: usize },

    #[error("node states are not aligned: {0}")]
    InconsistentStep(String),

    #[error("P - Q is not positive definite (min eigenvalue {min_eigenvalue:e})")]
    OrderViolation { min_eigenvalue: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("node {node}: {source}")]
    AtNode {
        node: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation error for {entity}{}: {rule}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Validation {
        entity: String,
        rule: String,
        line: Option<usize>,
    },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn dims(what: impl Into<String>, expected: (usize, usize), actual: (usize, usize)) -> Self {
        Error::DimensionMismatch {
            what: what.into(),
            expected,
            actual,
        }
    }

    pub(crate) fn at_step(self, step: usize) -> Self {
        Error::AtStep {
            step,
            source: Box::new(self),
        }
    }

    pub(crate) fn at_node(self, node: usize) -> Self {
        Error::AtNode {
            node,
            source: Box::new(self),
        }
    }

    /// Innermost error, with step/node context stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtStep { source, .. } | Error::AtNode { source, .. } => source.root(),
            other => other,
        }
    }

    /// Stable machine-readable name of the error kind.
    pub fn kind(&self) -> &'static str {
        match self.root() {
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::NonSpd { .. } => "NonSPD",
            Error::NonSymmetric { .. } => "NonSymmetric",
            Error::NonContiguousIndex { .. } => "NonContiguousIndex",
            Error::UnknownSubsystem { .. } => "UnknownSubsystem",
            Error::SingularInnovation { .. } => "SingularInnovation",
            Error::SingularCovariance { .. } => "SingularCovariance",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::WrongBeliefKind { .. } => "WrongBeliefKind",
            Error::MissingBroadcast { .. } => "MissingBroadcast",
            Error::StaleBroadcast { .. } => "StaleBroadcast",
            Error::DuplicateBroadcast { .. } => "DuplicateBroadcast",
            Error::InconsistentStep(_) => "InconsistentStep",
            Error::OrderViolation { .. } => "OrderViolation",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::Parse { .. } => "ParseError",
            Error::Validation { .. } => "ValidationError",
            Error::Io(_) => "IoError",
            Error::AtStep { .. } | Error::AtNode { .. } => unreachable!(),
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
