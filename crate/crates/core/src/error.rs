use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown function `{name}` at offset {offset}")]
    UnknownFunction { name: String, offset: usize },

    #[error("unbound identifier `{0}`")]
    UnboundIdentifier(String),

    #[error("{function} is undefined at {value}")]
    Domain { function: &'static str, value: f64 },

    #[error("division by a quantity that vanishes at the point")]
    DivisionByZero,

    #[error("variable index {index} out of range for {nvars} variables")]
    VariableIndex { index: usize, nvars: usize },

    #[error("derivative of order {requested} requested from a jet of order {order}")]
    OrderExceeded { requested: usize, order: usize },

    #[error("line {line}: {message}")]
    MetricFile { line: usize, message: String },

    #[error("metric is singular at {point:?}")]
    SingularMetric { point: Vec<f64> },

    #[error("expected a {expected}-dimensional metric, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("{what} vanishes at {point:?}")]
    SingularPoint { what: String, point: Vec<f64> },

    #[error("missing field `{0}`")]
    MissingField(String),

    #[error("missing parameter `{0}`")]
    MissingParam(String),

    #[error("{0}")]
    Invalid(String),

    #[error("sample plan produced no admissible points")]
    EmptyPlan,

    #[error("every sampled point was singular")]
    AllSingular,

    #[error("unknown corpus case `{0}`")]
    UnknownCase(String),

    #[error("unknown residual system `{0}`")]
    UnknownSystem(String),

    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    /// Errors caused by malformed input rather than by evaluation.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Syntax { .. }
                | Error::UnknownFunction { .. }
                | Error::MetricFile { .. }
                | Error::UnknownCase(_)
                | Error::UnknownSystem(_)
                | Error::Io { .. }
                | Error::Invalid(_)
        )
    }
}
