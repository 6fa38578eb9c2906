use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("malformed solution: {0}")]
    MalformedSolution(String),

    #[error("infeasible solution: {0}")]
    Infeasible(String),

    #[error("structurally infeasible: non-stackable item `{item}` has no eligible location")]
    StructurallyInfeasible { item: String },

    #[error("missing value for variable `{0}`")]
    MissingValue(String),

    #[error("value {value} out of domain for variable `{var}`")]
    OutOfDomain { var: String, value: String },

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("multi-placement: item `{0}` assigned to more than one location")]
    MultiPlacement(String),

    #[error("oracle-limit: {0}")]
    OracleLimit(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid weights: both weights are zero or one is negative")]
    InvalidWeights,

    #[error("no-initial-solution: initialization produced an empty population")]
    NoInitialSolution,

    #[error("generator-infeasible: no feasible instance after {0} resamples")]
    GeneratorInfeasible(usize),

    #[error("remote backend: {0}")]
    Remote(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}
