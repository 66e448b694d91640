use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),

    #[error("variable `{variable}` has no state `{state}`")]
    UnknownState { variable: String, state: String },

    #[error("invalid domain for `{variable}`: {reason}")]
    InvalidDomain { variable: String, reason: String },

    #[error("arcs contain a directed cycle through `{0}`")]
    Cycle(String),

    #[error("duplicate arc {0} -> {1}")]
    DuplicateArc(String, String),

    #[error("parent configuration for `{variable}` has {got} states, expected {expected}")]
    ArityMismatch {
        variable: String,
        expected: usize,
        got: usize,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("row {variable}|{config} sums to {sum}, not 1")]
    RowNotNormalized {
        variable: String,
        config: usize,
        sum: f64,
    },

    #[error("row {variable}|{config} has a negative or non-finite entry {value}")]
    NegativeEntry {
        variable: String,
        config: usize,
        value: f64,
    },

    #[error("pseudocount {0} is not strictly positive")]
    NonPositiveAlpha(f64),

    #[error("record {0} does not bind every variable")]
    IncompleteRecord(usize),

    #[error("assignment does not bind every variable")]
    IncompleteAssignment,

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("evidence has zero probability")]
    ZeroEvidenceProbability,

    #[error("parameter {variable}|{config}[{state}] is zero")]
    ZeroParameter {
        variable: String,
        config: usize,
        state: usize,
    },

    #[error("joint state space of {0} cells exceeds the enumeration limit")]
    StateSpaceTooLarge(u128),

    #[error("negative variance contribution {value} at {variable}|{config}")]
    NegativeContribution {
        variable: String,
        config: usize,
        value: f64,
    },

    #[error("value {value} outside the domain of {what}")]
    OutOfDomain { what: &'static str, value: f64 },

    #[error("precondition violated: {0}")]
    PreconditionViolation(String),

    #[error("evidence has no support in the joint table")]
    EmptyEvidenceSupport,

    #[error("division by zero in closed form for {0}")]
    DivisionByZero(&'static str),

    #[error("requested {links} links but only {max} forward pairs exist")]
    TooManyLinks { links: usize, max: usize },

    #[error("requested {requested} query variables but the network has {available}")]
    TooManyVariables { requested: usize, available: usize },

    #[error("sample has zero variance")]
    DegenerateSample,

    #[error("invalid config: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by a zero-probability conditioning event.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::ZeroEvidenceProbability
                | Error::ZeroParameter { .. }
                | Error::NegativeContribution { .. }
                | Error::DivisionByZero(_)
                | Error::DegenerateSample
        )
    }
}
