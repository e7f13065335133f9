use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Vector or matrix shapes do not line up.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A value is outside its admissible domain (negative scale, ε > 1, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unknown act `{0}`")]
    UnknownAct(String),

    #[error("unknown prior `{0}`")]
    UnknownPrior(String),

    /// Every act has the −∞ score, so no cost-adjusted optimum exists.
    #[error("all acts are strictly inadmissible")]
    AllInadmissible,

    #[error("regime `{0}` has no observations")]
    EmptyRegime(String),

    #[error("month {month} has {count} daily observations, at least 5 are required")]
    SparseMonth { month: String, count: usize },

    /// Malformed input file, with 1-based line number.
    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: u64,
        message: String,
    },

    /// Two input files disagree (state labels, asset names, dimensions).
    #[error("inconsistent inputs: {0}")]
    Inconsistent(String),

    /// The LP kernel produced a result that contradicts another route.
    #[error("solver inconsistency: {0}")]
    Solver(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Innermost error, skipping any context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }

    /// Process exit code used by the command-line tool: 2 input error,
    /// 3 consistency error, 4 internal solver error.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::Inconsistent(_) | Error::Dimension(_) => 3,
            Error::Solver(_) => 4,
            _ => 2,
        }
    }
}
