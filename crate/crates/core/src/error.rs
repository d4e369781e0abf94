use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its physical or configured range.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    /// The heralding event has (numerically) zero probability.
    #[error("degenerate scenario: heralding probability {pr:.3e} is below {threshold:.0e}")]
    DegenerateScenario { pr: f64, threshold: f64 },

    #[error("truncation too aggressive: captured mass {captured:.6} < required {required}")]
    TruncationMass { captured: f64, required: f64 },

    #[error("no t2 in (0, 1] satisfies the zero-sum condition (best residual {best_residual:.3e})")]
    NoSolution { best_residual: f64 },

    #[error("zero-sum heralding condition violated: residual {residual:.3e} exceeds {tolerance:.0e}")]
    ConditionViolation { residual: f64, tolerance: f64 },

    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),

    #[error("oracle unreliable: {leakage:.3e} of the norm leaked past the per-mode cap")]
    OracleUnreliable { leakage: f64 },

    #[error("engines disagree: max abs deviation {deviation:.3e} exceeds {tolerance:.0e}")]
    OracleMismatch { deviation: f64, tolerance: f64 },

    #[error("degenerate grid: both axes carry less than {threshold:.0e} probability")]
    DegenerateGrid { threshold: f64 },

    #[error("search produced no admissible rows ({evaluated} points evaluated)")]
    EmptyResult { evaluated: usize },

    /// Wraps another error with the scenario it came from.
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

    /// The innermost error, skipping any context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }

    /// Process exit code used by the command-line tool.
    ///
    /// 0 success, 1 I/O, 2 parse, 3 validation, 4 physics-degenerate,
    /// 5 oracle failure, 6 truncation mass, 7 empty search result.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::Io(_) => 1,
            Error::Parse(_) => 2,
            Error::Config(_)
            | Error::NoSolution { .. }
            | Error::ConditionViolation { .. }
            | Error::DivisionByZero(_) => 3,
            Error::DegenerateScenario { .. } | Error::DegenerateGrid { .. } => 4,
            Error::OracleUnreliable { .. } | Error::OracleMismatch { .. } => 5,
            Error::TruncationMass { .. } => 6,
            Error::EmptyResult { .. } => 7,
            Error::Context { .. } => unreachable!("root() strips context"),
        }
    }
}
