use thiserror::Error;

/// Errors shared by every module of the crate.
///
/// The CLI maps these onto exit codes: `NotFound` and failed verifications
/// exit 1, usage problems exit 2, cap/budget refusals exit 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("contraction precondition violated: {0}")]
    ContractionPrecondition(String),

    /// The operation ran but could not produce the object; the message
    /// reports the guarantee threshold that was not met.
    #[error("not found: {0}")]
    NotFound(String),

    /// A stated guarantee does not apply to this input (preconditions of the
    /// underlying statement are not met) and the attempt failed.
    #[error("guarantee unavailable: {0}")]
    GuaranteeUnavailable(String),

    #[error("cap exceeded: {0}")]
    CapExceeded(String),

    #[error("budget exhausted: {0}")]
    BudgetExhausted(String),

    #[error("digit budget exceeded: {0}")]
    DigitBudgetExceeded(String),

    #[error("unknown bound name: {0}")]
    UnknownBound(String),

    #[error("unsupported pattern: {0}")]
    UnsupportedPattern(String),

    #[error("linkage does not cross the blocks in order: path {path} violates block {block}")]
    NotOrderlyCrossing { path: usize, block: usize },

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("flavor mismatch: {0}")]
    FlavorMismatch(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
