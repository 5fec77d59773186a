use thiserror::Error;

pub type Result<T> = std::result::Result<T, SummaError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SummaError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("unknown label: {0}")]
    UnknownLabel(String),
    #[error("invalid tail model: {0}")]
    InvalidTailModel(String),
    #[error("invalid ideal: {0}")]
    InvalidIdeal(String),
    #[error("invalid sigma map: {0}")]
    InvalidSigma(String),
    #[error("row {row} is not in the domain ({reason})")]
    NotInDomain { row: usize, divergent: bool, reason: String },
    #[error("group norm of row {row} diverges")]
    DivergentGroupNorm { row: usize },
    #[error("horizon too small: {0}")]
    HorizonTooSmall(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("selection arity {got} does not match family size {expected}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("enumeration needs {needed} words, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },
}

impl SummaError {
    /// Errors raised while loading a document (CLI exit code 2).
    pub fn is_schema_error(&self) -> bool {
        matches!(
            self,
            SummaError::Schema(_)
                | SummaError::DimensionMismatch(_)
                | SummaError::UnknownLabel(_)
                | SummaError::InvalidTailModel(_)
                | SummaError::InvalidIdeal(_)
                | SummaError::InvalidSigma(_)
        )
    }
}
