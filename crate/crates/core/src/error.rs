use thiserror::Error;

/// Error type shared across the crate.
///
/// `BudgetExhausted` is not fatal for a tuning run: the drivers absorb it and
/// continue on derived costs. Everything else propagates to the caller.
#[derive(Error, Debug)]
pub enum EscError {
    /// Raised by the budgeted oracle exactly at the (B+1)-th attempted call.
    #[error("what-if call budget exhausted")]
    BudgetExhausted,
    /// A mathematical contract was violated (e.g. an upper bound fell below a
    /// lower bound by more than tolerance). Indicates a bug or an adversarial
    /// oracle, never normal operation.
    #[error("contract violation: {0}")]
    ContractViolation(String),
    /// Invalid input: options, generator specs, budgets, file contents.
    #[error("validation: {0}")]
    Validation(String),
    /// Dangling references inside a workload (unknown column/query/atom ids).
    #[error("structural: {0}")]
    Structural(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, EscError>;
