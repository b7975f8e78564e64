use thiserror::Error;

/// Errors raised by the clustering library.
///
/// Variants split into two families: input errors (malformed data, bad
/// dimensions, invalid partitions) and refusals (the request is well formed
/// but falls outside what an exact method can answer). The CLI maps the
/// families to distinct exit statuses via [`Error::is_refusal`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("index set is empty")]
    EmptyIndexSet,

    #[error("index {index} out of range (size {size})")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("invalid assignment: row {row} {reason}")]
    InvalidAssignment { row: usize, reason: String },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("row {row}: {reason}")]
    Parse { row: usize, reason: String },

    #[error("enumeration refused: S({m},{k}) = {count} partitions exceeds the budget of {budget}")]
    BudgetExceeded {
        m: usize,
        k: usize,
        count: String,
        budget: u64,
    },

    #[error("data points {first} and {second} coincide; exact solving requires pairwise distinct points")]
    DuplicatePoints { first: usize, second: usize },

    #[error(
        "perturbation refused: could not keep points pairwise distinct after {retries} retries"
    )]
    PerturbationRefused { retries: usize },

    #[error("reference system is not a nontrivial local solution (verdict {verdict})")]
    NotCertified { verdict: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for guard refusals (enumeration budget, degenerate data), as
    /// opposed to malformed input.
    pub fn is_refusal(&self) -> bool {
        matches!(
            self,
            Error::BudgetExceeded { .. }
                | Error::DuplicatePoints { .. }
                | Error::PerturbationRefused { .. }
                | Error::NotCertified { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
