use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("normal equations are singular even after ridge regularization")]
    SingularSystem,

    #[error("no cosupport of size {l} admits a nontrivial null space after {attempts} draws")]
    InfeasibleCosparsity { l: usize, attempts: usize },

    #[error("parameters fall outside the regime where the formula is defined: {0}")]
    InfeasibleRegime(String),

    #[error("recovery condition violated: {0}")]
    ConditionViolated(String),

    #[error("sample bound undefined: {0}")]
    UndefinedRegime(String),

    #[error("enumeration of {count} subsets exceeds the budget of {budget}")]
    TooLarge { count: u128, budget: u128 },

    #[error("every enumerated cosupport has a trivial null space")]
    EmptyModel,

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Errors that stem from an infeasible configuration rather than a bug or
    /// an environment failure. The CLI maps these to exit code 2.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_)
                | Error::InvalidShape(_)
                | Error::InfeasibleCosparsity { .. }
                | Error::InfeasibleRegime(_)
                | Error::ConditionViolated(_)
                | Error::UndefinedRegime(_)
                | Error::TooLarge { .. }
                | Error::EmptyModel
        )
    }
}
