use thiserror::Error;

#[derive(Debug, Error)]
pub enum GofError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed input at row {row}: {msg}")]
    Parse { row: usize, msg: String },

    #[error("non-binary response {value:?} at row {row}")]
    NonBinaryResponse { row: usize, value: String },

    #[error("non-numeric covariate {value:?} in column {column:?} at row {row}")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },

    #[error("too few observations: n = {n} < d = {d}")]
    TooFewObservations { n: usize, d: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("design matrix is rank deficient (rank {rank} < {d})")]
    RankDeficient { rank: usize, d: usize },

    #[error("maximum likelihood estimate does not exist: data are (quasi-)separated after {iterations} iterations")]
    Separation { iterations: usize },

    #[error(
        "logistic fit did not converge in {iterations} iterations (score norm {score_norm:.3e})"
    )]
    NotConverged { iterations: usize, score_norm: f64 },

    #[error("degenerate grouping: {0}")]
    DegenerateGrouping(String),

    #[error("group {group} is empty")]
    EmptyGroup { group: usize },

    #[error("group {group} has vanishing variance (mean fitted value {pi_bar})")]
    VanishingVariance { group: usize, pi_bar: f64 },

    #[error("matrix is not symmetric (max asymmetry {0:.3e})")]
    NonSymmetric(f64),

    #[error("weighted cross-product matrix is singular")]
    SingularInformation,

    #[error("degenerate test: central matrix has rank 0")]
    DegenerateTest,

    #[error("all {reps} realizations failed")]
    AllRealizationsFailed { reps: usize },
}

impl GofError {
    /// Input and usage errors, as opposed to failures of the computation itself.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            GofError::Io(_)
                | GofError::Parse { .. }
                | GofError::NonBinaryResponse { .. }
                | GofError::NonNumeric { .. }
                | GofError::TooFewObservations { .. }
                | GofError::InvalidInput(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, GofError>;
