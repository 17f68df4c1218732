use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("matrix is not symmetric positive definite")]
    NotPositiveDefinite,

    #[error("singular design: X^t X is numerically singular and alpha = 0")]
    SingularDesign,

    #[error("invalid split: {0}")]
    InvalidSplit(String),

    #[error("degenerate moment: p = {p} rows with n = {n} features, need p >= n + 2")]
    DegenerateMoment { n: usize, p: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid range: {0}")]
    InvalidRange(String),

    #[error("no valid split for m = {m}, n = {n}: need m >= n + 3")]
    NoValidSplit { m: usize, n: usize },

    #[error("internal error: {0}")]
    Internal(String),
}
