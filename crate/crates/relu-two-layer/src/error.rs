use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReluError {
    #[error("shape mismatch in {what}: got {got:?}, expected {expected:?}")]
    ShapeMismatch {
        what: &'static str,
        got: (usize, usize),
        expected: (usize, usize),
    },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("dataset must contain at least one sample")]
    EmptyDataset,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("no fixed-point/period-2 pair found in [{lo}, {hi}]")]
    NoTransition { lo: f64, hi: f64 },
    #[error(transparent)]
    Core(#[from] numlab_core::CoreError),
}
