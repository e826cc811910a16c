use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoreError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("initial state has a non-finite coordinate at index {0}")]
    NonFiniteState(usize),

    #[error("objective returned a non-finite value at probe coordinate {index}")]
    NonFiniteValue { index: usize },

    #[error("stride-1 tail has {have} states, classification needs {need}")]
    InsufficientTail { have: usize, need: usize },

    #[error("csv output failed: {0}")]
    Csv(String),
}
