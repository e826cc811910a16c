use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScalarError {
    #[error("power example needs an even order above 2, got {0}")]
    InvalidOrder(u32),

    #[error("scalar chain needs at least 2 factors, got {0}")]
    InvalidDepth(u32),

    #[error("lambda = 0 has no chain prediction")]
    UnsupportedLambda,

    #[error("step size must be positive and finite, got {0}")]
    InvalidStepSize(f64),

    #[error("no analytic second derivative for {0} at x = {1}")]
    NoCurvature(&'static str, f64),

    #[error(transparent)]
    Core(#[from] numlab_core::CoreError),

    #[error("csv output failed: {0}")]
    Csv(String),
}

pub(crate) fn check_step(delta: f64) -> Result<(), ScalarError> {
    if delta > 0.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(ScalarError::InvalidStepSize(delta))
    }
}
