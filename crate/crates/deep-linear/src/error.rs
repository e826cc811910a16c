use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeepLinearError {
    #[error("network must have at least one layer")]
    EmptyNetwork,

    #[error("layer {layer} has shape {got:?}, expected {expected:?}")]
    ShapeMismatch {
        layer: usize,
        got: (usize, usize),
        expected: (usize, usize),
    },

    #[error("target has shape {got:?}, network maps to {expected:?}")]
    TargetShape {
        got: (usize, usize),
        expected: (usize, usize),
    },

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("flat parameter vector has length {got}, expected {expected}")]
    FlatLength { got: usize, expected: usize },

    #[error("error operator needs n_L * n_0 = {size} <= {cap}")]
    DimensionCapExceeded { size: usize, cap: usize },

    #[error("product of the layers is the zero matrix")]
    ZeroProduct,

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix has negative eigenvalue {value:e}")]
    NegativeEigenvalue { value: f64 },

    #[error("not an equilibrium: gradient norm {grad_norm:e} >= {grad_tol:e}")]
    NotAtEquilibrium { grad_norm: f64, grad_tol: f64 },

    #[error("{0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Core(#[from] numlab_core::CoreError),

    #[error(transparent)]
    Scalar(#[from] numlab_scalar::ScalarError),
}
