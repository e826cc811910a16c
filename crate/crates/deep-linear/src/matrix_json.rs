use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::DeepLinearError;

/// Row-major matrix with an explicit shape, as written to JSON reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl From<&DMatrix<f64>> for MatrixJson {
    fn from(m: &DMatrix<f64>) -> Self {
        let data = (0..m.nrows())
            .flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)]))
            .collect();
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }
}

impl TryFrom<MatrixJson> for DMatrix<f64> {
    type Error = DeepLinearError;

    fn try_from(m: MatrixJson) -> Result<Self, Self::Error> {
        if m.data.len() != m.rows * m.cols {
            return Err(DeepLinearError::FlatLength {
                got: m.data.len(),
                expected: m.rows * m.cols,
            });
        }
        Ok(DMatrix::from_row_slice(m.rows, m.cols, &m.data))
    }
}
