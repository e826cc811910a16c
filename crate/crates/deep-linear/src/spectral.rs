use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::DeepLinearError;

const SYMMETRY_TOL: f64 = 1e-10;

/// Largest `|M_ij - M_ji|`; `None` when `m` is not square.
pub fn is_symmetric(m: &DMatrix<f64>) -> Option<f64> {
    if !m.is_square() {
        return None;
    }
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    Some(worst)
}

fn require_symmetric(m: &DMatrix<f64>) -> Result<DMatrix<f64>, DeepLinearError> {
    match is_symmetric(m) {
        Some(asym) if asym <= SYMMETRY_TOL => Ok((m + m.transpose()) * 0.5),
        Some(asymmetry) => Err(DeepLinearError::NotSymmetric { asymmetry }),
        None => Err(DeepLinearError::NotSymmetric {
            asymmetry: f64::INFINITY,
        }),
    }
}

/// Eigenvalues in ascending order with matching eigenvector columns.
/// Only the lower triangle of `m` is read.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = DVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = DMatrix::from_columns(&order.iter().map(|&i| eig.eigenvectors.column(i)).collect::<Vec<_>>());
    (values, vectors)
}

fn reassemble(vectors: &DMatrix<f64>, values: &DVector<f64>) -> DMatrix<f64> {
    let scaled = DMatrix::from_fn(vectors.nrows(), vectors.ncols(), |i, j| vectors[(i, j)] * values[j]);
    let out = scaled * vectors.transpose();
    (&out + out.transpose()) * 0.5
}

/// Symmetric `L`-th root `U diag(lambda^(1/L)) U^T` of a PSD matrix.
pub fn matrix_root(r: &DMatrix<f64>, layers: usize) -> Result<DMatrix<f64>, DeepLinearError> {
    if layers == 0 {
        return Err(DeepLinearError::InvalidArgument("root order must be positive".into()));
    }
    let sym = require_symmetric(r)?;
    let (values, vectors) = symmetric_eigen(&sym);
    let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if let Some(&neg) = values.iter().find(|&&v| v < -SYMMETRY_TOL * scale) {
        return Err(DeepLinearError::NegativeEigenvalue { value: neg });
    }
    let roots = values.map(|v| v.max(0.0).powf(1.0 / layers as f64));
    Ok(reassemble(&vectors, &roots))
}

/// Frobenius-nearest PSD matrix: negative eigenvalues clipped to zero.
pub fn psd_projection(r: &DMatrix<f64>) -> Result<DMatrix<f64>, DeepLinearError> {
    let sym = require_symmetric(r)?;
    let (values, vectors) = symmetric_eigen(&sym);
    if values.iter().all(|&v| v >= 0.0) {
        return Ok(sym);
    }
    Ok(reassemble(&vectors, &values.map(|v| v.max(0.0))))
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().iter().copied().fold(0.0, f64::max)
}
