//! Seeded random matrices for experiments and tests.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// Orthogonal matrix from the QR factor of a Gaussian matrix.
pub fn random_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let qr = gaussian_matrix(n, n, rng).qr();
    let (q, r) = qr.unpack();
    // Fix column signs so the distribution does not depend on the QR convention.
    let signs = DMatrix::from_diagonal(&DVector::from_fn(n, |i, _| if r[(i, i)] < 0.0 { -1.0 } else { 1.0 }));
    q * signs
}

/// `Q diag(eigenvalues) Q^T` for a random orthogonal `Q`.
pub fn symmetric_with_spectrum<R: Rng + ?Sized>(eigenvalues: &[f64], rng: &mut R) -> DMatrix<f64> {
    let n = eigenvalues.len();
    let q = random_orthogonal(n, rng);
    let d = DMatrix::from_diagonal(&DVector::from_column_slice(eigenvalues));
    let m = &q * d * q.transpose();
    (&m + m.transpose()) * 0.5
}

/// Symmetric positive definite matrix with eigenvalues uniform in `[lo, hi]`.
pub fn random_spd<R: Rng + ?Sized>(n: usize, lo: f64, hi: f64, rng: &mut R) -> DMatrix<f64> {
    let eig: Vec<f64> = (0..n).map(|_| rng.random_range(lo..=hi)).collect();
    symmetric_with_spectrum(&eig, rng)
}

/// Random symmetric PSD matrix `G G^T` with `G` Gaussian of shape `n x k`.
pub fn random_psd<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> DMatrix<f64> {
    let g = gaussian_matrix(n, k, rng);
    &g * g.transpose()
}

/// `N = copies * n` inputs with `(1/N) sum x_i x_i^T = I`, as the columns of
/// the returned `n x N` matrix.
pub fn whitened_inputs<R: Rng + ?Sized>(n: usize, copies: usize, rng: &mut R) -> DMatrix<f64> {
    let total = n * copies;
    let scale = (total as f64 / copies as f64).sqrt();
    let blocks: Vec<DMatrix<f64>> = (0..copies).map(|_| random_orthogonal(n, rng) * scale).collect();
    DMatrix::from_fn(n, total, |i, j| blocks[j / n][(i, j % n)])
}
