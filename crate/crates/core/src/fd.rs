use crate::{norm, CoreError};

/// Central-difference gradient of `objective` at `x`.
///
/// With `step = None` each coordinate uses `h_i = 1e-6 * (1 + |x_i|)`;
/// otherwise the given step is used for every coordinate.
pub fn finite_diff_grad<F>(objective: F, x: &[f64], step: Option<f64>) -> Result<Vec<f64>, CoreError>
where
    F: Fn(&[f64]) -> f64,
{
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let h = step.unwrap_or(1e-6 * (1.0 + x[i].abs()));
        probe[i] = x[i] + h;
        let up = objective(&probe);
        probe[i] = x[i] - h;
        let down = objective(&probe);
        probe[i] = x[i];
        if !up.is_finite() || !down.is_finite() {
            return Err(CoreError::NonFiniteValue { index: i });
        }
        grad.push((up - down) / (2.0 * h));
    }
    Ok(grad)
}

/// `|a - b| / max(|a|, |b|)` in the Euclidean norm; zero when both vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let scale = norm(a).max(norm(b));
    if scale == 0.0 {
        0.0
    } else {
        norm(&diff) / scale
    }
}
