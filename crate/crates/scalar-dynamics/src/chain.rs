use serde::{Deserialize, Serialize};

use crate::error::check_step;
use crate::ScalarError;

/// Predicted behaviour of the scalar chain started from `w = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainPrediction {
    /// Largest step size for which monotone linear convergence is guaranteed.
    pub delta_c: f64,
    /// Per-step contraction of `|w - fixed_point|`; `None` for negative lambda.
    pub beta: Option<f64>,
    pub fixed_point: f64,
    /// `delta <= delta_c`.
    pub guaranteed: bool,
}

/// Critical step size and contraction rate of the symmetric chain
/// `w <- w - delta * w^(L-1) * (w^L - lambda)` from `w = 1`.
///
/// For `lambda > 0` the iterate approaches `lambda^(1/L)` monotonically with
/// `|w[k] - lambda^(1/L)| <= beta^k |1 - lambda^(1/L)|` whenever
/// `delta <= delta_c`. For `lambda < 0` it decreases to 0 whenever
/// `delta <= 1 / (1 - lambda)`.
pub fn chain_predict(lambda: f64, layers: u32, delta: f64) -> Result<ChainPrediction, ScalarError> {
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(ScalarError::UnsupportedLambda);
    }
    if layers < 2 {
        return Err(ScalarError::InvalidDepth(layers));
    }
    check_step(delta)?;
    let l = layers as f64;

    let (delta_c, beta, fixed_point) = if lambda < 0.0 {
        (1.0 / (1.0 - lambda), None, 0.0)
    } else {
        let root = lambda.powf(1.0 / l);
        let curvature = l * lambda.powf(2.0 * (l - 1.0) / l);
        if lambda > 1.0 {
            let beta = 1.0 - delta * (lambda - 1.0) / (root - 1.0);
            (1.0 / curvature, Some(beta), root)
        } else if lambda < 1.0 {
            let delta_c = (1.0 - root) / (1.0 - lambda);
            (delta_c, Some(1.0 - delta * curvature), root)
        } else {
            (1.0 / l, Some(1.0 - delta * l), 1.0)
        }
    };

    Ok(ChainPrediction {
        delta_c,
        beta,
        fixed_point,
        guaranteed: delta <= delta_c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{scalar_step, ScalarProblem};

    fn simulate(lambda: f64, layers: u32, delta: f64, steps: usize) -> Vec<f64> {
        let p = ScalarProblem::chain(lambda, layers).unwrap();
        let mut w = vec![1.0];
        for _ in 0..steps {
            let next = scalar_step(&p, *w.last().unwrap(), delta);
            w.push(next);
        }
        w
    }

    #[test]
    fn unit_lambda_branches_agree() {
        let pred = chain_predict(1.0, 3, 0.1).unwrap();
        assert!((pred.delta_c - 1.0 / 3.0).abs() < 1e-15);
        assert!((pred.beta.unwrap() - 0.7).abs() < 1e-15);
        assert_eq!(pred.fixed_point, 1.0);
        // Limits of the two branches as lambda -> 1.
        let above = chain_predict(1.0 + 1e-9, 3, 0.1).unwrap();
        let below = chain_predict(1.0 - 1e-9, 3, 0.1).unwrap();
        for p in [above, below] {
            assert!((p.delta_c - 1.0 / 3.0).abs() < 1e-6);
            assert!((p.beta.unwrap() - 0.7).abs() < 1e-6);
        }
    }

    #[test]
    fn lambda_four_depth_two() {
        let pred = chain_predict(4.0, 2, 0.25).unwrap();
        assert_eq!(pred.fixed_point, 2.0);
        assert!((pred.delta_c - 0.125).abs() < 1e-15);
        assert!((pred.beta.unwrap() - 0.25).abs() < 1e-15);
        assert!(!pred.guaranteed);

        // At the critical step the contraction is 1 - 0.125 * 3.
        let pred = chain_predict(4.0, 2, 0.125).unwrap();
        assert!((pred.beta.unwrap() - 0.625).abs() < 1e-15);
        let w = simulate(4.0, 2, 0.125, 20);
        for k in 0..20 {
            let e0 = (w[k] - 2.0).abs();
            let e1 = (w[k + 1] - 2.0).abs();
            assert!(e1 <= 0.625 * e0 + 1e-15, "k={k}: {e0} -> {e1}");
            assert!(w[k + 1] <= 2.0);
        }
    }

    #[test]
    fn critical_step_equals_marginal_stability_at_root_for_large_lambda() {
        // Above 1 the binding constraint is the curvature at the root.
        let (lambda, layers) = (9.0, 3);
        let pred = chain_predict(lambda, layers, 0.01).unwrap();
        let p = ScalarProblem::chain(lambda, layers).unwrap();
        let c = crate::curvature_at(&p, pred.fixed_point).unwrap();
        assert!((pred.delta_c - 1.0 / c).abs() < 1e-12);
    }

    #[test]
    fn negative_lambda() {
        let pred = chain_predict(-1.0, 2, 0.3).unwrap();
        assert_eq!(pred.fixed_point, 0.0);
        assert_eq!(pred.delta_c, 0.5);
        assert_eq!(pred.beta, None);
    }

    #[test]
    fn zero_lambda_is_unsupported() {
        assert_eq!(chain_predict(0.0, 2, 0.1), Err(ScalarError::UnsupportedLambda));
    }

    #[test]
    fn contraction_bound_holds_on_grid() {
        for lambda in [0.25, 1.0, 4.0, 9.0] {
            for layers in [2u32, 3, 5] {
                let delta_c = chain_predict(lambda, layers, 1.0).unwrap().delta_c;
                for frac in [0.3, 0.7, 1.0] {
                    let delta = frac * delta_c;
                    let pred = chain_predict(lambda, layers, delta).unwrap();
                    let beta = pred.beta.unwrap();
                    assert!((0.0..1.0).contains(&beta));
                    let root = pred.fixed_point;
                    let e0 = (1.0 - root).abs();
                    let w = simulate(lambda, layers, delta, 200);
                    for (k, wk) in w.iter().enumerate() {
                        let bound = beta.powi(k as i32) * e0;
                        assert!(
                            (wk - root).abs() <= bound + 1e-12,
                            "lambda={lambda} L={layers} delta={delta} k={k}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn negative_lambda_decreases_to_zero() {
        for lambda in [-0.5, -1.0, -3.0] {
            for layers in [2u32, 3, 4] {
                let delta = chain_predict(lambda, layers, 1.0).unwrap().delta_c;
                for d in [delta, 0.5 * delta] {
                    let w = simulate(lambda, layers, d, 500);
                    for pair in w.windows(2) {
                        assert!(pair[1] <= pair[0]);
                        assert!((0.0..=1.0).contains(&pair[1]));
                    }
                }
            }
        }
    }
}
