use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::{DeepLinearError, DeepLinearNet};

/// Top singular direction of the product and the layer-wise gains along it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularProfile {
    /// `2 / sum_{j=1..L} p_{j-1}^2 q_{j+1}^2`.
    pub bound: f64,
    pub sigma_max: f64,
    /// `p_0, ..., p_L` with `p_j = |W_j ... W_1 v|` and `p_0 = 1`.
    pub p: Vec<f64>,
    /// `q_1, ..., q_{L+1}` with `q_j = |u^T W_L ... W_j|` and `q_{L+1} = 1`.
    pub q: Vec<f64>,
    /// Set when the top two singular values are within `1e-9`, so `u, v`
    /// are not unique.
    pub top_singular_tie: bool,
    #[serde(skip)]
    pub u: DVector<f64>,
    #[serde(skip)]
    pub v: DVector<f64>,
}

/// Necessary step-size bound for convergence to the current layers.
pub fn thm1_bound(net: &DeepLinearNet) -> Result<SingularProfile, DeepLinearError> {
    let product = net.product();
    let svd = product.clone().svd(true, true);
    let sv = &svd.singular_values;
    let top = (0..sv.len())
        .max_by(|&i, &j| sv[i].total_cmp(&sv[j]))
        .ok_or(DeepLinearError::ZeroProduct)?;
    let sigma_max = sv[top];
    if !(sigma_max > 0.0) {
        return Err(DeepLinearError::ZeroProduct);
    }
    let second = (0..sv.len())
        .filter(|&i| i != top)
        .map(|i| sv[i])
        .fold(f64::NEG_INFINITY, f64::max);
    let u: DVector<f64> = svd.u.as_ref().expect("requested U").column(top).into_owned();
    let v: DVector<f64> = svd.v_t.as_ref().expect("requested V^T").row(top).transpose();

    let l = net.depth();
    let prefix = net.prefix_products();
    let suffix = net.suffix_products();
    let p: Vec<f64> = (0..=l)
        .map(|j| if j == 0 { 1.0 } else { (&prefix[j] * &v).norm() })
        .collect();
    // suffix[j - 1] = W_L ... W_j
    let q: Vec<f64> = (1..=l + 1)
        .map(|j| {
            if j == l + 1 {
                1.0
            } else {
                (suffix[j - 1].transpose() * &u).norm()
            }
        })
        .collect();
    // p_{j-1} is p[j - 1]; q_{j+1} is q[j]
    let sum: f64 = (1..=l).map(|j| (p[j - 1] * q[j]).powi(2)).sum();

    Ok(SingularProfile {
        bound: 2.0 / sum,
        sigma_max,
        p,
        q,
        top_singular_tie: sigma_max - second < 1e-9,
        u,
        v,
    })
}

/// Step-size bound for convergence to any global optimum of a target with
/// largest singular value `rho`: `2 / (L rho^(2(L-1)/L))`.
pub fn cor1_bound(rho: f64, layers: usize) -> f64 {
    let l = layers as f64;
    2.0 / (l * rho.powf(2.0 * (l - 1.0) / l))
}

/// Largest singular value a converged product can have at step `delta`:
/// `(2 / (L delta))^(L / (2L - 2))`. Unbounded for a single layer.
pub fn cor2_certificate(layers: usize, delta: f64) -> f64 {
    if layers < 2 {
        return f64::INFINITY;
    }
    let l = layers as f64;
    (2.0 / (l * delta)).powf(l / (2.0 * l - 2.0))
}

/// Step size guaranteeing linear convergence from identity initialisation
/// for a PSD target: `min(1/L, 1/(L rho^(2(L-1)/L)))`.
pub fn thm2_step_bound(rho: f64, layers: usize) -> f64 {
    let l = layers as f64;
    (1.0 / l).min(0.5 * cor1_bound(rho, layers))
}

/// As [`thm2_step_bound`], additionally capped by `1 / (1 - lambda_min)`
/// for targets with a negative eigenvalue.
pub fn thm3_step_bound(rho: f64, lambda_min: f64, layers: usize) -> f64 {
    let base = thm2_step_bound(rho, layers);
    if lambda_min < 0.0 {
        base.min(1.0 / (1.0 - lambda_min))
    } else {
        base
    }
}
