use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{
    cor1_bound, error_operator, lambda_max, spectral_norm, thm1_bound, DeepLinearError, DeepLinearNet, LinearTarget,
};

/// Relative Frobenius distance under which the product counts as fitting `R`.
const GLOBAL_OPT_TOL: f64 = 1e-8;

/// Linear stability of gradient descent at a deep-linear equilibrium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub step_size: f64,
    pub thm1_bound: f64,
    /// Only present when the product fits the target.
    pub cor1_bound: Option<f64>,
    pub lambda_max: f64,
    pub exact_threshold: f64,
    pub stable: bool,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub top_singular_tie: bool,
}

/// Stability report at `net`, which must be an equilibrium to within
/// `grad_tol` in gradient norm.
pub fn stability_check(
    net: &DeepLinearNet,
    tgt: &LinearTarget,
    delta: f64,
    grad_tol: f64,
) -> Result<StabilityReport, DeepLinearError> {
    let grad_norm = net.grad_norm(tgt)?;
    if !(grad_norm < grad_tol) {
        return Err(DeepLinearError::NotAtEquilibrium { grad_norm, grad_tol });
    }
    stability_check_at(net, tgt, delta)
}

/// Stability report at `net` without the equilibrium check.
pub fn stability_check_at(
    net: &DeepLinearNet,
    tgt: &LinearTarget,
    delta: f64,
) -> Result<StabilityReport, DeepLinearError> {
    net.check_target(tgt)?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(DeepLinearError::InvalidArgument(format!(
            "step size must be positive, got {delta}"
        )));
    }
    let op = error_operator(net)?;
    let lam = lambda_max(&op);
    let profile = thm1_bound(net)?;

    let product = net.product();
    let rel = (&product - &tgt.r).norm() / tgt.r.norm().max(1.0);
    let cor1 = (rel <= GLOBAL_OPT_TOL).then(|| cor1_bound(spectral_norm(&tgt.r), net.depth()));

    Ok(StabilityReport {
        step_size: delta,
        thm1_bound: profile.bound,
        cor1_bound: cor1,
        lambda_max: lam,
        exact_threshold: 2.0 / lam,
        stable: delta * lam <= 2.0,
        p: profile.p,
        q: profile.q,
        top_singular_tie: profile.top_singular_tie,
    })
}

/// What happened after nudging an equilibrium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationOutcome {
    pub initial_loss: f64,
    pub final_loss: f64,
    /// Distance of the final parameters from the unperturbed equilibrium.
    pub final_distance: f64,
    /// Whether the iterate came back within `return_radius` of the equilibrium.
    pub returned: bool,
    /// Largest singular value of the final product.
    pub final_rho: f64,
}

/// Perturbs every parameter of `net` by `scale * N(0, 1)`, runs `iters`
/// gradient steps, and reports whether the iterate settled back within
/// `return_radius` of `net`.
pub fn probe_equilibrium<R: Rng + ?Sized>(
    net: &DeepLinearNet,
    tgt: &LinearTarget,
    delta: f64,
    scale: f64,
    iters: usize,
    return_radius: f64,
    rng: &mut R,
) -> Result<PerturbationOutcome, DeepLinearError> {
    let base = net.to_flat();
    let dims = net.dims();
    let start: Vec<f64> = base
        .iter()
        .map(|w| {
            let z: f64 = rng.sample(StandardNormal);
            w + scale * z
        })
        .collect();
    let mut cur = DeepLinearNet::from_flat(&dims, &start)?;
    let initial_loss = cur.loss(tgt)?;
    for _ in 0..iters {
        cur = cur.gd_step(tgt, delta)?;
        if cur
            .layers()
            .iter()
            .any(|w| w.iter().any(|v| !v.is_finite() || v.abs() > 1e12))
        {
            return Ok(PerturbationOutcome {
                initial_loss,
                final_loss: f64::INFINITY,
                final_distance: f64::INFINITY,
                returned: false,
                final_rho: f64::INFINITY,
            });
        }
    }
    let final_distance = numlab_core::distance(&cur.to_flat(), &base);
    Ok(PerturbationOutcome {
        initial_loss,
        final_loss: cur.loss(tgt)?,
        final_distance,
        returned: final_distance < return_radius,
        final_rho: spectral_norm(&cur.product()),
    })
}
