use serde::{Deserialize, Serialize};

use numlab_core::{classify_tail, iterate, GdConfig, GradientMap, StopReason, TailClass, Trajectory};

use crate::{cor2_certificate, spectral_norm, DeepLinearError, DeepLinearNet, DeepLinearObjective, LinearTarget};

/// Outcome of plain gradient descent from a given initialisation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainRecord {
    pub step_size: f64,
    pub iterations: usize,
    pub stop: StopReason,
    pub tail: TailClass,
    /// Gradient norm fell below `grad_tol`.
    pub converged: bool,
    pub final_loss: f64,
    pub final_grad_norm: f64,
    /// Largest singular value of the final product.
    pub rho_product: f64,
    pub cor2_certificate: f64,
    /// `rho_product <= certificate * (1 + 1e-9)`; only meaningful when converged.
    pub cor2_satisfied: bool,
    pub final_net: DeepLinearNet,
    #[serde(skip)]
    pub trajectory: Option<Trajectory>,
}

/// Trains `net` on `tgt` with `cfg.step_size` through the iteration engine.
pub fn train(net: &DeepLinearNet, tgt: &LinearTarget, cfg: &GdConfig) -> Result<TrainRecord, DeepLinearError> {
    let objective = DeepLinearObjective::new(net.dims(), tgt.clone())?;
    let map = GradientMap::new(objective, cfg.step_size);
    let traj = iterate(&map, &net.to_flat(), cfg)?;
    let tail = classify_tail(&traj, cfg)?;

    let last = traj.len() - 1;
    let final_net = DeepLinearNet::from_flat(&net.dims(), &traj.states[last])?;
    let rho = spectral_norm(&final_net.product());
    let cert = cor2_certificate(net.depth(), cfg.step_size);
    Ok(TrainRecord {
        step_size: cfg.step_size,
        iterations: traj.iter_indices[last],
        stop: traj.stop,
        tail,
        converged: traj.stop == StopReason::Converged,
        final_loss: traj.losses[last],
        final_grad_norm: traj.grad_norms[last],
        rho_product: rho,
        cor2_certificate: cert,
        cor2_satisfied: rho <= cert * (1.0 + 1e-9),
        final_net,
        trajectory: Some(traj),
    })
}
