use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use numlab_core::GdConfig;
use numlab_scalar::chain_predict;

use crate::{
    cor2_certificate, matrix_root, psd_projection, spectral_norm, symmetric_eigen, thm2_step_bound, thm3_step_bound,
    DeepLinearError, DeepLinearNet, LinearTarget, MatrixJson,
};

/// Direction errors below this are too close to rounding for a step ratio.
const RATIO_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitCase {
    /// PSD target: every layer should reach `R^(1/L)`.
    PositiveSemidefinite,
    /// Target with a negative eigenvalue: the product should reach the PSD projection.
    Indefinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityInitOptions {
    pub max_iters: usize,
    pub grad_tol: f64,
    /// Also stop once the product is this close (Frobenius) to its limit.
    pub limit_tol: Option<f64>,
    pub record_stride: usize,
    /// Project every layer back onto the matrices diagonal in the target's
    /// eigenbasis after each step. Exact gradient descent from `W_i = I`
    /// never leaves that set, but for `L >= 3` rounding errors off it grow
    /// near an indefinite target's projection and the run escapes.
    pub reproject: bool,
}

impl Default for IdentityInitOptions {
    fn default() -> Self {
        Self {
            max_iters: 10_000,
            grad_tol: 1e-12,
            limit_tol: None,
            record_stride: 100,
            reproject: true,
        }
    }
}

impl From<&GdConfig> for IdentityInitOptions {
    fn from(cfg: &GdConfig) -> Self {
        Self {
            max_iters: cfg.max_iters,
            grad_tol: cfg.grad_tol,
            limit_tol: None,
            record_stride: cfg.record_stride,
            reproject: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryPoint {
    pub iter: usize,
    pub loss: f64,
    pub layer_error: f64,
    pub product_error: f64,
}

/// Convergence along one eigenvector of the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionRate {
    pub eigenvalue: f64,
    /// Limit of each layer along this direction.
    pub layer_limit: f64,
    /// Contraction predicted by the scalar chain; `None` for `eigenvalue <= 0`.
    pub predicted_beta: Option<f64>,
    /// Whether the step is within the chain's critical step for this direction.
    pub guaranteed: bool,
    /// Largest observed `|w[k+1] - limit| / |w[k] - limit|`.
    pub observed_rate: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdentityInitRecord {
    pub case: InitCase,
    pub layers: usize,
    pub step_size: f64,
    /// Step size covered by the convergence guarantee for this case.
    pub step_bound: f64,
    pub within_bound: bool,
    pub eigenvalues: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub reached_limit: bool,
    pub final_loss: f64,
    pub final_grad_norm: f64,
    /// `max_i |W_i - limit^(1/L)|_F`.
    pub final_layer_error: f64,
    /// `|W_L ... W_1 - limit|_F`.
    pub final_product_error: f64,
    /// Distance of the product to the raw target.
    pub final_target_error: f64,
    pub layer_error_monotone: bool,
    /// Largest off-eigenbasis component (Frobenius) of any layer after a step.
    pub max_drift: f64,
    pub directions: Vec<DirectionRate>,
    pub observed_rate: Option<f64>,
    pub predicted_rate: Option<f64>,
    pub rho_product: f64,
    pub cor2_certificate: f64,
    pub cor2_satisfied: bool,
    pub limit: MatrixJson,
    pub layer_limit: MatrixJson,
    pub history: Vec<HistoryPoint>,
    pub final_net: DeepLinearNet,
}

/// Trains `W_L ... W_1` towards the symmetric target `r` from `W_i = I`.
///
/// A PSD target is fitted exactly with every layer tending to `r^(1/L)`; a
/// target with negative eigenvalues is fitted by its PSD projection. Along
/// every eigenvector of `r` the layers evolve as the scalar chain, so the
/// per-step contraction can be compared with the chain's prediction.
pub fn run_identity_init(
    r: &DMatrix<f64>,
    layers: usize,
    delta: f64,
    opts: &IdentityInitOptions,
) -> Result<IdentityInitRecord, DeepLinearError> {
    if layers == 0 {
        return Err(DeepLinearError::EmptyNetwork);
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(DeepLinearError::InvalidArgument(format!(
            "step size must be positive, got {delta}"
        )));
    }
    let limit = psd_projection(r)?;
    let sym = (r + r.transpose()) * 0.5;
    let (eigenvalues, vectors) = symmetric_eigen(&sym);
    let n = r.nrows();
    let lambda_min = eigenvalues[0];
    let rho = eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let case = if lambda_min < 0.0 {
        InitCase::Indefinite
    } else {
        InitCase::PositiveSemidefinite
    };
    let step_bound = match case {
        InitCase::PositiveSemidefinite => thm2_step_bound(rho, layers),
        InitCase::Indefinite => thm3_step_bound(rho, lambda_min, layers),
    };
    let root = matrix_root(&limit, layers)?;
    let tgt = LinearTarget::new(sym.clone())?;

    let mut directions: Vec<DirectionRate> = eigenvalues
        .iter()
        .map(|&lam| {
            let pred = if lam > 0.0 {
                chain_predict(lam, layers.max(2) as u32, delta).ok()
            } else {
                None
            };
            DirectionRate {
                eigenvalue: lam,
                layer_limit: if lam > 0.0 { lam.powf(1.0 / layers as f64) } else { 0.0 },
                predicted_beta: pred.and_then(|p| p.beta),
                guaranteed: pred.is_some_and(|p| p.guaranteed),
                observed_rate: None,
            }
        })
        .collect();

    let direction_errors = |net: &DeepLinearNet, dirs: &[DirectionRate]| -> Vec<f64> {
        (0..n)
            .map(|j| {
                let u = vectors.column(j);
                net.layers()
                    .iter()
                    .map(|w| ((u.transpose() * w * u)[(0, 0)] - dirs[j].layer_limit).abs())
                    .fold(0.0, f64::max)
            })
            .collect()
    };

    let mut net = DeepLinearNet::identity(n, layers);
    let mut history = Vec::new();
    let mut prev_layer_error = f64::INFINITY;
    let mut monotone = true;
    let mut prev_dir = direction_errors(&net, &directions);
    let stride = opts.record_stride.max(1);
    let mut max_drift = 0.0f64;
    let (mut converged, mut reached_limit);
    let mut iterations = 0;
    let (mut loss, mut grad_norm, mut layer_error, mut product_error);

    loop {
        let grads = net.gradient(&tgt)?;
        grad_norm = grads.iter().map(|g| g.norm_squared()).sum::<f64>().sqrt();
        let product = net.product();
        loss = 0.5 * (&product - &tgt.r).norm_squared();
        product_error = (&product - &limit).norm();
        layer_error = net.layers().iter().map(|w| (w - &root).norm()).fold(0.0, f64::max);

        if layer_error > prev_layer_error * (1.0 + 1e-12) + 1e-15 {
            monotone = false;
        }
        prev_layer_error = layer_error;

        converged = grad_norm < opts.grad_tol;
        reached_limit = opts.limit_tol.is_some_and(|t| product_error < t);
        let done = converged || reached_limit || iterations >= opts.max_iters;
        if iterations % stride == 0 || done {
            history.push(HistoryPoint {
                iter: iterations,
                loss,
                layer_error,
                product_error,
            });
        }
        if done {
            break;
        }

        let mut layers_next: Vec<DMatrix<f64>> = net.layers().iter().zip(&grads).map(|(w, g)| w - g * delta).collect();
        for w in &mut layers_next {
            let mut rotated = vectors.transpose() * &*w * &vectors;
            let diag = DMatrix::from_diagonal(&rotated.diagonal());
            rotated -= &diag;
            max_drift = max_drift.max(rotated.norm());
            if opts.reproject {
                *w = &vectors * diag * vectors.transpose();
            }
        }
        net = DeepLinearNet::new(layers_next)?;
        iterations += 1;

        let cur_dir = direction_errors(&net, &directions);
        for j in 0..n {
            if prev_dir[j] > RATIO_FLOOR {
                let ratio = cur_dir[j] / prev_dir[j];
                let slot = &mut directions[j].observed_rate;
                *slot = Some(slot.map_or(ratio, |m: f64| m.max(ratio)));
            }
        }
        prev_dir = cur_dir;
    }

    let observed_rate = directions
        .iter()
        .filter(|d| d.predicted_beta.is_some())
        .filter_map(|d| d.observed_rate)
        .reduce(f64::max);
    let predicted_rate = directions.iter().filter_map(|d| d.predicted_beta).reduce(f64::max);
    let product = net.product();
    let rho_product = spectral_norm(&product);
    let cert = cor2_certificate(layers, delta);

    Ok(IdentityInitRecord {
        case,
        layers,
        step_size: delta,
        step_bound,
        within_bound: delta <= step_bound * (1.0 + 1e-12),
        eigenvalues: eigenvalues.iter().copied().collect(),
        iterations,
        converged,
        reached_limit,
        final_loss: loss,
        final_grad_norm: grad_norm,
        final_layer_error: layer_error,
        final_product_error: product_error,
        final_target_error: (&product - r).norm(),
        layer_error_monotone: monotone,
        max_drift,
        directions,
        observed_rate,
        predicted_rate,
        rho_product,
        cor2_certificate: cert,
        cor2_satisfied: rho_product <= cert * (1.0 + 1e-9),
        limit: MatrixJson::from(&limit),
        layer_limit: MatrixJson::from(&root),
        history,
        final_net: net,
    })
}
