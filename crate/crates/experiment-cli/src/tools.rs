//! The `simulate`, `bounds` and `stability` subcommands.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use numlab_core::GdConfig;
use numlab_deep_linear::{
    cor1_bound, cor2_certificate, is_symmetric, spectral_norm, stability_check, stability_check_at, symmetric_eigen,
    thm2_step_bound, thm3_step_bound, train, DMatrix, DeepLinearNet, LinearTarget,
};

use crate::config::Params;
use crate::dataset::load_whitened_dataset;
use crate::experiments::scalar;
use crate::report::{to_value, Outcome};
use crate::CliError;

pub fn simulate(p: &mut Params) -> Result<Outcome, CliError> {
    let name = p.str_or("problem", "ex1")?;
    let layers = p.usize_or("layers", 4)?;
    let lambda = p.f64_or("lambda", 4.0)?;
    let problem = scalar::problem_from(&name, layers, lambda)?;
    let delta = p.positive_f64_or("delta", 0.1)?;
    let x0 = p.f64_or("x0", 0.3)?;
    scalar::simulate(p, problem, delta, x0)
}

fn dataset_target(p: &mut Params) -> Result<Option<DMatrix<f64>>, CliError> {
    let path = p.str_or("dataset", "")?;
    if path.is_empty() {
        return Ok(None);
    }
    Ok(Some(load_whitened_dataset(Path::new(&path))?.r))
}

/// Smallest eigenvalue when `r` is square and symmetric.
fn lambda_min(r: &DMatrix<f64>) -> Option<f64> {
    is_symmetric(r)
        .filter(|&asym| asym <= 1e-10)
        .map(|_| symmetric_eigen(r).0.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Closed-form step-size bounds for a target given by its largest singular
/// value (`rho`) or by a whitened dataset.
pub fn bounds(p: &mut Params) -> Result<Outcome, CliError> {
    let layers = p.count_or("layers", 2)?;
    let target = dataset_target(p)?;
    let (rho, lam_min) = match &target {
        Some(r) => (spectral_norm(r), lambda_min(r)),
        None => (p.positive_f64_or("rho", 1.0)?, p.opt_f64("lambda_min")?),
    };
    let mut bounds = json!({
        "rho": rho,
        "cor1_bound": cor1_bound(rho, layers),
        "thm2_step_bound": thm2_step_bound(rho, layers),
    });
    if let Some(lm) = lam_min {
        bounds["lambda_min"] = json!(lm);
        bounds["thm3_step_bound"] = json!(thm3_step_bound(rho, lm, layers));
    }
    let mut result = json!({});
    if let Some(delta) = p.opt_f64("delta")? {
        let cert = cor2_certificate(layers, delta);
        bounds["cor2_certificate"] = json!(cert);
        result["target_reachable"] = json!(rho <= cert * (1.0 + 1e-9));
    }
    if let Some(r) = &target {
        result["target"] = to_value(&numlab_deep_linear::MatrixJson::from(r));
    }
    Ok(Outcome {
        bounds,
        result,
        ..Default::default()
    })
}

fn parse_weights(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|w| {
            w.trim()
                .parse::<f64>()
                .map_err(|e| CliError::config("weights", format!("`{w}`: {e}")))
        })
        .collect()
}

/// Stability of gradient descent at a scalar-chain point (`weights` and
/// `target`), or at the point reached by training on a whitened dataset.
pub fn stability(p: &mut Params) -> Result<Outcome, CliError> {
    let delta = p.f64("delta")?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(CliError::config("delta", "step size must be positive"));
    }
    let mut out = Outcome::default();
    if let Some(r) = dataset_target(p)? {
        let layers = p.count_or("layers", 2)?;
        let seed = p.u64_or("seed", 0)?;
        let iters = p.count_or("iters", 50_000)?;
        let (m, n) = r.shape();
        let net = if m == n {
            DeepLinearNet::identity(n, layers)
        } else {
            let mut dims = vec![n; layers];
            dims.push(m);
            DeepLinearNet::random(&dims, 0.5, &mut ChaCha8Rng::seed_from_u64(seed))?
        };
        let tgt = LinearTarget::new(r)?;
        let cfg = GdConfig::new(delta).with_max_iters(iters).with_record_stride(iters);
        let rec = train(&net, &tgt, &cfg)?;
        out.seed = Some(seed);
        out.result = json!({ "training": to_value(&rec) });
        if rec.converged {
            let rep = stability_check(&rec.final_net, &tgt, delta, cfg.grad_tol)?;
            out.check(rep.stable || delta * rep.lambda_max <= 2.0 * (1.0 + 1e-6), || {
                format!(
                    "converged at step {delta} although 2 / lambda_max = {}",
                    rep.exact_threshold
                )
            });
            out.check(rec.cor2_satisfied, || {
                format!(
                    "converged product {} breaches certificate {}",
                    rec.rho_product, rec.cor2_certificate
                )
            });
            out.bounds = to_value(&rep);
        }
    } else {
        let weights = parse_weights(&p.str_or("weights", "1,4")?)?;
        let target = p.f64_or("target", weights.iter().product())?;
        let net = DeepLinearNet::scalars(&weights)?;
        let tgt = LinearTarget::scalar(target);
        let rep = stability_check_at(&net, &tgt, delta)?;
        out.result = json!({ "grad_norm": net.grad_norm(&tgt)?, "stable": rep.stable });
        out.bounds = to_value(&rep);
    }
    Ok(out)
}
