use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use numlab_core::GdConfig;
use numlab_deep_linear::sampling::{random_spd, symmetric_with_spectrum};
use numlab_deep_linear::{
    cor1_bound, cor2_certificate, probe_equilibrium, psd_projection, run_identity_init, spectral_norm,
    stability_check_at, symmetric_eigen, thm2_step_bound, thm3_step_bound, train, DMatrix, DeepLinearNet,
    IdentityInitOptions, IdentityInitRecord, LinearTarget,
};

use crate::config::Params;
use crate::plot::{Plot, Series};
use crate::report::{to_value, Outcome, Table};
use crate::CliError;

const CERT_SLACK: f64 = 1e-9;

/// One audited scalar-chain equilibrium.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct AuditRow {
    pub weights: Vec<f64>,
    pub exact_threshold: f64,
    pub thm1_bound: f64,
    pub returned_below: bool,
    pub returned_above: bool,
    pub rho_below: f64,
    pub cert_below: f64,
}

/// Settings for [`audit_equilibria`].
#[derive(Debug, Clone, PartialEq)]
pub struct AuditSettings {
    pub count: usize,
    /// Product every equilibrium realises.
    pub target: f64,
    pub layers: usize,
    /// Range the free weights are drawn from.
    pub alpha: (f64, f64),
    pub perturbation: f64,
    pub iters: usize,
    /// Relative distance of the two probed step sizes from the threshold.
    pub band: f64,
}

impl Default for AuditSettings {
    fn default() -> Self {
        Self {
            count: 50,
            target: 4.0,
            layers: 2,
            alpha: (0.5, 4.0),
            perturbation: 1e-6,
            iters: 3000,
            band: 0.02,
        }
    }
}

/// Random scalar-chain equilibria `w_1 ... w_L = target`, each probed just
/// below and just above its exact stability threshold.
pub fn audit_equilibria(rng: &mut ChaCha8Rng, s: &AuditSettings) -> Result<Vec<AuditRow>, CliError> {
    let AuditSettings {
        count,
        target,
        layers,
        alpha,
        perturbation,
        iters,
        band,
    } = *s;
    let tgt = LinearTarget::scalar(target);
    let mut rows = Vec::with_capacity(count);
    for _ in 0..count {
        let mut weights: Vec<f64> = (0..layers - 1).map(|_| rng.random_range(alpha.0..=alpha.1)).collect();
        weights.push(target / weights.iter().product::<f64>());
        let net = DeepLinearNet::scalars(&weights)?;
        let rep = stability_check_at(&net, &tgt, 1.0)?;
        let lo = (1.0 - band) * rep.exact_threshold;
        let below = probe_equilibrium(&net, &tgt, lo, perturbation, iters, 100.0 * perturbation, rng)?;
        let above = probe_equilibrium(
            &net,
            &tgt,
            (1.0 + band) * rep.exact_threshold,
            perturbation,
            iters,
            100.0 * perturbation,
            rng,
        )?;
        rows.push(AuditRow {
            weights,
            exact_threshold: rep.exact_threshold,
            thm1_bound: rep.thm1_bound,
            returned_below: below.returned,
            returned_above: above.returned,
            rho_below: below.final_rho,
            cert_below: cor2_certificate(layers, lo),
        });
    }
    Ok(rows)
}

pub fn thm1_audit(p: &mut Params) -> Result<Outcome, CliError> {
    let d = AuditSettings::default();
    let seed = p.u64_or("seed", 0)?;
    let s = AuditSettings {
        count: p.count_or("count", d.count)?,
        target: p.positive_f64_or("target", d.target)?,
        layers: p.usize_or("layers", d.layers)?,
        alpha: (
            p.positive_f64_or("alpha_min", d.alpha.0)?,
            p.positive_f64_or("alpha_max", d.alpha.1)?,
        ),
        perturbation: p.positive_f64_or("perturbation", d.perturbation)?,
        iters: p.count_or("iters", d.iters)?,
        band: p.positive_f64_or("band", d.band)?,
    };
    let (target, layers) = (s.target, s.layers);
    if layers < 2 {
        return Err(CliError::config("layers", "the audit needs at least two layers"));
    }
    if s.alpha.1 < s.alpha.0 {
        return Err(CliError::config("alpha_max", "must not be below alpha_min"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = audit_equilibria(&mut rng, &s)?;

    let mut out = Outcome {
        seed: Some(seed),
        ..Default::default()
    };
    let mut table = Table::new(&[
        "weights",
        "exact_threshold",
        "thm1_bound",
        "returned_below",
        "returned_above",
    ]);
    for r in &rows {
        out.check(r.exact_threshold <= r.thm1_bound * (1.0 + 1e-12), || {
            format!(
                "exact threshold {} exceeds the singular bound {}",
                r.exact_threshold, r.thm1_bound
            )
        });
        out.check(r.returned_below && !r.returned_above, || {
            format!(
                "equilibrium {:?}: returned below threshold {}, above {}",
                r.weights, r.returned_below, r.returned_above
            )
        });
        if r.returned_below {
            out.check(r.rho_below <= r.cert_below * (1.0 + CERT_SLACK), || {
                format!(
                    "converged product {} breaches certificate {}",
                    r.rho_below, r.cert_below
                )
            });
        }
        let w: Vec<String> = r.weights.iter().map(|w| w.to_string()).collect();
        table.push(vec![
            w.join(";"),
            r.exact_threshold.to_string(),
            r.thm1_bound.to_string(),
            r.returned_below.to_string(),
            r.returned_above.to_string(),
        ]);
    }
    let mut sorted: Vec<&AuditRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.weights[0].total_cmp(&b.weights[0]));
    out.bounds = json!({ "cor1_bound": cor1_bound(target, layers) });
    out.result = json!({
        "equilibria": rows.len(),
        "consistent": rows.iter().filter(|r| r.returned_below && !r.returned_above).count(),
        "rows": to_value(&rows),
    });
    out.table = Some(table);
    out.plot = Some(Plot {
        title: "Exact threshold and singular-value bound".into(),
        x_label: "first layer weight".into(),
        y_label: "step size".into(),
        series: vec![
            Series::new(
                "2 / lambda_max",
                sorted.iter().map(|r| r.weights[0]).collect(),
                sorted.iter().map(|r| r.exact_threshold).collect(),
            ),
            Series::new(
                "singular bound",
                sorted.iter().map(|r| r.weights[0]).collect(),
                sorted.iter().map(|r| r.thm1_bound).collect(),
            ),
        ],
    });
    Ok(out)
}

fn identity_outcome(rec: &IdentityInitRecord, seed: u64, r: &DMatrix<f64>, bounds: Value) -> Outcome {
    let mut table = Table::new(&["iter", "loss", "layer_error", "product_error"]);
    for h in &rec.history {
        table.push(vec![
            h.iter.to_string(),
            h.loss.to_string(),
            h.layer_error.to_string(),
            h.product_error.to_string(),
        ]);
    }
    let positive = |v: f64| if v > 0.0 { v } else { f64::NAN };
    let plot = Plot {
        title: format!("Identity initialisation, L = {}, step {}", rec.layers, rec.step_size),
        x_label: "iteration".into(),
        y_label: "log10 error".into(),
        series: vec![
            Series::new(
                "layer error",
                rec.history.iter().map(|h| h.iter as f64).collect(),
                rec.history.iter().map(|h| positive(h.layer_error).log10()).collect(),
            ),
            Series::new(
                "product error",
                rec.history.iter().map(|h| h.iter as f64).collect(),
                rec.history.iter().map(|h| positive(h.product_error).log10()).collect(),
            ),
        ],
    };
    let mut result = to_value(rec);
    result["target"] = to_value(&numlab_deep_linear::MatrixJson::from(r));
    Outcome {
        seed: Some(seed),
        bounds,
        result,
        violations: Vec::new(),
        table: Some(table),
        plot: Some(plot),
    }
}

fn check_identity_run(out: &mut Outcome, rec: &IdentityInitRecord, final_tol: f64, final_error: f64) {
    if rec.within_bound {
        out.check(final_error < final_tol, || {
            format!("final error {final_error} is not below {final_tol} within the step bound")
        });
        for d in &rec.directions {
            if let (Some(obs), Some(beta), true) = (d.observed_rate, d.predicted_beta, d.guaranteed) {
                out.check(obs <= beta + 1e-9, || {
                    format!("eigenvalue {}: observed contraction {obs} exceeds {beta}", d.eigenvalue)
                });
            }
        }
    }
    if rec.converged || rec.reached_limit {
        out.check(rec.cor2_satisfied, || {
            format!(
                "converged product {} breaches certificate {}",
                rec.rho_product, rec.cor2_certificate
            )
        });
    }
}

pub fn thm2(p: &mut Params) -> Result<Outcome, CliError> {
    let n = p.count_or("dim", 3)?;
    let layers = p.count_or("layers", 3)?;
    let rho_max = p.positive_f64_or("rho_max", 2.0)?;
    let seed = p.u64_or("seed", 0)?;
    let iters = p.count_or("iters", 100_000)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = random_spd(n, 0.25_f64.min(rho_max), rho_max, &mut rng);
    let rho = spectral_norm(&r);
    let bound = thm2_step_bound(rho, layers);
    let delta = match p.opt_f64("delta")? {
        Some(d) => d,
        None => {
            p.f64_or("delta", bound)?;
            bound
        }
    };
    let opts = IdentityInitOptions {
        max_iters: iters,
        ..Default::default()
    };
    let rec = run_identity_init(&r, layers, delta, &opts)?;
    let bounds = json!({
        "step_bound": bound,
        "cor1_bound": cor1_bound(rho, layers),
        "cor2_certificate": cor2_certificate(layers, delta),
        "predicted_rate": rec.predicted_rate,
    });
    let mut out = identity_outcome(&rec, seed, &r, bounds);
    check_identity_run(&mut out, &rec, 1e-8, rec.final_layer_error);
    out.result["final_error"] = json!(rec.final_layer_error);
    Ok(out)
}

pub fn thm3(p: &mut Params) -> Result<Outcome, CliError> {
    let n = p.count_or("dim", 3)?;
    let layers = p.count_or("layers", 3)?;
    let rho_max = p.positive_f64_or("rho_max", 2.0)?;
    let seed = p.u64_or("seed", 0)?;
    let iters = p.count_or("iters", 200_000)?;
    let negatives = p.count_or("negatives", 1)?;
    let limit_tol = p.positive_f64_or("limit_tol", 1e-7)?;
    if negatives > n {
        return Err(CliError::config("negatives", format!("at most dim = {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo = 0.25_f64.min(rho_max);
    let spectrum: Vec<f64> = (0..n)
        .map(|i| {
            let mag = rng.random_range(lo..=rho_max);
            if i < negatives {
                -mag
            } else {
                mag
            }
        })
        .collect();
    let r = symmetric_with_spectrum(&spectrum, &mut rng);
    let (values, _) = symmetric_eigen(&r);
    let lam_min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let bound = thm3_step_bound(spectral_norm(&r), lam_min, layers);
    let delta = match p.opt_f64("delta")? {
        Some(d) => d,
        None => {
            p.f64_or("delta", bound)?;
            bound
        }
    };
    let opts = IdentityInitOptions {
        max_iters: iters,
        limit_tol: Some(limit_tol),
        ..Default::default()
    };
    let rec = run_identity_init(&r, layers, delta, &opts)?;
    let proj = psd_projection(&r)?;
    let err = (rec.final_net.product() - &proj).norm();
    let bounds = json!({
        "step_bound": bound,
        "lambda_min": lam_min,
        "cor2_certificate": cor2_certificate(layers, delta),
    });
    let mut out = identity_outcome(&rec, seed, &r, bounds);
    check_identity_run(&mut out, &rec, 1e-6, err);
    out.result["projection_error"] = json!(err);
    Ok(out)
}

/// Random-init training runs used to audit the singular-value certificate.
pub fn random_init_runs(
    rng: &mut ChaCha8Rng,
    count: usize,
    delta: f64,
    iters: usize,
) -> Result<Vec<numlab_deep_linear::TrainRecord>, CliError> {
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let n = rng.random_range(1..=3);
        let layers = 2 + k % 3;
        let r = random_spd(n, 0.5, 2.0, rng);
        let net = DeepLinearNet::random(&vec![n; layers + 1], 0.5, rng)?;
        let cfg = GdConfig::new(delta)
            .with_max_iters(iters)
            .with_grad_tol(1e-10)
            .with_record_stride(iters);
        let mut rec = train(&net, &LinearTarget::new(r)?, &cfg)?;
        rec.trajectory = None;
        out.push(rec);
    }
    Ok(out)
}
