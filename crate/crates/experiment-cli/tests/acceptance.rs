//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the verdict lines are always printed.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use numlab_cli::experiments::{linear, scalar};
use numlab_core::{finite_diff_grad, iterate, relative_error, GdConfig, StopReason};
use numlab_deep_linear::sampling::{
    gaussian_matrix, gaussian_vector, random_spd, symmetric_with_spectrum, whitened_inputs,
};
use numlab_deep_linear::{
    error_factors, error_operator, is_symmetric, lambda_max, lemma2_lower_bound, psd_projection, run_identity_init,
    spectral_norm, symmetric_eigen, thm2_step_bound, thm3_step_bound, DMatrix, DeepLinearNet, IdentityInitOptions,
    LinearTarget,
};
use numlab_relu::{
    find_transition, thm4_check, Figure2Config, ReluDataset, ReluMap, ReluTwoLayerNet, TransitionSearch,
};
use numlab_scalar::{example1_basin_set, example1_orbit_amplitude, run_scalar, ScalarProblem};

const CERT_SLACK: f64 = 1e-9;

/// Largest singular value and certificate of one converged deep-linear run.
#[derive(Default)]
struct Certificates {
    checked: usize,
    violations: Vec<String>,
}

impl Certificates {
    fn record(&mut self, what: &str, rho: f64, cert: f64) {
        self.checked += 1;
        if rho > cert * (1.0 + CERT_SLACK) {
            self.violations.push(format!("{what}: {rho} > {cert}"));
        }
    }
}

type Verdict = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn criterion1() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut runs = 0;
    for delta in [0.05, 0.1, 0.5] {
        let cfg = GdConfig::new(delta);
        let basin = example1_basin_set(delta, 2000);
        let expected = example1_orbit_amplitude(delta);
        let mut accepted = 0;
        while accepted < 50 {
            let x0: f64 = rng.random_range(-10.0..=10.0);
            if basin.iter().any(|s| (x0 - s).abs() <= cfg.orbit_tol) {
                continue;
            }
            accepted += 1;
            let (_, tail) = run_scalar(ScalarProblem::Ex1SqrtCusp, delta, x0, &cfg).map_err(|e| e.to_string())?;
            ensure(tail.is_period(2), || format!("delta {delta}, x0 {x0}: {tail:?}"))?;
            let amp = tail.amplitude.unwrap_or(f64::NAN);
            ensure((amp - expected).abs() < 1e-9, || {
                format!("delta {delta}, x0 {x0}: amplitude {amp} vs {expected}")
            })?;
            runs += 1;
        }
    }
    Ok(format!("{runs} runs, all period 2 with amplitude delta^2/4"))
}

fn criterion2() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let x0s: Vec<f64> = (0..1000).map(|_| rng.random_range(-3.0..=4.0)).collect();
    let limits = |delta: f64| -> Result<(usize, usize, usize), String> {
        let cfg = GdConfig::new(delta).with_grad_tol(1e-10).with_record_stride(10_000);
        let (mut at1, mut at2, mut elsewhere) = (0, 0, 0);
        for &x0 in &x0s {
            let (traj, _) = run_scalar(ScalarProblem::Ex2Quartic, delta, x0, &cfg).map_err(|e| e.to_string())?;
            if traj.stop != StopReason::Converged {
                continue;
            }
            let x = traj.final_state().map(|s| s[0]).unwrap_or(f64::NAN);
            if (x - 1.0).abs() < 1e-6 {
                at1 += 1;
            } else if (x - 2.0).abs() < 1e-6 {
                at2 += 1;
            } else {
                elsewhere += 1;
            }
        }
        Ok((at1, at2, elsewhere))
    };
    let (a1, a2, other) = limits(0.3)?;
    ensure(a2 == 0 && other == 0 && a1 > 0, || {
        format!("delta 0.3: {a1} at 1, {a2} at 2, {other} elsewhere")
    })?;
    let (b1, b2, _) = limits(0.15)?;
    ensure(b1 > 0 && b2 > 0, || format!("delta 0.15: {b1} at 1, {b2} at 2"))?;
    Ok(format!(
        "delta 0.3: {a1} converged, all to x = 1; delta 0.15: {b1} to x = 1, {b2} to x = 2"
    ))
}

fn criterion3() -> Verdict {
    let (mut worst, mut widest): (f64, f64) = (0.0, 0.0);
    for order in [4, 6] {
        for delta in [0.05, 0.1] {
            let (b, _) = scalar::example3_boundary(order, delta, 1000, 5000).map_err(|e| e.to_string())?;
            let e = b
                .empirical
                .ok_or_else(|| format!("L {order}, delta {delta}: no boundary in grid"))?;
            let rel = (e - b.threshold).abs() / b.threshold;
            ensure(rel < 0.01 && b.monotone, || {
                format!(
                    "L {order}, delta {delta}: boundary {e} vs {}, single switch {}",
                    b.threshold, b.monotone
                )
            })?;
            let bracket = (b.first_diverging.unwrap_or(e) - b.last_converging.unwrap_or(e)) / b.threshold;
            worst = worst.max(rel);
            widest = widest.max(bracket);
        }
    }
    Ok(format!(
        "largest relative boundary error {worst:.1e}, widest converge/diverge bracket {widest:.1e}"
    ))
}

fn criterion4(certs: &mut Certificates) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let rows = linear::audit_equilibria(
        &mut rng,
        &linear::AuditSettings {
            count: 50,
            target: 4.0,
            layers: 2,
            perturbation: 1e-6,
            band: 0.02,
            ..Default::default()
        },
    )
    .map_err(|e| e.to_string())?;
    for r in &rows {
        ensure(r.returned_below && !r.returned_above, || {
            format!(
                "{:?}: below {}, above {}",
                r.weights, r.returned_below, r.returned_above
            )
        })?;
        ensure(r.exact_threshold <= r.thm1_bound * (1.0 + 1e-12), || {
            format!(
                "{:?}: 2/lambda_max {} > bound {}",
                r.weights, r.exact_threshold, r.thm1_bound
            )
        })?;
        certs.record("equilibrium probe", r.rho_below, r.cert_below);
    }
    Ok(format!(
        "{} equilibria: return iff delta < 2/lambda_max, 2/lambda_max <= singular bound",
        rows.len()
    ))
}

fn criterion5(certs: &mut Certificates) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let mut worst_err: f64 = 0.0;
    let opts = IdentityInitOptions {
        max_iters: 100_000,
        ..Default::default()
    };
    for k in 0..20 {
        let n = rng.random_range(1..=4);
        let r = random_spd(n, 0.25, 3.0, &mut rng);
        let layers = 2 + k % 3;
        let delta = thm2_step_bound(spectral_norm(&r), layers);
        let rec = run_identity_init(&r, layers, delta, &opts).map_err(|e| e.to_string())?;
        ensure(rec.final_layer_error < 1e-8, || {
            format!(
                "run {k}: layer error {} after {} steps",
                rec.final_layer_error, rec.iterations
            )
        })?;
        for d in &rec.directions {
            if let (Some(obs), Some(beta)) = (d.observed_rate, d.predicted_beta) {
                ensure(obs <= beta + 1e-9, || {
                    format!("run {k}, eigenvalue {}: {obs} > {beta}", d.eigenvalue)
                })?;
            }
        }
        worst_err = worst_err.max(rec.final_layer_error);
        certs.record("identity init (PSD)", rec.rho_product, rec.cor2_certificate);
    }
    Ok(format!(
        "20 targets, largest layer error {worst_err:.1e}, contraction within beta"
    ))
}

fn criterion6(certs: &mut Certificates) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let mut worst: f64 = 0.0;
    let opts = IdentityInitOptions {
        max_iters: 200_000,
        limit_tol: Some(1e-7),
        ..Default::default()
    };
    for k in 0..20 {
        let n = rng.random_range(2..=4);
        let negatives = rng.random_range(1..n);
        let spectrum: Vec<f64> = (0..n)
            .map(|i| {
                if i < negatives {
                    -rng.random_range(0.5..=2.0)
                } else {
                    rng.random_range(0.25..=3.0)
                }
            })
            .collect();
        let r = symmetric_with_spectrum(&spectrum, &mut rng);
        let layers = 2 + k % 3;
        let lam_min = spectrum.iter().copied().fold(f64::INFINITY, f64::min);
        let delta = thm3_step_bound(spectral_norm(&r), lam_min, layers);
        let rec = run_identity_init(&r, layers, delta, &opts).map_err(|e| e.to_string())?;
        let proj = psd_projection(&r).map_err(|e| e.to_string())?;
        let err = (rec.final_net.product() - proj).norm();
        ensure(err < 1e-6, || {
            format!("run {k} (L = {layers}): distance {err} to the projection")
        })?;
        worst = worst.max(err);
        certs.record("identity init (indefinite)", rec.rho_product, rec.cor2_certificate);
    }
    Ok(format!("20 targets, largest distance to PSD projection {worst:.1e}"))
}

fn criterion7(mut certs: Certificates) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    let runs = linear::random_init_runs(&mut rng, 20, 0.05, 50_000).map_err(|e| e.to_string())?;
    let mut converged = 0;
    for rec in runs.iter().filter(|r| r.converged) {
        converged += 1;
        certs.record("random init", rec.rho_product, rec.cor2_certificate);
    }
    ensure(converged > 0, || "no random-init run converged".into())?;
    ensure(certs.violations.is_empty(), || certs.violations.join("; "))?;
    Ok(format!(
        "{} converged runs ({converged} from random init), no violations",
        certs.checked
    ))
}

fn criterion8() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(108);
    let (mut converged, mut attempts) = (0, 0);
    let mut tightest: f64 = 0.0;
    while converged < 20 {
        attempts += 1;
        ensure(attempts <= 400, || {
            format!("only {converged} of {attempts} runs converged")
        })?;
        let width = rng.random_range(4..=32);
        let samples = rng.random_range(2..=5);
        let delta = 10f64.powf(rng.random_range(-4.0..-2.0));
        let xs: Vec<f64> = (0..samples).map(|_| rng.random_range(0.1..1.0)).collect();
        let ys: Vec<f64> = (0..samples).map(|_| rng.random_range(-1.0..1.0)).collect();
        let data = ReluDataset::scalar(&xs, &ys).map_err(|e| e.to_string())?;
        let net = ReluTwoLayerNet::random(1, width, 1, &mut rng);
        let cfg = GdConfig::new(delta)
            .with_max_iters(200_000)
            .with_grad_tol(1e-8)
            .with_record_stride(200_000);
        let traj = iterate(&ReluMap::new(&net, &data, delta), &net.to_flat(), &cfg).map_err(|e| e.to_string())?;
        if traj.stop != StopReason::Converged {
            continue;
        }
        converged += 1;
        let last = net
            .from_flat(traj.final_state().unwrap_or_default())
            .map_err(|e| e.to_string())?;
        let rep = thm4_check(&last, &data, delta).map_err(|e| e.to_string())?;
        ensure(rep.satisfied, || {
            format!("width {width}, delta {delta}: {} > {}", rep.lhs, rep.rhs)
        })?;
        tightest = tightest.max(rep.lhs / rep.rhs);
    }
    Ok(format!(
        "20 converged runs ({attempts} attempts), largest lhs/rhs {tightest:.2e}"
    ))
}

fn criterion9() -> Verdict {
    let cfg = Figure2Config::default();
    let t = find_transition(&cfg, &TransitionSearch::default()).map_err(|e| e.to_string())?;
    let (lo, hi) = (&t.lo, &t.hi);
    ensure(lo.tail.is_fixed_point(), || format!("low step {:?}", lo.tail))?;
    ensure(hi.is_stable_period_two(1e-8), || format!("high step {:?}", hi.tail))?;
    ensure(
        1e-4 <= lo.step_size && lo.step_size < hi.step_size && hi.step_size <= 1e-3,
        || format!("steps {} and {}", lo.step_size, hi.step_size),
    )?;
    ensure(lo.bias == hi.bias, || "bias differs between runs".into())?;
    Ok(format!(
        "seed {}: fixed point at {:.3e}, period 2 at {:.3e} (losses {:.6} / {:.6}), {} probes",
        cfg.seed,
        lo.step_size,
        hi.step_size,
        hi.even_loss,
        hi.odd_loss,
        t.probes.len()
    ))
}

fn random_dims(rng: &mut ChaCha8Rng) -> Vec<usize> {
    let depth = rng.random_range(1..=4);
    (0..=depth).map(|_| rng.random_range(1..=4)).collect()
}

fn criterion10() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(110);

    // Deep-linear gradient against central differences.
    for _ in 0..20 {
        let dims = random_dims(&mut rng);
        let net = DeepLinearNet::random(&dims, 0.8, &mut rng).map_err(|e| e.to_string())?;
        let tgt =
            LinearTarget::new(gaussian_matrix(dims[dims.len() - 1], dims[0], &mut rng)).map_err(|e| e.to_string())?;
        let analytic: Vec<f64> = net
            .gradient(&tgt)
            .map_err(|e| e.to_string())?
            .iter()
            .flat_map(|g| g.iter().copied())
            .collect();
        let f = |x: &[f64]| DeepLinearNet::from_flat(&dims, x).unwrap().loss(&tgt).unwrap();
        let numeric = finite_diff_grad(f, &net.to_flat(), None).map_err(|e| e.to_string())?;
        let err = relative_error(&analytic, &numeric);
        ensure(err < 1e-5, || format!("deep-linear gradient, dims {dims:?}: {err}"))?;
    }

    // ReLU gradient against central differences, away from activation kinks.
    let mut checked = 0;
    while checked < 20 {
        let (m, r, n) = (
            rng.random_range(1..=3),
            rng.random_range(1..=6),
            rng.random_range(1..=4),
        );
        let net = ReluTwoLayerNet::random(m, r, n, &mut rng);
        let data = ReluDataset::new(gaussian_matrix(n, 6, &mut rng), gaussian_matrix(m, 6, &mut rng))
            .map_err(|e| e.to_string())?;
        let pre = net.v() * &data.inputs;
        let margin = (0..data.len())
            .flat_map(|i| (0..r).map(move |j| (i, j)))
            .map(|(i, j)| (pre[(j, i)] - net.b()[j]).abs())
            .fold(f64::INFINITY, f64::min);
        if margin <= 1e-3 {
            continue;
        }
        let (dw, dv) = net.grads(&data).map_err(|e| e.to_string())?;
        let analytic: Vec<f64> = dw.iter().chain(dv.iter()).copied().collect();
        let f = |x: &[f64]| net.from_flat(x).unwrap().loss(&data).unwrap();
        let numeric =
            finite_diff_grad(f, &net.to_flat(), Some(1e-6f64.min(margin / 10.0))).map_err(|e| e.to_string())?;
        let err = relative_error(&analytic, &numeric);
        ensure(err < 1e-5, || format!("ReLU gradient: {err}"))?;
        checked += 1;
    }

    // Error operator: symmetric, PSD, and above every Rayleigh lower bound.
    for _ in 0..50 {
        let dims = random_dims(&mut rng);
        let net = DeepLinearNet::random(&dims, 0.8, &mut rng).map_err(|e| e.to_string())?;
        let op = error_operator(&net).map_err(|e| e.to_string())?;
        let scale = op.norm().max(1.0);
        let asym = is_symmetric(&op).unwrap_or(f64::INFINITY);
        ensure(asym <= 1e-12 * scale, || format!("operator asymmetry {asym}"))?;
        let (values, _) = symmetric_eigen(&op);
        let smallest = values.iter().copied().fold(f64::INFINITY, f64::min);
        ensure(smallest >= -1e-10 * scale, || format!("operator eigenvalue {smallest}"))?;
        let lam = lambda_max(&op);
        let (a, b) = error_factors(&net);
        for _ in 0..5 {
            let u = gaussian_vector(dims[dims.len() - 1], &mut rng);
            let v = gaussian_vector(dims[0], &mut rng);
            let lower = lemma2_lower_bound(&a, &b, &u, &v).map_err(|e| e.to_string())?;
            ensure(lower <= lam * (1.0 + 1e-10) + 1e-12, || {
                format!("Rayleigh bound {lower} > {lam}")
            })?;
        }
    }

    // Reduced loss against the loss on whitened samples of a realisable target.
    for _ in 0..20 {
        let mut dims = random_dims(&mut rng);
        let n0 = dims[0];
        let last = dims.len() - 1;
        dims[last] = rng.random_range(1..=4);
        let net = DeepLinearNet::random(&dims, 0.8, &mut rng).map_err(|e| e.to_string())?;
        let x = whitened_inputs(n0, 3, &mut rng);
        let r = gaussian_matrix(dims[last], n0, &mut rng);
        let y = &r * &x;
        let count = x.ncols() as f64;
        let sampled = (net.product() * &x - y).norm_squared() / (2.0 * count);
        let reduced = net
            .loss(&LinearTarget::new(r).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        ensure((sampled - reduced).abs() < 1e-10 * (1.0 + sampled), || {
            format!("sampled loss {sampled} vs reduced {reduced}")
        })?;
    }
    let _ = DMatrix::<f64>::zeros(0, 0);
    Ok("finite differences, operator symmetry/PSD, Rayleigh bound and loss reduction".into())
}

fn main() -> ExitCode {
    let mut certs = Certificates::default();
    let mut failed = 0;
    let mut report = |id: usize, name: &str, budget: Duration, f: &mut dyn FnMut() -> Verdict| {
        let start = Instant::now();
        let verdict = f();
        let took = start.elapsed();
        let verdict = verdict.and_then(|msg| {
            if took <= budget {
                Ok(msg)
            } else {
                Err(format!(
                    "{msg}; took {:.1}s, budget {}s",
                    took.as_secs_f64(),
                    budget.as_secs()
                ))
            }
        });
        match verdict {
            Ok(msg) => println!("PASS criterion {id:2} {name}: {msg} [{:.2}s]", took.as_secs_f64()),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {id:2} {name}: {msg} [{:.2}s]", took.as_secs_f64());
            }
        }
    };
    let secs = Duration::from_secs;
    report(1, "Example 1 orbit", secs(1), &mut criterion1);
    report(2, "Example 2 selectivity", secs(5), &mut criterion2);
    report(3, "Example 3 threshold", secs(5), &mut criterion3);
    report(4, "linearisation consistency", secs(10), &mut || criterion4(&mut certs));
    report(5, "identity init, PSD targets", secs(30), &mut || {
        criterion5(&mut certs)
    });
    report(6, "identity init, indefinite targets", secs(30), &mut || {
        criterion6(&mut certs)
    });
    let certs = std::mem::take(&mut certs);
    let mut certs = Some(certs);
    // No runtime bound is stated for the certificate audit itself.
    report(7, "singular-value certificate", secs(3600), &mut || {
        criterion7(certs.take().unwrap_or_default())
    });
    report(8, "ReLU output certificate", secs(60), &mut criterion8);
    report(9, "step-size transition", secs(300), &mut criterion9);
    report(10, "oracle suites", secs(30), &mut criterion10);
    if failed == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
