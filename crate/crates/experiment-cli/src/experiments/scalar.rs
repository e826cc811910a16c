use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use numlab_core::{GdConfig, StopReason, TailKind};
use numlab_scalar::{
    curvature_at, example1_orbit_amplitude, example3_fate, example3_threshold, run_scalar, Ex3Fate, ScalarProblem,
    SweepRow,
};

use crate::config::Params;
use crate::plot::{Plot, Series};
use crate::report::{to_value, Outcome, Table};
use crate::CliError;

fn fmt(v: f64) -> String {
    v.to_string()
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_default()
}

/// Parses a scalar problem name; `layers` is the power for `ex3` and the
/// depth for `chain`.
pub fn problem_from(name: &str, layers: usize, lambda: f64) -> Result<ScalarProblem, CliError> {
    let layers = u32::try_from(layers).map_err(|_| CliError::config("layers", "too large"))?;
    let p = match name {
        "ex1" => ScalarProblem::Ex1SqrtCusp,
        "ex2" => ScalarProblem::Ex2Quartic,
        "ex3" => ScalarProblem::Ex3Power { order: layers },
        "chain" => ScalarProblem::Chain { lambda, layers },
        other => {
            return Err(CliError::config(
                "problem",
                format!("unknown problem `{other}` (expected ex1, ex2, ex3 or chain)"),
            ))
        }
    };
    p.validate().map_err(|e| CliError::config("layers", e.to_string()))?;
    Ok(p)
}

/// One trajectory of a scalar problem: CSV of iterates, plot of `x` against
/// the iteration count.
pub fn simulate(p: &mut Params, problem: ScalarProblem, delta: f64, x0: f64) -> Result<Outcome, CliError> {
    let iters = p.count_or("iters", 10_000)?;
    let cfg = GdConfig::new(delta).with_max_iters(iters);
    let (traj, tail) = run_scalar(problem, delta, x0, &cfg)?;
    let mut table = Table::new(&["iter", "x", "loss", "grad_norm"]);
    for i in 0..traj.len() {
        table.push(vec![
            traj.iter_indices[i].to_string(),
            fmt(traj.states[i][0]),
            fmt(traj.losses[i]),
            fmt(traj.grad_norms[i]),
        ]);
    }
    let shown = traj.len().min(200);
    let plot = Plot {
        title: format!("{} with step {delta}", problem.name()),
        x_label: "iteration".into(),
        y_label: "x".into(),
        series: vec![Series::new(
            "x[k]",
            traj.iter_indices[..shown].iter().map(|&k| k as f64).collect(),
            traj.states[..shown].iter().map(|s| s[0]).collect(),
        )],
    };
    Ok(Outcome {
        result: json!({
            "problem": to_value(&problem),
            "x0": x0,
            "verdict": to_value(&tail),
            "stop": to_value(&traj.stop),
            "iterations": traj.final_iter(),
            "final_state": traj.final_state().map(|s| s[0]),
        }),
        table: Some(table),
        plot: Some(plot),
        ..Default::default()
    })
}

pub fn example1(p: &mut Params) -> Result<Outcome, CliError> {
    let delta = p.f64("delta")?;
    let x0 = p.f64_or("x0", 0.3)?;
    let predicted = example1_orbit_amplitude(delta);
    let mut out = simulate(p, ScalarProblem::Ex1SqrtCusp, delta, x0)?;
    let verdict = &out.result["verdict"];
    let period = verdict["period"].as_u64();
    let amplitude = verdict["amplitude"].as_f64();
    if let (Some(2), Some(a)) = (period, amplitude) {
        out.check((a - predicted).abs() < 1e-9, || {
            format!("orbit amplitude {a} differs from delta^2/4 = {predicted}")
        });
    }
    out.result["period"] = json!(period);
    out.result["amplitude"] = json!(amplitude);
    out.bounds = json!({ "orbit_amplitude": predicted });
    Ok(out)
}

pub fn example2(p: &mut Params) -> Result<Outcome, CliError> {
    let delta = p.f64("delta")?;
    let seed = p.u64_or("seed", 0)?;
    let samples = p.count_or("samples", 1000)?;
    let iters = p.count_or("iters", 10_000)?;
    let lo = p.f64_or("x0_min", -3.0)?;
    let hi = p.f64_or("x0_max", 4.0)?;
    if !(hi > lo) {
        return Err(CliError::config("x0_max", "must exceed x0_min"));
    }
    let problem = ScalarProblem::Ex2Quartic;
    let cfg = GdConfig::new(delta)
        .with_max_iters(iters)
        .with_grad_tol(1e-10)
        .with_record_stride(iters);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x0s: Vec<f64> = (0..samples).map(|_| rng.random_range(lo..hi)).collect();

    let minima = [1.0, 2.0];
    let thresholds: Vec<f64> = minima
        .iter()
        .map(|&m| curvature_at(&problem, m).map(|c| 2.0 / c))
        .collect::<Result<_, _>>()?;
    let mut counts = [0usize; 2];
    let mut other = 0usize;
    let mut out = Outcome {
        seed: Some(seed),
        ..Default::default()
    };
    let mut table = Table::new(&["x0", "verdict", "limit"]);
    let mut pairs = Vec::with_capacity(samples);
    for &x0 in &x0s {
        let (traj, tail) = run_scalar(problem, delta, x0, &cfg)?;
        let last = traj.final_state().map(|s| s[0]).unwrap_or(f64::NAN);
        let hit = (traj.stop == StopReason::Converged)
            .then(|| minima.iter().position(|&m| (last - m).abs() < 1e-6))
            .flatten();
        match hit {
            Some(k) => {
                counts[k] += 1;
                out.check(delta < thresholds[k], || {
                    format!(
                        "converged to x = {} from {x0} although delta >= {}",
                        minima[k], thresholds[k]
                    )
                });
            }
            None => other += 1,
        }
        table.push(vec![fmt(x0), tail.label().into(), fmt(last)]);
        pairs.push((x0, last));
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    out.bounds = json!({ "delta_max_x1": thresholds[0], "delta_max_x2": thresholds[1] });
    out.result = json!({
        "converged_to_1": counts[0],
        "converged_to_2": counts[1],
        "not_converged": other,
    });
    out.table = Some(table);
    out.plot = Some(Plot {
        title: format!("Final iterate against start, step {delta}"),
        x_label: "x0".into(),
        y_label: "final x".into(),
        series: vec![Series::new(
            "final x",
            pairs.iter().map(|p| p.0).collect(),
            pairs.iter().map(|p| p.1).collect(),
        )],
    });
    Ok(out)
}

/// Boundary between converging and diverging starts on a uniform `|x0|`
/// grid over `[0.5 T, 1.5 T]`, where `T` is the predicted threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ex3Boundary {
    pub threshold: f64,
    pub last_converging: Option<f64>,
    pub first_diverging: Option<f64>,
    /// Midpoint of the two, or `None` when the grid does not bracket it.
    pub empirical: Option<f64>,
    /// The fates switch exactly once along the grid.
    pub monotone: bool,
}

pub fn example3_boundary(
    order: u32,
    delta: f64,
    samples: usize,
    iters: usize,
) -> Result<(Ex3Boundary, Vec<(f64, Ex3Fate)>), CliError> {
    let threshold = example3_threshold(order, delta)?;
    let grid: Vec<f64> = (0..samples)
        .map(|i| threshold * (0.5 + i as f64 / (samples.max(2) - 1) as f64))
        .collect();
    let fates: Vec<(f64, Ex3Fate)> = grid
        .iter()
        .map(|&x0| example3_fate(order, delta, x0, iters).map(|f| (x0, f)))
        .collect::<Result<_, _>>()?;
    let last_converging = fates.iter().rev().find(|f| f.1 == Ex3Fate::Converges).map(|f| f.0);
    let first_diverging = fates.iter().find(|f| f.1 == Ex3Fate::Diverges).map(|f| f.0);
    let switches = fates.windows(2).filter(|w| w[0].1 != w[1].1).count();
    let empirical = match (last_converging, first_diverging) {
        (Some(a), Some(b)) if a < b => Some(0.5 * (a + b)),
        _ => None,
    };
    Ok((
        Ex3Boundary {
            threshold,
            last_converging,
            first_diverging,
            empirical,
            monotone: switches == 1,
        },
        fates,
    ))
}

pub fn example3(p: &mut Params) -> Result<Outcome, CliError> {
    let delta = p.f64("delta")?;
    let layers = p.usize_or("layers", 4)?;
    let samples = p.count_or("samples", 1000)?;
    let iters = p.count_or("iters", 5000)?;
    let order = u32::try_from(layers).map_err(|_| CliError::config("layers", "too large"))?;
    ScalarProblem::ex3(order).map_err(|e| CliError::config("layers", e.to_string()))?;
    let (b, fates) = example3_boundary(order, delta, samples, iters)?;

    let mut out = Outcome::default();
    let rel = b.empirical.map(|e| (e - b.threshold).abs() / b.threshold);
    out.check(rel.is_some_and(|r| r < 0.01), || {
        format!(
            "empirical boundary {:?} is not within 1% of {}",
            b.empirical, b.threshold
        )
    });
    out.bounds = json!({ "threshold": b.threshold });
    out.result = json!({
        "empirical_boundary": b.empirical,
        "relative_error": rel,
        "last_converging": b.last_converging,
        "first_diverging": b.first_diverging,
        "single_switch": b.monotone,
    });
    let code = |f: Ex3Fate| match f {
        Ex3Fate::Converges => 1.0,
        Ex3Fate::Diverges => 0.0,
        Ex3Fate::Undetermined => 0.5,
    };
    let mut table = Table::new(&["x0", "fate"]);
    for &(x0, f) in &fates {
        table.push(vec![fmt(x0), format!("{f:?}").to_lowercase()]);
    }
    out.table = Some(table);
    out.plot = Some(Plot {
        title: format!("Fate of descent on x^{layers} with step {delta}"),
        x_label: "|x0|".into(),
        y_label: "converges (1) / diverges (0)".into(),
        series: vec![Series::new(
            "fate",
            fates.iter().map(|f| f.0).collect(),
            fates.iter().map(|f| code(f.1)).collect(),
        )],
    });
    Ok(out)
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Grid of `(delta, x0)` cells, run in parallel; each cell is independent.
pub fn sweep(p: &mut Params) -> Result<Outcome, CliError> {
    let name = p.str_or("problem", "ex1")?;
    let layers = p.usize_or("layers", 4)?;
    let lambda = p.f64_or("lambda", 4.0)?;
    let problem = problem_from(&name, layers, lambda)?;
    let d_lo = p.positive_f64_or("delta_min", 0.05)?;
    let d_hi = p.positive_f64_or("delta_max", 0.5)?;
    let d_n = p.count_or("delta_steps", 10)?;
    let x_lo = p.f64_or("x0_min", -2.0)?;
    let x_hi = p.f64_or("x0_max", 2.0)?;
    let x_n = p.count_or("x0_steps", 21)?;
    let iters = p.count_or("iters", 10_000)?;
    if d_hi < d_lo {
        return Err(CliError::config("delta_max", "must not be below delta_min"));
    }

    let cells: Vec<(f64, f64)> = linspace(d_lo, d_hi, d_n)
        .into_iter()
        .flat_map(|d| linspace(x_lo, x_hi, x_n).into_iter().map(move |x| (d, x)))
        .collect();
    let rows: Vec<SweepRow> = cells
        .par_iter()
        .map(|&(delta, x0)| {
            let cfg = GdConfig::new(delta).with_max_iters(iters).with_record_stride(iters);
            run_scalar(problem, delta, x0, &cfg).map(|(_, verdict)| SweepRow { delta, x0, verdict })
        })
        .collect::<Result<_, _>>()?;

    let count = |k: TailKind| rows.iter().filter(|r| r.verdict.kind == k).count();
    let mut table = Table::new(&["delta", "x0", "verdict", "period", "amplitude", "limit"]);
    for r in &rows {
        let v = &r.verdict;
        table.push(vec![
            fmt(r.delta),
            fmt(r.x0),
            v.label().into(),
            v.period.map(|p| p.to_string()).unwrap_or_default(),
            opt(v.amplitude),
            opt(v.limit_state.as_ref().and_then(|s| s.first().copied())),
        ]);
    }
    let series = linspace(d_lo, d_hi, d_n)
        .into_iter()
        .enumerate()
        .filter(|(k, _)| *k == 0 || *k + 1 == d_n || d_n <= 6)
        .map(|(k, d)| {
            let row = &rows[k * x_n..(k + 1) * x_n];
            Series::new(
                format!("delta = {d}"),
                row.iter().map(|r| r.x0).collect(),
                row.iter()
                    .map(|r| match r.verdict.kind {
                        TailKind::FixedPoint => 0.0,
                        TailKind::PeriodicOrbit => r.verdict.period.unwrap_or(0) as f64,
                        TailKind::Divergent => -1.0,
                        TailKind::Undecided => f64::NAN,
                    })
                    .collect(),
            )
        })
        .collect();
    Ok(Outcome {
        result: json!({
            "problem": to_value(&problem),
            "cells": rows.len(),
            "fixed_point": count(TailKind::FixedPoint),
            "periodic_orbit": count(TailKind::PeriodicOrbit),
            "divergent": count(TailKind::Divergent),
            "undecided": count(TailKind::Undecided),
        }),
        table: Some(table),
        plot: Some(Plot {
            title: format!("Tail classes of {}", problem.name()),
            x_label: "x0".into(),
            y_label: "period (0 fixed, -1 divergent)".into(),
            series,
        }),
        ..Default::default()
    })
}
