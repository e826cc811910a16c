use std::io::Write;

use serde::{Deserialize, Serialize};

use numlab_core::{classify_tail, iterate, GdConfig, TailClass, Trajectory};

use crate::{ScalarError, ScalarMap, ScalarProblem};

/// One `(delta, x0)` cell of a parameter sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub delta: f64,
    pub x0: f64,
    pub verdict: TailClass,
}

/// Runs `problem` from `x0` with step `delta` (overriding `cfg.step_size`)
/// and classifies the tail.
pub fn run_scalar(
    problem: ScalarProblem,
    delta: f64,
    x0: f64,
    cfg: &GdConfig,
) -> Result<(Trajectory, TailClass), ScalarError> {
    problem.validate()?;
    let cfg = GdConfig {
        step_size: delta,
        ..cfg.clone()
    };
    let map = ScalarMap {
        problem,
        step_size: delta,
    };
    let traj = iterate(&map, &[x0], &cfg)?;
    let tail = classify_tail(&traj, &cfg)?;
    Ok((traj, tail))
}

/// Cartesian sweep over step sizes and starting points, row-major in `deltas`.
pub fn sweep(
    problem: ScalarProblem,
    deltas: &[f64],
    x0s: &[f64],
    cfg: &GdConfig,
) -> Result<Vec<SweepRow>, ScalarError> {
    let mut rows = Vec::with_capacity(deltas.len() * x0s.len());
    for &delta in deltas {
        for &x0 in x0s {
            let (_, verdict) = run_scalar(problem, delta, x0, cfg)?;
            rows.push(SweepRow { delta, x0, verdict });
        }
    }
    Ok(rows)
}

/// Writes `delta,x0,verdict,period,amplitude,limit`; absent fields are empty.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<(), ScalarError> {
    let err = |e: csv::Error| ScalarError::Csv(e.to_string());
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["delta", "x0", "verdict", "period", "amplitude", "limit"])
        .map_err(err)?;
    for r in rows {
        let v = &r.verdict;
        wtr.write_record([
            r.delta.to_string(),
            r.x0.to_string(),
            v.label().to_string(),
            v.period.map(|p| p.to_string()).unwrap_or_default(),
            v.amplitude.map(|a| a.to_string()).unwrap_or_default(),
            v.limit_state
                .as_ref()
                .and_then(|s| s.first())
                .map(|x| x.to_string())
                .unwrap_or_default(),
        ])
        .map_err(err)?;
    }
    wtr.flush().map_err(|e| ScalarError::Csv(e.to_string()))
}
