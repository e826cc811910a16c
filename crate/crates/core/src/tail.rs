use serde::{Deserialize, Serialize};

use crate::{distance, norm, CoreError, GdConfig, StopReason, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailKind {
    FixedPoint,
    PeriodicOrbit,
    Divergent,
    Undecided,
}

/// Verdict on the long-run behaviour of a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailClass {
    pub kind: TailKind,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub period: Option<usize>,
    /// Half of the largest pairwise distance between the states of one period.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub amplitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub limit_state: Option<Vec<f64>>,
}

impl TailClass {
    pub fn fixed_point(limit: Vec<f64>) -> Self {
        Self {
            kind: TailKind::FixedPoint,
            period: None,
            amplitude: None,
            limit_state: Some(limit),
        }
    }

    pub fn periodic(period: usize, amplitude: f64) -> Self {
        Self {
            kind: TailKind::PeriodicOrbit,
            period: Some(period),
            amplitude: Some(amplitude),
            limit_state: None,
        }
    }

    fn bare(kind: TailKind) -> Self {
        Self {
            kind,
            period: None,
            amplitude: None,
            limit_state: None,
        }
    }

    pub fn divergent() -> Self {
        Self::bare(TailKind::Divergent)
    }

    pub fn undecided() -> Self {
        Self::bare(TailKind::Undecided)
    }

    pub fn is_fixed_point(&self) -> bool {
        self.kind == TailKind::FixedPoint
    }

    pub fn is_period(&self, p: usize) -> bool {
        self.kind == TailKind::PeriodicOrbit && self.period == Some(p)
    }

    /// Short label used in CSV sweeps.
    pub fn label(&self) -> &'static str {
        match self.kind {
            TailKind::FixedPoint => "fixed_point",
            TailKind::PeriodicOrbit => "periodic_orbit",
            TailKind::Divergent => "divergent",
            TailKind::Undecided => "undecided",
        }
    }
}

/// Classifies the dense tail of `traj`.
///
/// Runs the engine stopped for divergence are `Divergent` and runs stopped on
/// the gradient tolerance are `FixedPoint` at their final state, whatever the
/// length of their tail. Everything else needs `4 * max_period` consecutive
/// iterates at the end of the recording.
pub fn classify_tail(traj: &Trajectory, cfg: &GdConfig) -> Result<TailClass, CoreError> {
    if matches!(traj.stop, StopReason::Divergent { .. }) {
        return Ok(TailClass::divergent());
    }

    let need = cfg.tail_len();
    let dense = dense_suffix_len(&traj.iter_indices);
    if dense < need {
        if traj.stop == StopReason::Converged {
            if let Some(last) = traj.final_state() {
                return Ok(TailClass::fixed_point(last.to_vec()));
            }
        }
        return Err(CoreError::InsufficientTail { have: dense, need });
    }

    let window = &traj.states[traj.len() - need..];
    let tol = cfg.orbit_tol;

    if window.windows(2).all(|w| distance(&w[0], &w[1]) < tol) {
        return Ok(TailClass::fixed_point(window[need - 1].clone()));
    }

    for p in 2..=cfg.max_period {
        let repeats = (0..need - p).all(|i| distance(&window[i], &window[i + p]) < tol);
        if !repeats {
            continue;
        }
        let cycle = &window[need - p..];
        let mut widest = 0.0f64;
        for i in 0..p {
            for j in i + 1..p {
                widest = widest.max(distance(&cycle[i], &cycle[j]));
            }
        }
        let amplitude = 0.5 * widest;
        if amplitude > tol {
            return Ok(TailClass::periodic(p, amplitude));
        }
    }

    if window[need - 1].iter().any(|v| !v.is_finite()) || norm(&window[need - 1]) >= cfg.divergence_norm {
        return Ok(TailClass::divergent());
    }
    Ok(TailClass::undecided())
}

fn dense_suffix_len(iters: &[usize]) -> usize {
    if iters.is_empty() {
        return 0;
    }
    let mut n = 1;
    for w in iters.windows(2).rev() {
        if w[1] == w[0] + 1 {
            n += 1;
        } else {
            break;
        }
    }
    n
}
