use std::collections::VecDeque;

use crate::{norm, CoreError, GdConfig, StopReason, Trajectory};

/// Diagnostics evaluated at a state before it is advanced.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Probe {
    pub loss: Option<f64>,
    pub grad_norm: Option<f64>,
}

/// A deterministic state-to-state map.
///
/// `advance` returns the diagnostics at `x` together with the image of `x`.
/// Implementors that can share work between the two (every gradient map)
/// should override it.
pub trait StepMap {
    fn step(&self, x: &[f64]) -> Vec<f64>;

    fn loss(&self, _x: &[f64]) -> Option<f64> {
        None
    }

    fn grad_norm(&self, _x: &[f64]) -> Option<f64> {
        None
    }

    fn advance(&self, x: &[f64]) -> (Probe, Vec<f64>) {
        let probe = Probe {
            loss: self.loss(x),
            grad_norm: self.grad_norm(x),
        };
        (probe, self.step(x))
    }
}

/// Wraps a bare closure as a [`StepMap`] without diagnostics.
pub struct FnMap<F>(pub F);

impl<F> StepMap for FnMap<F>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    fn step(&self, x: &[f64]) -> Vec<f64> {
        (self.0)(x)
    }
}

/// A differentiable objective over a flat parameter vector.
pub trait Objective {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
}

/// The gradient-descent map `x <- x - step_size * grad f(x)`.
pub struct GradientMap<O> {
    pub objective: O,
    pub step_size: f64,
}

impl<O> GradientMap<O> {
    pub fn new(objective: O, step_size: f64) -> Self {
        Self { objective, step_size }
    }
}

impl<O: Objective> StepMap for GradientMap<O> {
    fn step(&self, x: &[f64]) -> Vec<f64> {
        self.advance(x).1
    }

    fn loss(&self, x: &[f64]) -> Option<f64> {
        Some(self.objective.value(x))
    }

    fn grad_norm(&self, x: &[f64]) -> Option<f64> {
        Some(norm(&self.objective.gradient(x)))
    }

    fn advance(&self, x: &[f64]) -> (Probe, Vec<f64>) {
        let g = self.objective.gradient(x);
        let next = x.iter().zip(&g).map(|(xi, gi)| xi - self.step_size * gi).collect();
        let probe = Probe {
            loss: Some(self.objective.value(x)),
            grad_norm: Some(norm(&g)),
        };
        (probe, next)
    }
}

struct Entry {
    iter: usize,
    state: Vec<f64>,
    loss: f64,
    grad_norm: f64,
}

/// Runs `step_map` from `x0` for at most `cfg.max_iters` steps.
///
/// Every `record_stride`-th iterate is recorded, and the last
/// `cfg.tail_len()` iterates are always kept at stride 1 so that the tail can
/// be classified. The run stops early when the map reports a gradient norm
/// below `grad_tol`, or when the state norm reaches `divergence_norm` or a
/// coordinate stops being finite. The latter is reported through
/// [`StopReason::Divergent`] rather than as an error.
pub fn iterate<M: StepMap + ?Sized>(step_map: &M, x0: &[f64], cfg: &GdConfig) -> Result<Trajectory, CoreError> {
    cfg.validate()?;
    if let Some(i) = x0.iter().position(|v| !v.is_finite()) {
        return Err(CoreError::NonFiniteState(i));
    }

    let tail_len = cfg.tail_len();
    let mut strided: Vec<Entry> = Vec::new();
    let mut tail: VecDeque<Entry> = VecDeque::with_capacity(tail_len + 1);
    let mut x = x0.to_vec();
    let mut stop = StopReason::MaxIters;

    for k in 0..=cfg.max_iters {
        let finite = x.iter().all(|v| v.is_finite());
        if !finite || norm(&x) >= cfg.divergence_norm {
            stop = StopReason::Divergent { non_finite: !finite };
            push(&mut strided, &mut tail, tail_len, cfg.record_stride, entry(k, x, None));
            break;
        }

        let (probe, next) = step_map.advance(&x);
        let converged = matches!(probe.grad_norm, Some(g) if g < cfg.grad_tol);
        let last = converged || k == cfg.max_iters;
        push(
            &mut strided,
            &mut tail,
            tail_len,
            cfg.record_stride,
            entry(k, x, Some(probe)),
        );
        if converged {
            stop = StopReason::Converged;
        }
        if last {
            break;
        }
        x = next;
    }

    let first_tail = tail.front().map(|e| e.iter).unwrap_or(usize::MAX);
    let entries = strided.into_iter().filter(|e| e.iter < first_tail).chain(tail);

    let mut traj = Trajectory::with_stop(stop);
    for e in entries {
        traj.iter_indices.push(e.iter);
        traj.states.push(e.state);
        traj.losses.push(e.loss);
        traj.grad_norms.push(e.grad_norm);
    }
    Ok(traj)
}

fn entry(iter: usize, state: Vec<f64>, probe: Option<Probe>) -> Entry {
    let probe = probe.unwrap_or_default();
    Entry {
        iter,
        state,
        loss: probe.loss.unwrap_or(f64::NAN),
        grad_norm: probe.grad_norm.unwrap_or(f64::NAN),
    }
}

fn push(strided: &mut Vec<Entry>, tail: &mut VecDeque<Entry>, tail_len: usize, stride: usize, e: Entry) {
    // Entries leaving the tail window survive only if they fall on the stride.
    if tail.len() == tail_len {
        if let Some(old) = tail.pop_front() {
            if old.iter % stride == 0 {
                strided.push(old);
            }
        }
    }
    tail.push_back(e);
}
