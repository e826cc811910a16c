//! Gradient descent viewed as a discrete-time dynamical system.
//!
//! This crate holds the pieces shared by every experiment: the step
//! configuration ([`GdConfig`]), the fixed-step iteration engine
//! ([`iterate`]), the recorded [`Trajectory`], the tail classifier
//! ([`classify_tail`]) that separates fixed points from periodic orbits and
//! divergence, and a central-difference gradient oracle used by tests of the
//! analytic gradients elsewhere in the workspace.

mod config;
mod engine;
mod error;
mod fd;
mod tail;
mod trajectory;

pub use config::GdConfig;
pub use engine::{iterate, FnMap, GradientMap, Objective, Probe, StepMap};
pub use error::CoreError;
pub use fd::{finite_diff_grad, relative_error};
pub use tail::{classify_tail, TailClass, TailKind};
pub use trajectory::{StopReason, Trajectory};

/// Euclidean norm of a flat state.
pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Euclidean distance between two flat states of equal length.
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
