//! Two-layer ReLU networks `x -> W g(V x - b)` trained by full-batch gradient
//! descent on `sum_i |f_hat(x_i) - f(x_i)|^2 / 2` with the bias `b` frozen.
//!
//! Converged solutions must satisfy `max_i |x_i| |f_hat(x_i)| <= 1 / delta`;
//! step sizes past that regime leave the iterates oscillating between two
//! estimates instead of settling.

mod error;
mod figure2;
mod map;
mod net;
mod scalar_kernel;

pub use error::ReluError;
pub use figure2::{
    figure2_experiment, find_transition, Curves, Figure2Config, Figure2Record, PiecewiseTarget, Transition,
    TransitionSearch,
};
pub use map::ReluMap;
pub use net::{thm4_check, ReluDataset, ReluTwoLayerNet, Thm4Report};
pub use scalar_kernel::ScalarKernel;
