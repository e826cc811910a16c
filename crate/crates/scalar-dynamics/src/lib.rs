//! Scalar gradient-descent maps with closed-form behaviour.
//!
//! Three one-dimensional objectives show the qualitative effects of the step
//! size: a square-root cusp whose iterates settle on a period-2 orbit, a
//! quartic-times-quadratic with two minima of different curvature, and an
//! even power whose basin of convergence shrinks with the step size. The
//! symmetric scalar chain `w <- w - delta * w^(L-1) * (w^L - lambda)` models a
//! depth-`L` product of scalars trained from `w = 1`.

mod chain;
mod error;
mod example1;
mod example3;
mod problem;
mod sweep;

pub use chain::{chain_predict, ChainPrediction};
pub use error::ScalarError;
pub use example1::{example1_basin_set, example1_orbit_amplitude};
pub use example3::{example3_fate, example3_threshold, Ex3Fate};
pub use problem::{curvature_at, scalar_step, ScalarMap, ScalarProblem};
pub use sweep::{run_scalar, sweep, write_sweep_csv, SweepRow};
