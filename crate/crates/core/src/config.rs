use serde::{Deserialize, Serialize};

use crate::CoreError;

/// Step size, budgets and tolerances for one gradient-descent run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GdConfig {
    pub step_size: f64,
    pub max_iters: usize,
    /// Convergence is declared once the gradient norm drops below this.
    pub grad_tol: f64,
    /// A state whose Euclidean norm reaches this value is declared divergent.
    pub divergence_norm: f64,
    pub record_stride: usize,
    pub seed: u64,
    pub max_period: usize,
    pub orbit_tol: f64,
}

impl GdConfig {
    pub const DEFAULT_DIVERGENCE_NORM: f64 = 1e12;
    pub const DEFAULT_MAX_PERIOD: usize = 8;
    pub const DEFAULT_ORBIT_TOL: f64 = 1e-9;

    pub fn new(step_size: f64) -> Self {
        Self {
            step_size,
            max_iters: 10_000,
            grad_tol: 1e-10,
            divergence_norm: Self::DEFAULT_DIVERGENCE_NORM,
            record_stride: 1,
            seed: 0,
            max_period: Self::DEFAULT_MAX_PERIOD,
            orbit_tol: Self::DEFAULT_ORBIT_TOL,
        }
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_grad_tol(mut self, grad_tol: f64) -> Self {
        self.grad_tol = grad_tol;
        self
    }

    pub fn with_record_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_orbit_tol(mut self, orbit_tol: f64) -> Self {
        self.orbit_tol = orbit_tol;
        self
    }

    pub fn with_max_period(mut self, max_period: usize) -> Self {
        self.max_period = max_period;
        self
    }

    /// Number of trailing states the engine keeps at stride 1.
    pub fn tail_len(&self) -> usize {
        4 * self.max_period
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        let bad = |msg: &str| Err(CoreError::InvalidConfig(msg.to_string()));
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return bad("step_size must be positive and finite");
        }
        if self.max_iters == 0 {
            return bad("max_iters must be positive");
        }
        if !(self.grad_tol > 0.0) {
            return bad("grad_tol must be positive");
        }
        if !(self.grad_tol < self.divergence_norm) {
            return bad("grad_tol must be smaller than divergence_norm");
        }
        if self.record_stride == 0 {
            return bad("record_stride must be positive");
        }
        if self.max_period < 2 {
            return bad("max_period must be at least 2");
        }
        if !(self.orbit_tol > 0.0) {
            return bad("orbit_tol must be positive");
        }
        Ok(())
    }
}
