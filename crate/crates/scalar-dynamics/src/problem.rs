use serde::{Deserialize, Serialize};

use numlab_core::{Probe, StepMap};

use crate::ScalarError;

/// The scalar objectives studied here.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarProblem {
    /// `f(x) = (2/3)|x|^(3/2)`.
    Ex1SqrtCusp,
    /// `f(x) = (x^2 + 1)(x - 1)^2 (x - 2)^2`.
    Ex2Quartic,
    /// `f(x) = x^order` for an even order above 2.
    Ex3Power { order: u32 },
    /// Symmetric chain of `layers` equal scalars fitting `lambda`.
    Chain { lambda: f64, layers: u32 },
}

impl ScalarProblem {
    pub fn ex3(order: u32) -> Result<Self, ScalarError> {
        let p = ScalarProblem::Ex3Power { order };
        p.validate().map(|_| p)
    }

    pub fn chain(lambda: f64, layers: u32) -> Result<Self, ScalarError> {
        let p = ScalarProblem::Chain { lambda, layers };
        p.validate().map(|_| p)
    }

    pub fn validate(&self) -> Result<(), ScalarError> {
        match *self {
            ScalarProblem::Ex3Power { order } if order <= 2 || order % 2 == 1 => Err(ScalarError::InvalidOrder(order)),
            ScalarProblem::Chain { layers, .. } if layers < 2 => Err(ScalarError::InvalidDepth(layers)),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ScalarProblem::Ex1SqrtCusp => "ex1",
            ScalarProblem::Ex2Quartic => "ex2",
            ScalarProblem::Ex3Power { .. } => "ex3",
            ScalarProblem::Chain { .. } => "chain",
        }
    }

    /// Objective value. For the chain this is `(w^L - lambda)^2 / 2`.
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            ScalarProblem::Ex1SqrtCusp => 2.0 / 3.0 * x.abs().powf(1.5),
            ScalarProblem::Ex2Quartic => {
                let q = (x - 1.0) * (x - 2.0);
                (x * x + 1.0) * q * q
            }
            ScalarProblem::Ex3Power { order } => x.powi(order as i32),
            ScalarProblem::Chain { lambda, layers } => {
                let r = x.powi(layers as i32) - lambda;
                0.5 * r * r
            }
        }
    }

    /// The descent direction used by the step.
    ///
    /// For the chain this is the partial derivative with respect to one
    /// factor, evaluated where all factors are equal.
    pub fn gradient(&self, x: f64) -> f64 {
        match *self {
            ScalarProblem::Ex1SqrtCusp => x.signum() * x.abs().sqrt(),
            ScalarProblem::Ex2Quartic => {
                let q = (x - 1.0) * (x - 2.0);
                let dq = 2.0 * x - 3.0;
                2.0 * x * q * q + (x * x + 1.0) * 2.0 * q * dq
            }
            ScalarProblem::Ex3Power { order } => order as f64 * x.powi(order as i32 - 1),
            ScalarProblem::Chain { lambda, layers } => {
                let l = layers as i32;
                x.powi(l - 1) * (x.powi(l) - lambda)
            }
        }
    }

    /// Derivative of [`Self::gradient`].
    pub fn second_derivative(&self, x: f64) -> Option<f64> {
        match *self {
            ScalarProblem::Ex1SqrtCusp if x == 0.0 => None,
            ScalarProblem::Ex1SqrtCusp => Some(0.5 / x.abs().sqrt()),
            ScalarProblem::Ex2Quartic => {
                let a = x * x + 1.0;
                let q = (x - 1.0) * (x - 2.0);
                let dq = 2.0 * x - 3.0;
                let b = q * q;
                let db = 2.0 * q * dq;
                let d2b = 2.0 * dq * dq + 4.0 * q;
                Some(2.0 * b + 2.0 * (2.0 * x) * db + a * d2b)
            }
            ScalarProblem::Ex3Power { order } => {
                let l = order as f64;
                Some(l * (l - 1.0) * x.powi(order as i32 - 2))
            }
            ScalarProblem::Chain { lambda, layers } => {
                let l = layers as i32;
                let lf = layers as f64;
                Some((lf - 1.0) * x.powi(l - 2) * (x.powi(l) - lambda) + lf * x.powi(2 * l - 2))
            }
        }
    }
}

/// One gradient-descent step `x - delta * f'(x)` of the named map.
pub fn scalar_step(p: &ScalarProblem, x: f64, delta: f64) -> f64 {
    x - delta * p.gradient(x)
}

/// `f''(x_star)`; the equilibrium is linearly stable for steps below `2 / f''`.
pub fn curvature_at(p: &ScalarProblem, x_star: f64) -> Result<f64, ScalarError> {
    p.second_derivative(x_star)
        .ok_or(ScalarError::NoCurvature(p.name(), x_star))
}

/// A scalar problem with its step size, usable by the iteration engine.
#[derive(Debug, Clone, Copy)]
pub struct ScalarMap {
    pub problem: ScalarProblem,
    pub step_size: f64,
}

impl StepMap for ScalarMap {
    fn step(&self, x: &[f64]) -> Vec<f64> {
        vec![scalar_step(&self.problem, x[0], self.step_size)]
    }

    fn loss(&self, x: &[f64]) -> Option<f64> {
        Some(self.problem.value(x[0]))
    }

    fn grad_norm(&self, x: &[f64]) -> Option<f64> {
        Some(self.problem.gradient(x[0]).abs())
    }

    fn advance(&self, x: &[f64]) -> (Probe, Vec<f64>) {
        let g = self.problem.gradient(x[0]);
        let probe = Probe {
            loss: Some(self.problem.value(x[0])),
            grad_norm: Some(g.abs()),
        };
        (probe, vec![x[0] - self.step_size * g])
    }
}
