use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::CoreError;

/// Why the engine stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum StopReason {
    MaxIters,
    Converged,
    Divergent { non_finite: bool },
}

/// Recorded iterates of one run. All lists are aligned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<Vec<f64>>,
    pub losses: Vec<f64>,
    pub grad_norms: Vec<f64>,
    pub iter_indices: Vec<usize>,
    pub stop: StopReason,
}

impl Trajectory {
    pub(crate) fn with_stop(stop: StopReason) -> Self {
        Self {
            states: Vec::new(),
            losses: Vec::new(),
            grad_norms: Vec::new(),
            iter_indices: Vec::new(),
            stop,
        }
    }

    /// Builds a trajectory from consecutive states `0..states.len()` with no
    /// diagnostics. Handy for classifying sequences produced elsewhere.
    pub fn from_states(states: Vec<Vec<f64>>) -> Self {
        let n = states.len();
        Self {
            states,
            losses: vec![f64::NAN; n],
            grad_norms: vec![f64::NAN; n],
            iter_indices: (0..n).collect(),
            stop: StopReason::MaxIters,
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn final_state(&self) -> Option<&[f64]> {
        self.states.last().map(Vec::as_slice)
    }

    pub fn final_iter(&self) -> Option<usize> {
        self.iter_indices.last().copied()
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<(), String> {
        let n = self.states.len();
        if self.losses.len() != n || self.grad_norms.len() != n || self.iter_indices.len() != n {
            return Err("trajectory lists have different lengths".into());
        }
        if self.iter_indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err("iter_indices are not strictly increasing".into());
        }
        Ok(())
    }

    /// Writes `iter,loss,grad_norm,state_0,...,state_{d-1}`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), CoreError> {
        let csv_err = |e: csv::Error| CoreError::Csv(e.to_string());
        let mut wtr = csv::Writer::from_writer(out);
        let mut header = vec!["iter".to_string(), "loss".into(), "grad_norm".into()];
        header.extend((0..self.dim()).map(|i| format!("state_{i}")));
        wtr.write_record(&header).map_err(csv_err)?;
        for i in 0..self.len() {
            let mut row = vec![
                self.iter_indices[i].to_string(),
                self.losses[i].to_string(),
                self.grad_norms[i].to_string(),
            ];
            row.extend(self.states[i].iter().map(f64::to_string));
            wtr.write_record(&row).map_err(csv_err)?;
        }
        wtr.flush().map_err(|e| CoreError::Csv(e.to_string()))
    }
}
