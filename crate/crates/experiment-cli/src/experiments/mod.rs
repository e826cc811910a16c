//! One function per experiment kind. Each reads its parameters through
//! [`Params`], which fills in and records defaults, and returns an
//! [`Outcome`] for the report writer.

pub mod fig2;
pub mod linear;
pub mod scalar;

use crate::config::{ExperimentConfig, ExperimentKind, Params};
use crate::report::Outcome;
use crate::CliError;

/// Runs `config`, resolving every defaulted parameter into it.
pub fn dispatch(config: &mut ExperimentConfig) -> Result<Outcome, CliError> {
    config.validate()?;
    let mut p = Params::new(&mut config.parameters);
    match config.experiment {
        ExperimentKind::Example1 => scalar::example1(&mut p),
        ExperimentKind::Example2 => scalar::example2(&mut p),
        ExperimentKind::Example3 => scalar::example3(&mut p),
        ExperimentKind::Thm1Audit => linear::thm1_audit(&mut p),
        ExperimentKind::Thm2 => linear::thm2(&mut p),
        ExperimentKind::Thm3 => linear::thm3(&mut p),
        ExperimentKind::Fig2 => fig2::fig2(&mut p),
        ExperimentKind::Sweep => scalar::sweep(&mut p),
    }
}
