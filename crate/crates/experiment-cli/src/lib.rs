//! Command-line front end for the numlab experiments.
//!
//! A run is described by an [`ExperimentConfig`]: the experiment kind, a
//! parameter map, an output directory and the artifact formats to emit.
//! Every run writes a JSON report holding the fully resolved configuration,
//! the seed, the relevant theoretical bounds, the measured values and any
//! violated invariants. Wall-clock metadata goes to a separate
//! `<stem>.meta.json` so that the report itself is byte-for-byte
//! reproducible.

pub mod config;
pub mod dataset;
mod error;
pub mod experiments;
pub mod plot;
pub mod report;
pub mod tools;

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use serde_json::{json, Value};

pub use config::{Emit, ExperimentConfig, ExperimentKind, Params};
pub use dataset::{load_whitened_dataset, parse_whitened_dataset, WhitenedDataset, WHITENING_TOL};
pub use error::CliError;
pub use plot::{emit_plot, render_svg, Plot, Series};
pub use report::{Outcome, Written};

/// Exit status for a run that completed but broke an invariant.
pub const EXIT_VIOLATION: i32 = 3;

/// Result of one run after its artifacts are on disk.
#[derive(Debug, Clone)]
pub struct Run {
    pub report: Value,
    pub written: Written,
    pub violations: Vec<String>,
}

impl Run {
    pub fn exit_code(&self) -> i32 {
        if self.violations.is_empty() {
            0
        } else {
            EXIT_VIOLATION
        }
    }
}

fn stem(config: &ExperimentConfig) -> String {
    let name = config.experiment.name();
    // Figure-2 runs are usually made in pairs; keep both reports side by side.
    match (config.experiment, config.parameters.get("delta")) {
        (ExperimentKind::Fig2, Some(d)) if config.parameters.get("search") != Some(&Value::Bool(true)) => {
            format!("{name}_delta_{d}")
        }
        _ => name.to_string(),
    }
}

/// Runs an experiment and writes its artifacts under `config.output_dir`.
pub fn run(mut config: ExperimentConfig) -> Result<Run, CliError> {
    let outcome = experiments::dispatch(&mut config)?;
    let report = report::report_json(config.experiment.name(), &report::to_value(&config), &outcome);
    let written = report::write_outcome(&config.output_dir, &config.emit, &stem(&config), &report, &outcome)?;
    Ok(Run {
        report,
        written,
        violations: outcome.violations,
    })
}

/// The standalone subcommands that are not experiment kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tool {
    Simulate,
    Bounds,
    Stability,
}

impl Tool {
    pub fn name(self) -> &'static str {
        match self {
            Tool::Simulate => "simulate",
            Tool::Bounds => "bounds",
            Tool::Stability => "stability",
        }
    }

    pub fn allowed_keys(self) -> &'static [&'static str] {
        match self {
            Tool::Simulate => &["problem", "layers", "lambda", "delta", "x0", "iters"],
            Tool::Bounds => &["layers", "dataset", "rho", "lambda_min", "delta"],
            Tool::Stability => &["delta", "dataset", "layers", "seed", "iters", "weights", "target"],
        }
    }
}

/// Runs a standalone subcommand with the given parameters.
pub fn run_tool(
    tool: Tool,
    mut parameters: BTreeMap<String, Value>,
    output_dir: PathBuf,
    emit: BTreeSet<Emit>,
) -> Result<Run, CliError> {
    let allowed = tool.allowed_keys();
    if let Some(key) = parameters.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(CliError::config(
            key,
            format!(
                "not a parameter of {} (expected one of {})",
                tool.name(),
                allowed.join(", ")
            ),
        ));
    }
    let outcome = {
        let mut p = Params::new(&mut parameters);
        match tool {
            Tool::Simulate => tools::simulate(&mut p),
            Tool::Bounds => tools::bounds(&mut p),
            Tool::Stability => tools::stability(&mut p),
        }?
    };
    let config = json!({
        "command": tool.name(),
        "parameters": parameters,
        "output_dir": output_dir,
        "emit": emit,
    });
    let report = report::report_json(tool.name(), &config, &outcome);
    let written = report::write_outcome(&output_dir, &emit, tool.name(), &report, &outcome)?;
    Ok(Run {
        report,
        written,
        violations: outcome.violations,
    })
}
