use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use numlab_cli::config::canonical_key;
use numlab_cli::{run, run_tool, CliError, Emit, ExperimentConfig, ExperimentKind, Run, Tool};

#[derive(Parser)]
#[command(
    name = "numlab",
    version,
    about = "Gradient descent as a dynamical system: experiments and bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one named experiment.
    #[command(visible_alias = "run")]
    Experiment {
        /// Experiment kind; may be omitted when `--config` names one.
        name: Option<ExperimentKind>,
        #[command(flatten)]
        common: Common,
    },
    /// Grid of scalar runs over step sizes and starting points.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Iterate a scalar problem from one starting point.
    Simulate {
        /// ex1, ex2, ex3 or chain.
        #[arg(long)]
        problem: Option<String>,
        #[arg(long, allow_negative_numbers = true)]
        lambda: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Closed-form step-size bounds for a target.
    Bounds {
        /// Largest singular value of the target.
        #[arg(long, allow_negative_numbers = true)]
        rho: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        lambda_min: Option<f64>,
        /// Whitened dataset CSV defining the target.
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Linear stability at a scalar-chain point or after training on a dataset.
    Stability {
        /// Comma-separated scalar layer weights.
        #[arg(long)]
        weights: Option<String>,
        #[arg(long, allow_negative_numbers = true)]
        target: Option<f64>,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    delta: Option<f64>,
    #[arg(long, alias = "L")]
    layers: Option<u64>,
    #[arg(long, alias = "n")]
    dim: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    iters: Option<u64>,
    #[arg(long, allow_negative_numbers = true)]
    x0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    rho_max: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Artifacts to write, comma separated; the JSON report is always written.
    #[arg(long, value_delimiter = ',')]
    emit: Option<Vec<Emit>>,
    /// Any other parameter, as `key=value` with a JSON or bare-string value.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    fn parameters(&self) -> Result<Vec<(String, Value)>, CliError> {
        let mut out: Vec<(String, Value)> = Vec::new();
        let mut put = |k: &str, v: Option<Value>| {
            if let Some(v) = v {
                out.push((k.to_string(), v));
            }
        };
        put("delta", self.delta.map(Value::from));
        put("layers", self.layers.map(Value::from));
        put("dim", self.dim.map(Value::from));
        put("seed", self.seed.map(Value::from));
        put("iters", self.iters.map(Value::from));
        put("x0", self.x0.map(Value::from));
        put("rho_max", self.rho_max.map(Value::from));
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::config(kv.as_str(), "expected key=value"))?;
            let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
            out.push((canonical_key(k), value));
        }
        Ok(out)
    }
}

fn experiment_config(name: Option<ExperimentKind>, common: &Common) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match (&common.config, name) {
        (Some(path), name) => {
            let cfg = ExperimentConfig::load(path)?;
            if let Some(n) = name.filter(|&n| n != cfg.experiment) {
                return Err(CliError::config(
                    "experiment",
                    format!(
                        "command line says {} but {} says {}",
                        n.name(),
                        path.display(),
                        cfg.experiment.name()
                    ),
                ));
            }
            cfg
        }
        (None, Some(name)) => ExperimentConfig::new(name),
        (None, None) => return Err(CliError::config("experiment", "name an experiment or pass --config")),
    };
    for (k, v) in common.parameters()? {
        cfg.set(&k, v);
    }
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    if let Some(emit) = &common.emit {
        cfg.emit = emit.iter().copied().collect();
    }
    Ok(cfg)
}

fn tool_run(tool: Tool, common: &Common, extra: Vec<(&str, Option<Value>)>) -> Result<Run, CliError> {
    let mut params = BTreeMap::new();
    let (mut out_dir, mut emit): (PathBuf, BTreeSet<Emit>) =
        (PathBuf::from("out"), [Emit::Csv, Emit::Json, Emit::Svg].into());
    if let Some(path) = &common.config {
        // Reuse the parameter block and output settings of an experiment config.
        let cfg = ExperimentConfig::load(path)?;
        params = cfg.parameters;
        out_dir = cfg.output_dir;
        emit = cfg.emit;
    }
    for (k, v) in extra {
        if let Some(v) = v {
            params.insert(k.to_string(), v);
        }
    }
    for (k, v) in common.parameters()? {
        params.insert(k, v);
    }
    if let Some(out) = &common.out {
        out_dir = out.clone();
    }
    if let Some(e) = &common.emit {
        emit = e.iter().copied().collect();
    }
    run_tool(tool, params, out_dir, emit)
}

fn path_value(p: &Option<PathBuf>) -> Option<Value> {
    p.as_ref().map(|p| Value::String(p.display().to_string()))
}

fn dispatch(cli: Cli) -> Result<Run, CliError> {
    match cli.command {
        Command::Experiment { name, common } => run(experiment_config(name, &common)?),
        Command::Sweep { common } => run(experiment_config(Some(ExperimentKind::Sweep), &common)?),
        Command::Simulate {
            problem,
            lambda,
            common,
        } => tool_run(
            Tool::Simulate,
            &common,
            vec![
                ("problem", problem.map(Value::from)),
                ("lambda", lambda.map(Value::from)),
            ],
        ),
        Command::Bounds {
            rho,
            lambda_min,
            dataset,
            common,
        } => tool_run(
            Tool::Bounds,
            &common,
            vec![
                ("rho", rho.map(Value::from)),
                ("lambda_min", lambda_min.map(Value::from)),
                ("dataset", path_value(&dataset)),
            ],
        ),
        Command::Stability {
            weights,
            target,
            dataset,
            common,
        } => tool_run(
            Tool::Stability,
            &common,
            vec![
                ("weights", weights.map(Value::from)),
                ("target", target.map(Value::from)),
                ("dataset", path_value(&dataset)),
            ],
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(run) => {
            println!("{}", run.written.json.display());
            for v in &run.violations {
                eprintln!("violation: {v}");
            }
            ExitCode::from(run.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
