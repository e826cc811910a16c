use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::Emit;
use crate::plot::{emit_plot, Plot};
use crate::CliError;

/// Rows for the CSV artifact.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Self {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }
}

/// What an experiment produced, before it is written anywhere.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub seed: Option<u64>,
    /// Theorem bounds relevant to the run.
    pub bounds: Value,
    /// Measured values.
    pub result: Value,
    /// Broken invariants or certificates; nonempty means exit code 3.
    pub violations: Vec<String>,
    pub table: Option<Table>,
    pub plot: Option<Plot>,
}

impl Outcome {
    pub fn check(&mut self, ok: bool, message: impl FnOnce() -> String) {
        if !ok {
            self.violations.push(message());
        }
    }
}

/// Paths of the files written for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Written {
    pub json: PathBuf,
    pub meta: PathBuf,
    pub csv: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

pub fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report values serialize")
}

/// Report body. Contains no timestamps, so reruns give identical bytes.
pub fn report_json(name: &str, config: &Value, outcome: &Outcome) -> Value {
    json!({
        "experiment": name,
        "config": config,
        "seed": outcome.seed,
        "bounds": outcome.bounds,
        "result": outcome.result,
        "violations": outcome.violations,
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// Writes `<stem>.json` and `<stem>.meta.json` always, and the CSV and SVG
/// artifacts when requested and available.
pub fn write_outcome(
    dir: &Path,
    emit: &BTreeSet<Emit>,
    stem: &str,
    report: &Value,
    outcome: &Outcome,
) -> Result<Written, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;

    let json_path = dir.join(format!("{stem}.json"));
    let mut body = serde_json::to_string_pretty(report).expect("report serializes");
    body.push('\n');
    write_file(&json_path, body.as_bytes())?;

    let meta_path = dir.join(format!("{stem}.meta.json"));
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let meta = json!({
        "generated_unix_secs": secs,
        "tool_version": env!("CARGO_PKG_VERSION"),
        "report": json_path.file_name().and_then(|n| n.to_str()),
    });
    write_file(
        &meta_path,
        format!("{}\n", serde_json::to_string_pretty(&meta).expect("meta serializes")).as_bytes(),
    )?;

    let mut csv_path = None;
    if let (true, Some(table)) = (emit.contains(&Emit::Csv), &outcome.table) {
        let path = dir.join(format!("{stem}.csv"));
        let file = std::fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let mut wtr = csv::Writer::from_writer(file);
        let csv_err = |e: csv::Error| CliError::io(&path, std::io::Error::other(e));
        wtr.write_record(&table.headers).map_err(csv_err)?;
        for row in &table.rows {
            wtr.write_record(row).map_err(csv_err)?;
        }
        wtr.flush().map_err(|e| CliError::io(&path, e))?;
        csv_path = Some(path);
    }

    let mut svg_path = None;
    if let (true, Some(plot)) = (emit.contains(&Emit::Svg), &outcome.plot) {
        let path = dir.join(format!("{stem}.svg"));
        emit_plot(plot, &path)?;
        svg_path = Some(path);
    }

    Ok(Written {
        json: json_path,
        meta: meta_path,
        csv: csv_path,
        svg: svg_path,
    })
}
