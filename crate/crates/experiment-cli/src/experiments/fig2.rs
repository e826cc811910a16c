use serde_json::json;

use numlab_core::StopReason;
use numlab_relu::{figure2_experiment, find_transition, Figure2Config, Figure2Record, TransitionSearch};

use crate::config::Params;
use crate::plot::{Plot, Series};
use crate::report::{to_value, Outcome, Table};
use crate::CliError;

fn config_from(p: &mut Params) -> Result<Figure2Config, CliError> {
    let d = Figure2Config::default();
    let mut cfg = Figure2Config {
        seed: p.u64_or("seed", d.seed)?,
        width: p.count_or("width", d.width)?,
        samples: p.count_or("samples", d.samples)?,
        max_iters: p.count_or("iters", d.max_iters)?,
        orbit_tol: p.positive_f64_or("orbit_tol", d.orbit_tol)?,
        grad_tol: p.positive_f64_or("grad_tol", d.grad_tol)?,
        target: d.target,
    };
    cfg.target.jump_at = p.f64_or("jump_at", cfg.target.jump_at)?;
    cfg.target.drop_at = p.f64_or("drop_at", cfg.target.drop_at)?;
    cfg.target.height = p.f64_or("height", cfg.target.height)?;
    cfg.target.slope = p.f64_or("slope", cfg.target.slope)?;
    Ok(cfg)
}

fn label(rec: &Figure2Record) -> String {
    match rec.tail.period {
        Some(p) => format!("{}({p})", rec.tail.label()),
        None => rec.tail.label().to_string(),
    }
}

/// Curves of one record as `(name, values)` pairs, target first.
fn curves(rec: &Figure2Record, suffix: &str) -> Vec<(String, Vec<f64>)> {
    let c = &rec.curves;
    [
        ("f_hat", &c.f_hat),
        ("f_hat_odd", &c.f_hat_odd),
        ("f_hat_even", &c.f_hat_even),
    ]
    .into_iter()
    .filter_map(|(name, v)| v.as_ref().map(|v| (format!("{name}{suffix}"), v.clone())))
    .collect()
}

fn check_certificate(out: &mut Outcome, rec: &Figure2Record) {
    if rec.stop == StopReason::Converged {
        out.check(rec.thm4.satisfied, || {
            format!(
                "converged run at step {} has max |x||f_hat(x)| = {} above 1/delta = {}",
                rec.step_size, rec.thm4.lhs, rec.thm4.rhs
            )
        });
    }
}

fn table_and_plot(records: &[(&Figure2Record, &str)]) -> (Table, Plot) {
    let base = records[0].0;
    let mut columns: Vec<(String, Vec<f64>)> = vec![("f_target".into(), base.curves.f_target.clone())];
    for (rec, suffix) in records {
        columns.extend(curves(rec, suffix));
    }
    let mut headers = vec!["x".to_string()];
    headers.extend(columns.iter().map(|c| c.0.clone()));
    let mut table = Table {
        headers,
        rows: Vec::new(),
    };
    for (i, &x) in base.curves.x.iter().enumerate() {
        let mut row = vec![x.to_string()];
        row.extend(columns.iter().map(|c| c.1[i].to_string()));
        table.push(row);
    }
    let title = records
        .iter()
        .map(|(r, _)| format!("step {}: {}", r.step_size, label(r)))
        .collect::<Vec<_>>()
        .join(", ");
    let plot = Plot {
        title,
        x_label: "x".into(),
        y_label: "f(x)".into(),
        series: columns
            .into_iter()
            .map(|(name, y)| Series::new(name, base.curves.x.clone(), y))
            .collect(),
    };
    (table, plot)
}

fn summary(rec: &Figure2Record) -> serde_json::Value {
    let mut v = to_value(rec);
    if let Some(obj) = v.as_object_mut() {
        // The sampled curves go to the CSV artifact.
        obj.remove("curves");
        obj.insert("verdict".into(), json!(label(rec)));
    }
    v
}

pub fn fig2(p: &mut Params) -> Result<Outcome, CliError> {
    let cfg = config_from(p)?;
    let search = p.bool_or("search", false)?;
    let mut out = Outcome {
        seed: Some(cfg.seed),
        ..Default::default()
    };
    if search {
        let d = TransitionSearch::default();
        let s = TransitionSearch {
            lo: p.positive_f64_or("delta_min", d.lo)?,
            hi: p.positive_f64_or("delta_max", d.hi)?,
            ..d
        };
        let t = find_transition(&cfg, &s)?;
        out.bounds = json!({ "thm4_lo": t.lo.thm4.rhs, "thm4_hi": t.hi.thm4.rhs });
        out.result = json!({
            "lo": summary(&t.lo),
            "hi": summary(&t.hi),
            "probes": to_value(&t.probes),
            "shared_bias": t.lo.bias == t.hi.bias,
        });
        check_certificate(&mut out, &t.lo);
        check_certificate(&mut out, &t.hi);
        let (table, plot) = table_and_plot(&[(&t.lo, "_lo"), (&t.hi, "_hi")]);
        out.table = Some(table);
        out.plot = Some(plot);
    } else {
        let delta = p.f64("delta")?;
        let rec = figure2_experiment(&cfg, delta)?;
        out.bounds = json!({ "thm4": rec.thm4.rhs });
        out.result = summary(&rec);
        check_certificate(&mut out, &rec);
        let (table, plot) = table_and_plot(&[(&rec, "")]);
        out.table = Some(table);
        out.plot = Some(plot);
    }
    Ok(out)
}
