//! CSV and JSON writers. CSV carries the numbers, JSON the metadata.
//!
//! Floats are written as `{:.16e}` (17 significant digits), which parses back
//! to the identical `f64`.

use std::io::Write;

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Result, SdeError};
use crate::integrators::Trajectory;

use super::experiment::ConvergenceReport;
use super::probe::ProbeReport;

/// Version of the CSV/JSON layout.
pub const SPEC_VERSION: &str = "1.0.0";

pub const CONVERGENCE_COLUMNS: [&str; 4] = ["dt", "rmse", "stderr", "realizations"];
pub const PROBE_COLUMNS: [&str; 4] = ["dt", "mse", "stderr", "realizations"];

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_err(e: csv::Error) -> SdeError {
    SdeError::Io(e.to_string())
}

fn rows_to_csv<W: Write>(out: W, header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_convergence_csv<W: Write>(report: &ConvergenceReport, out: W) -> Result<()> {
    let header = CONVERGENCE_COLUMNS.map(String::from);
    let rows = (0..report.dt_list.len()).map(|k| {
        vec![
            format_float(report.dt_list[k]),
            format_float(report.rmse_list[k]),
            format_float(report.stderr_list[k]),
            report.realizations.to_string(),
        ]
    });
    rows_to_csv(out, &header, rows)
}

pub fn write_probe_csv<W: Write>(report: &ProbeReport, out: W) -> Result<()> {
    let header = PROBE_COLUMNS.map(String::from);
    let rows = report.rows.iter().map(|r| {
        vec![
            format_float(r.dt),
            format_float(r.mse),
            format_float(r.stderr),
            report.realizations.to_string(),
        ]
    });
    rows_to_csv(out, &header, rows)
}

/// Columns `t, y_1..y_d, tag_1..tag_d`. The initial row has `-` tags.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, out: W) -> Result<()> {
    let d = traj.dim;
    let mut header = vec!["t".to_string()];
    header.extend((1..=d).map(|i| format!("y_{i}")));
    header.extend((1..=d).map(|i| format!("tag_{i}")));
    let rows = traj.times.iter().zip(&traj.states).enumerate().map(|(n, (t, y))| {
        let mut row = Vec::with_capacity(1 + 2 * d);
        row.push(format_float(*t));
        row.extend(y.iter().map(|v| format_float(*v)));
        match n.checked_sub(1).and_then(|k| traj.tags.get(k)) {
            Some(tags) => row.extend(tags.iter().map(|t| t.code().to_string())),
            None => row.extend(std::iter::repeat_n("-".to_string(), d)),
        }
        row
    });
    rows_to_csv(out, &header, rows)
}

/// `value` serialized as an object with `spec_version` and `kind` added.
pub fn to_json<T: Serialize>(kind: &str, value: &T) -> Result<Value> {
    let mut v = serde_json::to_value(value).map_err(|e| SdeError::Io(e.to_string()))?;
    match v.as_object_mut() {
        Some(obj) => {
            obj.insert("spec_version".into(), json!(SPEC_VERSION));
            obj.insert("kind".into(), json!(kind));
            Ok(v)
        }
        None => Ok(json!({ "spec_version": SPEC_VERSION, "kind": kind, "value": v })),
    }
}

pub fn write_json<W: Write>(value: &Value, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| SdeError::Io(e.to_string()))?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn convergence_json(report: &ConvergenceReport) -> Result<Value> {
    to_json("convergence", report)
}

pub fn probe_json(report: &ProbeReport) -> Result<Value> {
    to_json("probe", report)
}
