use std::collections::BTreeMap;
use std::fmt::Write;

use serde_json::Value;
use steinbound_core::perturbative::BoundReport;
use steinbound_core::stats::log_log_slope;

use crate::error::{HarnessError, HarnessResult};
use crate::record::{ExperimentRecord, Status};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportFormat {
    /// Aligned text, one section per experiment kind.
    Table,
    /// CSV rows for external plotting.
    Rows,
}

/// `(x column, y column)` of the scaling fit for kinds that have one.
fn scaling_axes(kind: &str) -> Option<(&'static str, &'static str)> {
    match kind {
        "theorem-bound" => Some(("n", "theorem_bound")),
        "distance" => Some(("n", "kolmogorov")),
        "dependency" => Some(("n", "t_variance")),
        "mst-clt" => Some(("radius", "kolmogorov")),
        "mst-bound" => Some(("radius", "theorem_bound")),
        "mst-localization" => Some(("k", "delta_gap")),
        _ => None,
    }
}

/// Flatten a row to scalar columns. Statistics become `name` and `name_se`;
/// embedded bound reports and arrays are left out.
fn flatten(row: &Value) -> Vec<(String, String)> {
    let mut out = Vec::new();
    if let Value::Object(map) = row {
        for (k, v) in map {
            match v {
                Value::Object(inner) if inner.contains_key("value") && inner.contains_key("std_error") => {
                    out.push((k.clone(), scalar(&inner["value"])));
                    out.push((format!("{k}_se"), scalar(&inner["std_error"])));
                }
                Value::Object(_) | Value::Array(_) => {}
                other => out.push((k.clone(), scalar(other))),
            }
        }
    }
    out
}

fn scalar(v: &Value) -> String {
    match v {
        Value::Null => "NaN".into(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn numeric(row: &Value, key: &str) -> Option<f64> {
    match row.get(key)? {
        Value::Object(m) => m.get("value")?.as_f64(),
        v => v.as_f64(),
    }
}

struct Section {
    kind: String,
    columns: Vec<String>,
    rows: Vec<(String, BTreeMap<String, String>)>,
    slope: Option<f64>,
}

fn sections(records: &[(String, ExperimentRecord)]) -> Vec<Section> {
    let mut by_kind: BTreeMap<String, Vec<(String, &Value)>> = BTreeMap::new();
    for (name, rec) in records {
        let label = if rec.footer.status == Status::Failed {
            format!("{name} (failed)")
        } else {
            name.clone()
        };
        for row in &rec.rows {
            by_kind.entry(rec.header.kind.clone()).or_default().push((label.clone(), row));
        }
        by_kind.entry(rec.header.kind.clone()).or_default();
    }
    by_kind
        .into_iter()
        .map(|(kind, rows)| {
            let mut columns: Vec<String> = Vec::new();
            let mut flat = Vec::new();
            for (label, row) in &rows {
                let cells = flatten(row);
                for (k, _) in &cells {
                    if !columns.contains(k) {
                        columns.push(k.clone());
                    }
                }
                flat.push((label.clone(), cells.into_iter().collect()));
            }
            let slope = scaling_axes(&kind).and_then(|(x, y)| {
                let pts: Vec<(f64, f64)> = rows
                    .iter()
                    .filter_map(|(_, r)| Some((numeric(r, x)?, numeric(r, y)?)))
                    .collect();
                let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
                log_log_slope(&xs, &ys)
            });
            Section {
                kind,
                columns,
                rows: flat,
                slope,
            }
        })
        .collect()
}

fn load_all(paths: &[std::path::PathBuf]) -> HarnessResult<Vec<(String, ExperimentRecord)>> {
    if paths.is_empty() {
        return Err(HarnessError::Validation("report needs at least one record".into()));
    }
    paths
        .iter()
        .map(|p| Ok((p.display().to_string(), ExperimentRecord::load(p)?)))
        .collect()
}

pub fn report(paths: &[std::path::PathBuf], format: ReportFormat) -> HarnessResult<String> {
    let records = load_all(paths)?;
    let sections = sections(&records);
    Ok(match format {
        ReportFormat::Table => render_table(&sections),
        ReportFormat::Rows => render_rows(&sections)?,
    })
}

fn render_table(sections: &[Section]) -> String {
    let mut out = String::new();
    for s in sections {
        let _ = writeln!(out, "== {} ==", s.kind);
        let mut header = vec!["record".to_string()];
        header.extend(s.columns.iter().cloned());
        if s.slope.is_some() {
            header.push("slope".into());
        }
        let slope = s.slope.map(|v| format!("{v:.4}")).unwrap_or_default();
        let body: Vec<Vec<String>> = s
            .rows
            .iter()
            .map(|(label, cells)| {
                let mut line = vec![label.clone()];
                line.extend(s.columns.iter().map(|c| cells.get(c).cloned().unwrap_or_default()));
                if s.slope.is_some() {
                    line.push(slope.clone());
                }
                line
            })
            .collect();
        let widths: Vec<usize> = (0..header.len())
            .map(|j| body.iter().map(|r| r[j].len()).chain([header[j].len()]).max().unwrap_or(0))
            .collect();
        for line in std::iter::once(&header).chain(&body) {
            let cells: Vec<String> = line.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
            let _ = writeln!(out, "{}", cells.join("  ").trim_end());
        }
        if let (Some(v), Some((x, y))) = (s.slope, scaling_axes(&s.kind)) {
            let _ = writeln!(out, "log-log slope of {y} against {x}: {v:.4}");
        }
        out.push('\n');
    }
    out
}

fn render_rows(sections: &[Section]) -> HarnessResult<String> {
    let mut columns: Vec<String> = vec!["kind".into(), "record".into()];
    for s in sections {
        for c in &s.columns {
            if !columns.contains(c) {
                columns.push(c.clone());
            }
        }
    }
    columns.push("slope".into());
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| HarnessError::Runtime(format!("writing rows: {e}"));
    w.write_record(&columns).map_err(io)?;
    for s in sections {
        for (label, cells) in &s.rows {
            let line: Vec<String> = columns
                .iter()
                .map(|c| match c.as_str() {
                    "kind" => s.kind.clone(),
                    "record" => label.clone(),
                    "slope" => s.slope.map(|v| v.to_string()).unwrap_or_default(),
                    other => cells.get(other).cloned().unwrap_or_default(),
                })
                .collect();
            w.write_record(&line).map_err(io)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Runtime(format!("writing rows: {e}")))?;
    String::from_utf8(bytes).map_err(|e| HarnessError::Runtime(e.to_string()))
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

/// Recompute every stored bound from its components.
pub fn verify(path: &std::path::Path) -> HarnessResult<String> {
    let rec = ExperimentRecord::load(path)?;
    let mut out = String::new();
    let mut checked = 0;
    let mut failures = Vec::new();
    for (i, row) in rec.rows.iter().enumerate() {
        let Some(raw) = row.get("bound") else { continue };
        let bound: BoundReport = serde_json::from_value(raw.clone())
            .map_err(|e| HarnessError::Validation(format!("row {i}: malformed bound components: {e}")))?;
        checked += 1;
        let theorem = bound.recompute_theorem_bound();
        if !close(theorem, bound.theorem_bound.value) {
            failures.push(format!("row {i}: theorem bound {} recomputes to {theorem}", bound.theorem_bound.value));
        }
        if let Some(top) = numeric(row, "theorem_bound") {
            if top != bound.theorem_bound.value {
                failures.push(format!("row {i}: summary theorem bound {top} differs from components"));
            }
        }
        match (bound.corollary_bound, bound.recompute_corollary_bound()) {
            (Some(stored), Some(again)) if !close(stored, again) => {
                failures.push(format!("row {i}: corollary bound {stored} recomputes to {again}"));
            }
            (Some(_), None) => failures.push(format!("row {i}: corollary bound stored without its cap sum")),
            _ => {}
        }
    }
    let _ = writeln!(out, "{}: {} rows, {checked} with bounds", path.display(), rec.rows.len());
    if rec.footer.status == Status::Failed {
        let _ = writeln!(
            out,
            "record is flagged failed: {}",
            rec.footer.error.as_deref().unwrap_or("no message")
        );
    }
    if failures.is_empty() {
        let _ = writeln!(out, "all bounds recompute within 1e-12 relative");
        Ok(out)
    } else {
        Err(HarnessError::Validation(format!("{out}{}", failures.join("\n"))))
    }
}
