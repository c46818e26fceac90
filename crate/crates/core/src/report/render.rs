use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

use super::scan::{OutputFormat, Report, ReportEntry};
use crate::propagate::Verdict;

pub fn render_report(report: &Report, format: OutputFormat) -> Vec<u8> {
    match format {
        OutputFormat::Json => to_canonical_json(report),
        OutputFormat::Text => render_text(report),
        OutputFormat::Markdown => render_markdown(report),
    }
    .into_bytes()
}

/// Canonical JSON: object keys sorted, every float printed with six
/// decimals, two-space indentation and a trailing newline. Integers stay
/// integers, so the output depends only on the value, not on how floats
/// round-trip on a given platform.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("report values are always representable as JSON");
    let mut out = String::new();
    write_value(&mut out, &v, 0);
    out.push('\n');
    out
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&format_float(n.as_f64().unwrap_or(0.0)));
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                pad(out, indent + 1);
                write_value(out, item, indent + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, key) in keys.iter().enumerate() {
                pad(out, indent + 1);
                out.push_str(&Value::String((*key).clone()).to_string());
                out.push_str(": ");
                write_value(out, &map[*key], indent + 1);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push('}');
        }
    }
}

fn pad(out: &mut String, indent: usize) {
    out.extend(std::iter::repeat_n("  ", indent));
}

fn format_float(x: f64) -> String {
    let s = format!("{x:.6}");
    if s == "-0.000000" {
        "0.000000".into()
    } else {
        s
    }
}

/// Entries by descending risk, ties by id.
fn by_risk(report: &Report) -> Vec<&ReportEntry> {
    let mut entries: Vec<&ReportEntry> = report.entries.iter().collect();
    entries.sort_by(|a, b| b.risk_score.total_cmp(&a.risk_score).then_with(|| a.id.cmp(&b.id)));
    entries
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Suspicious => "suspicious",
        Verdict::Unsuspicious => "ok",
    }
}

fn forecast_cell(e: &ReportEntry) -> String {
    if e.forecasts.is_empty() {
        return "-".into();
    }
    e.forecasts
        .iter()
        .map(|h| format!("{}m:{}", h.horizon_months, h.label))
        .collect::<Vec<_>>()
        .join(" ")
}

fn culprit_cell(e: &ReportEntry) -> String {
    if e.culprits.is_empty() {
        return "-".into();
    }
    e.culprits
        .iter()
        .map(|c| format!("{} ({})", c.id, c.label))
        .collect::<Vec<_>>()
        .join(", ")
}

fn summary_line(report: &Report) -> String {
    let s = &report.summary;
    let counts = s
        .label_counts
        .iter()
        .map(|(l, n)| format!("{l}={n}"))
        .collect::<Vec<_>>()
        .join(" ");
    format!(
        "{} libraries, {} suspicious, effort reduction {:.1}% [{counts}]",
        s.total,
        s.suspicious,
        s.effort.effort_reduction * 100.0
    )
}

fn render_text(report: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "depwatch {} report as of {}", report.tool_version, report.as_of);
    let _ = writeln!(out, "{}", summary_line(report));
    let rows: Vec<[String; 6]> = by_risk(report)
        .into_iter()
        .map(|e| {
            [
                e.id.to_string(),
                e.self_label.to_string(),
                verdict_str(e.verdict).to_string(),
                format!("{:.6}", e.risk_score),
                e.action.map_or("-".to_string(), |a| a.to_string()),
                forecast_cell(e),
            ]
        })
        .collect();
    let header = ["library", "label", "verdict", "risk", "action", "forecast"].map(String::from);
    let mut widths = header.clone().map(|h| h.len());
    for r in &rows {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    out.push('\n');
    for r in std::iter::once(&header).chain(&rows) {
        let line: Vec<String> = r
            .iter()
            .zip(widths)
            .map(|(cell, w)| format!("{cell:<w$}"))
            .collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    if !report.warnings.is_empty() {
        out.push_str("\nwarnings:\n");
        for w in &report.warnings {
            let _ = writeln!(out, "  - {w}");
        }
    }
    out
}

fn render_markdown(report: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Dependency maintenance report\n");
    let _ = writeln!(
        out,
        "As of {} (depwatch {}, {} labels).\n",
        report.as_of, report.tool_version, report.metadata.labeler
    );
    let _ = writeln!(out, "{}\n", summary_line(report));
    out.push_str("| Library | Label | Verdict | Risk | Action | Forecast | Culprits |\n");
    out.push_str("|---|---|---|---:|---|---|---|\n");
    for e in by_risk(report) {
        let _ = writeln!(
            out,
            "| `{}` | {} | {} | {:.6} | {} | {} | {} |",
            e.id,
            e.self_label,
            verdict_str(e.verdict),
            e.risk_score,
            e.action.map_or("-".to_string(), |a| a.to_string()),
            forecast_cell(e),
            culprit_cell(e).replace('|', "\\|"),
        );
    }
    if !report.warnings.is_empty() {
        out.push_str("\n## Warnings\n\n");
        for w in &report.warnings {
            let _ = writeln!(out, "- {w}");
        }
    }
    if report.metadata.graph_held_fixed_across_horizons {
        out.push_str("\nForecast verdicts assume today's dependency graph.\n");
    }
    out
}
