//! Reports as CSV, JSON and fixed-width text.
//!
//! Numbers are rounded to two decimals only here, half away from zero.
//! JSON output keeps full precision so that it can be read back unchanged.

use std::fmt::Write as _;
use std::str::FromStr;

use ehmi_core::answers::NormalizedAnswerSet;
use ehmi_core::report::{ComparisonReport, SensitivityReport};
use ehmi_core::schema::Category;
use ehmi_core::scoring::Evaluation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Text,
}

impl FromStr for Format {
    type Err = ExportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "text" | "txt" => Ok(Format::Text),
            _ => Err(ExportError::Format(s.to_string())),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ExportError {
    #[error("unsupported format {0:?} (expected csv, json or text)")]
    Format(String),
    #[error("nothing to export")]
    Empty,
    #[error("{0}")]
    Mismatch(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Two-decimal presentation value, ties away from zero (34.125 -> 34.13).
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

pub fn fmt2(x: f64) -> String {
    let r = round2(x);
    // avoid "-0.00"
    format!("{:.2}", if r == 0.0 { 0.0 } else { r })
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String, ExportError> {
    let bytes = w.into_inner().map_err(|e| ExportError::Mismatch(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn json(value: &impl serde::Serialize) -> Result<String, ExportError> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

const LABEL_WIDTH: usize = 24;

fn column_width(names: &[&str]) -> usize {
    names.iter().map(|n| n.chars().count()).max().unwrap_or(0).max(8) + 2
}

fn weights_label(report: &ComparisonReport) -> String {
    report.weights.as_array().iter().map(|w| format!("{w}")).collect::<Vec<_>>().join(" ")
}

pub fn export_comparison(report: &ComparisonReport, format: Format) -> Result<String, ExportError> {
    if report.entries.is_empty() {
        return Err(ExportError::Empty);
    }
    match format {
        Format::Json => json(report),
        Format::Csv => {
            let mut w = csv_writer();
            let mut header = vec!["proposal".to_string()];
            header.extend(Category::ALL.iter().map(|c| c.prefix().to_string()));
            header.extend(["TOTAL", "PERCENT", "RANK"].map(String::from));
            w.write_record(&header)?;
            for e in &report.entries {
                let rank = report.ranking.iter().find(|r| r.proposal == e.proposal).map_or(0, |r| r.rank);
                let mut row = vec![e.proposal.clone()];
                row.extend(e.scores.as_array().iter().map(|s| fmt2(*s)));
                row.extend([fmt2(e.total), fmt2(e.percent), rank.to_string()]);
                w.write_record(&row)?;
            }
            finish(w)
        }
        Format::Text => {
            let names: Vec<&str> = report.entries.iter().map(|e| e.proposal.as_str()).collect();
            let width = column_width(&names);
            let mut out = String::new();
            let variant = report.variant.as_deref().unwrap_or("default");
            let _ = writeln!(out, "FINAL RESULTS (weights {}; readability {variant})", weights_label(report));
            let _ = write!(out, "{:<LABEL_WIDTH$}", "");
            for n in &names {
                let _ = write!(out, "{n:>width$}");
            }
            out.push('\n');
            let mut row = |label: &str, values: Vec<String>| {
                let _ = write!(out, "{label:<LABEL_WIDTH$}");
                for v in values {
                    let _ = write!(out, "{v:>width$}");
                }
                out.push('\n');
            };
            for c in Category::ALL {
                row(c.title(), report.entries.iter().map(|e| fmt2(e.scores.get(c))).collect());
            }
            row("TOTAL", report.entries.iter().map(|e| fmt2(e.total)).collect());
            row("%", report.entries.iter().map(|e| format!("{}%", fmt2(e.percent))).collect());
            out.push_str("\nRANKING\n");
            for r in &report.ranking {
                let tie = if r.tied { "  (tied)" } else { "" };
                let _ = writeln!(out, "{:>3}. {:<20}{:>8}{tie}", r.rank, r.proposal, fmt2(r.total));
            }
            Ok(out)
        }
    }
}

pub fn import_comparison(text: &str) -> Result<ComparisonReport, ExportError> {
    Ok(serde_json::from_str(text)?)
}

pub fn export_sensitivity(report: &SensitivityReport, format: Format) -> Result<String, ExportError> {
    match format {
        Format::Json => json(report),
        Format::Csv => {
            let mut w = csv_writer();
            let mut header = vec!["point".to_string()];
            header.extend(Category::ALL.iter().map(|c| format!("w_{}", c.prefix())));
            header.extend(report.proposals.iter().cloned());
            header.extend(["winner", "tied"].map(String::from));
            w.write_record(&header)?;
            for (i, p) in report.points.iter().enumerate() {
                let mut row = vec![i.to_string()];
                row.extend(p.weights.as_array().iter().map(|v| format!("{}", round4(*v))));
                row.extend(p.totals.iter().map(|t| fmt2(*t)));
                row.extend([p.winner.clone(), p.tied.to_string()]);
                w.write_record(&row)?;
            }
            finish(w)
        }
        Format::Text => {
            let mut out = String::new();
            let vary: Vec<&str> = report.spec.vary.iter().map(|c| c.prefix()).collect();
            let fixed: Vec<String> = report.spec.fixed.iter().map(|(c, v)| format!("{c}={v}")).collect();
            let _ = writeln!(
                out,
                "WEIGHT SWEEP (vary: {}; fixed: {}; step {}; max {})",
                if vary.is_empty() { "none".into() } else { vary.join(", ") },
                if fixed.is_empty() { "none".into() } else { fixed.join(", ") },
                report.spec.step,
                report.spec.max
            );
            let _ = writeln!(out, "grid points: {} (skipped {})", report.points.len(), report.skipped);
            let _ = writeln!(out, "baseline winner: {}", report.baseline_winner);
            let _ = writeln!(out, "rank stability: {}%", fmt2(report.rank_stability * 100.0));
            let mut wins: Vec<(&str, usize)> = report
                .proposals
                .iter()
                .map(|p| (p.as_str(), report.points.iter().filter(|g| &g.winner == p).count()))
                .collect();
            wins.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
            out.push_str("\nWINS\n");
            for (p, n) in wins {
                let _ = writeln!(out, "{p:<24}{n:>8}");
            }
            Ok(out)
        }
    }
}

fn round4(x: f64) -> f64 {
    (x * 10_000.0).round() / 10_000.0
}

/// One row per proposal (per element for standardization and positioning):
/// every question's points, then the category score.
pub fn export_category(
    category: Category,
    rows: &[(&NormalizedAnswerSet, &Evaluation)],
    format: Format,
) -> Result<String, ExportError> {
    if rows.is_empty() {
        return Err(ExportError::Empty);
    }
    let per_element = matches!(category, Category::S | Category::P);
    let ids: Vec<String> = rows[0].0.blocks(category)[0].items.iter().map(|r| r.id.clone()).collect();
    let mut table: Vec<(String, Option<String>, Vec<f64>, f64)> = Vec::new();
    for (answers, eval) in rows {
        for block in answers.blocks(category) {
            let found: Vec<&str> = block.items.iter().map(|r| r.id.as_str()).collect();
            if found != ids.iter().map(String::as_str).collect::<Vec<_>>() {
                return Err(ExportError::Mismatch(format!(
                    "{} was scored against a different schema",
                    answers.proposal
                )));
            }
            let element = per_element.then(|| block.name.clone());
            table.push((answers.proposal.clone(), element, block.values().collect(), eval.scores.get(category)));
        }
    }
    match format {
        Format::Json => {
            let rows: Vec<_> = table
                .iter()
                .map(|(p, e, v, s)| {
                    serde_json::json!({
                        "proposal": p,
                        "element": e,
                        "values": ids.iter().cloned().zip(v.iter().copied()).collect::<std::collections::BTreeMap<_, _>>(),
                        "score": s,
                    })
                })
                .collect();
            json(&serde_json::json!({ "category": category, "rows": rows }))
        }
        Format::Csv => {
            let mut w = csv_writer();
            let mut header = vec!["proposal".to_string()];
            if per_element {
                header.push("element".into());
            }
            header.extend(ids.iter().cloned());
            header.push("TOTAL".into());
            w.write_record(&header)?;
            for (p, e, values, score) in &table {
                let mut row = vec![p.clone()];
                row.extend(e.clone());
                row.extend(values.iter().map(|v| fmt2(*v)));
                row.push(fmt2(*score));
                w.write_record(&row)?;
            }
            finish(w)
        }
        Format::Text => {
            let mut out = String::new();
            let _ = writeln!(out, "{} ({})", category.title().to_uppercase(), category);
            let label = |p: &str, e: &Option<String>| match e {
                Some(e) => format!("{p} / {e}"),
                None => p.to_string(),
            };
            let labels: Vec<String> = table.iter().map(|(p, e, _, _)| label(p, e)).collect();
            let width = labels.iter().map(|l| l.chars().count()).max().unwrap_or(0).max(8) + 2;
            let _ = write!(out, "{:<8}", "");
            for l in &labels {
                let _ = write!(out, "{l:>width$}");
            }
            out.push('\n');
            for (i, id) in ids.iter().enumerate() {
                let _ = write!(out, "{id:<8}");
                for (_, _, values, _) in &table {
                    let _ = write!(out, "{:>width$}", fmt2(values[i]));
                }
                out.push('\n');
            }
            let _ = write!(out, "{:<8}", "TOTAL");
            for (_, _, _, score) in &table {
                let _ = write!(out, "{:>width$}", fmt2(*score));
            }
            out.push('\n');
            Ok(out)
        }
    }
}
