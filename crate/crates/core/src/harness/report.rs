use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::dim::Method;

/// One line of `summary.csv`: a method's error for one profile kind on one
/// trade, with its pricer-call count and wall time. The error columns are
/// empty for the benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub trade: String,
    pub method: String,
    pub profile_kind: String,
    pub eq5_error: Option<f64>,
    pub skipped_points: Option<usize>,
    pub pricer_calls: u64,
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunSummary {
    pub rows: Vec<SummaryRow>,
}

impl RunSummary {
    pub fn write_csv(&self, path: &Path) -> Result<(), HarnessError> {
        let err = |e: csv::Error| HarnessError::Csv {
            path: path.to_path_buf(),
            message: e.to_string(),
        };
        let mut w = csv::Writer::from_path(path).map_err(err)?;
        for row in &self.rows {
            w.serialize(row).map_err(err)?;
        }
        w.flush().map_err(|e| HarnessError::Io {
            path: path.to_path_buf(),
            source: e,
        })
    }

    pub fn read_csv(path: &Path) -> Result<Self, HarnessError> {
        let err = |e: csv::Error| HarnessError::Csv {
            path: path.to_path_buf(),
            message: e.to_string(),
        };
        let mut r = csv::Reader::from_path(path).map_err(err)?;
        let rows = r
            .deserialize()
            .collect::<Result<Vec<SummaryRow>, _>>()
            .map_err(err)?;
        Ok(Self { rows })
    }

    /// Trade names in first-appearance order.
    pub fn trades(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for row in &self.rows {
            if !out.contains(&row.trade.as_str()) {
                out.push(&row.trade);
            }
        }
        out
    }

    /// Method labels for a trade, in first-appearance order.
    pub fn methods(&self, trade: &str) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for row in self.rows.iter().filter(|r| r.trade == trade) {
            if !out.contains(&row.method.as_str()) {
                out.push(&row.method);
            }
        }
        out
    }

    pub fn row(&self, trade: &str, method: &str, kind: &str) -> Option<&SummaryRow> {
        self.rows
            .iter()
            .find(|r| r.trade == trade && r.method == method && r.profile_kind == kind)
    }

    pub fn pricer_calls(&self, trade: &str, method: &str) -> Option<u64> {
        self.rows
            .iter()
            .find(|r| r.trade == trade && r.method == method)
            .map(|r| r.pricer_calls)
    }
}

fn display_name(label: &str) -> String {
    Method::from_label(label).map_or_else(|| label.to_string(), |m| m.display_name().to_string())
}

fn fmt_error(row: Option<&SummaryRow>) -> String {
    match row.and_then(|r| r.eq5_error) {
        Some(e) => format!("{e:.3e}"),
        None => "n/a".to_string(),
    }
}

/// Renders per-trade error and cost tables, and an error overview across
/// trades when there is more than one.
pub fn compare(summary: &RunSummary) -> String {
    let mut out = String::new();
    let width = 30;
    let trades = summary.trades();
    for trade in &trades {
        let methods = summary.methods(trade);
        let alternatives: Vec<&str> = methods
            .iter()
            .copied()
            .filter(|m| *m != Method::BruteForce.label())
            .collect();
        let has_errors = alternatives
            .iter()
            .any(|m| summary.row(trade, m, "eim").is_some_and(|r| r.eq5_error.is_some()));
        let _ = writeln!(out, "Trade: {trade}");
        let _ = writeln!(out);
        if has_errors {
            let _ = writeln!(out, "Profile error vs benchmark (mean relative deviation)");
            let _ = writeln!(
                out,
                "{:<width$} {:>12} {:>12} {:>14}",
                "Method", "EIM", "q95", "Skipped points"
            );
            for m in &alternatives {
                let eim = summary.row(trade, m, "eim");
                let q95 = summary.row(trade, m, "q95");
                let skipped = [eim, q95]
                    .iter()
                    .map(|r| r.and_then(|r| r.skipped_points).map_or("-".into(), |s| s.to_string()))
                    .collect::<Vec<String>>()
                    .join("/");
                let _ = writeln!(
                    out,
                    "{:<width$} {:>12} {:>12} {:>14}",
                    display_name(m),
                    fmt_error(eim),
                    fmt_error(q95),
                    skipped
                );
            }
            let _ = writeln!(out);
        }

        let bench_calls = summary.pricer_calls(trade, Method::BruteForce.label());
        let _ = writeln!(out, "Computational cost");
        let _ = writeln!(
            out,
            "{:<width$} {:>14} {:>16} {:>14}",
            "Method", "Pricer calls", "Benchmark/method", "Wall time (ms)"
        );
        for m in &methods {
            let Some(row) = summary.rows.iter().find(|r| r.trade == *trade && r.method == *m) else {
                continue;
            };
            let ratio = match bench_calls {
                Some(b) if row.pricer_calls > 0 => format!("{:.1}", b as f64 / row.pricer_calls as f64),
                _ => "-".to_string(),
            };
            let _ = writeln!(
                out,
                "{:<width$} {:>14} {:>16} {:>14.1}",
                display_name(m),
                row.pricer_calls,
                ratio,
                row.wall_time_ms
            );
        }
        let _ = writeln!(out);
    }

    if trades.len() > 1 {
        let mut methods: Vec<&str> = Vec::new();
        for t in &trades {
            for m in summary.methods(t) {
                if m != Method::BruteForce.label() && !methods.contains(&m) {
                    methods.push(m);
                }
            }
        }
        let any = summary.rows.iter().any(|r| r.eq5_error.is_some());
        if any && !methods.is_empty() {
            let _ = writeln!(out, "Error overview (EIM / q95)");
            let _ = write!(out, "{:<width$}", "Method");
            for t in &trades {
                let _ = write!(out, " {:>23}", t);
            }
            let _ = writeln!(out);
            for m in &methods {
                let _ = write!(out, "{:<width$}", display_name(m));
                for t in &trades {
                    let cell = format!(
                        "{} / {}",
                        fmt_error(summary.row(t, m, "eim")),
                        fmt_error(summary.row(t, m, "q95"))
                    );
                    let _ = write!(out, " {cell:>23}");
                }
                let _ = writeln!(out);
            }
        }
    }
    out
}
