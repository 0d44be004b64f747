use serde::Serialize;

use crate::metrics::IterationTrace;

use super::config::ExperimentConfig;

/// A plain numeric table written as CSV.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }
}

/// Data behind one `trace_<name>.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SeriesData {
    Trace(IterationTrace),
    Table(Table),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Series {
    pub name: String,
    pub data: SeriesData,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub variant: String,
    /// One entry per summary column; `None` renders as an empty cell.
    pub values: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Summary {
    pub columns: Vec<String>,
    pub rows: Vec<SummaryRow>,
}

impl Summary {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, variant: impl Into<String>, values: Vec<Option<f64>>) {
        debug_assert_eq!(values.len(), self.columns.len());
        self.rows.push(SummaryRow {
            variant: variant.into(),
            values,
        });
    }

    pub fn row(&self, variant: &str) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.variant == variant)
    }

    /// Value of `column` in the row named `variant`.
    pub fn value(&self, variant: &str, column: &str) -> Option<f64> {
        let c = self.columns.iter().position(|h| h == column)?;
        self.row(variant)?.values[c]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Line {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Plot {
    pub metric: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub lines: Vec<Line>,
}

/// Everything an experiment produces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub version: String,
    /// Aggregated curves, one per variant.
    pub series: Vec<Series>,
    pub summary: Summary,
    pub plots: Vec<Plot>,
    /// Additional tables written as `<name>.csv`.
    pub tables: Vec<(String, Table)>,
    /// Per-trial traces by variant, written only on request.
    pub trial_traces: Vec<(String, Vec<IterationTrace>)>,
}

impl ExperimentReport {
    pub fn new(config: ExperimentConfig) -> Self {
        Self {
            config,
            version: version(),
            series: Vec::new(),
            summary: Summary::default(),
            plots: Vec::new(),
            tables: Vec::new(),
            trial_traces: Vec::new(),
        }
    }

    pub fn trace(&self, name: &str) -> Option<&IterationTrace> {
        self.series.iter().find(|s| s.name == name).and_then(|s| match &s.data {
            SeriesData::Trace(t) => Some(t),
            SeriesData::Table(_) => None,
        })
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }
}

pub fn version() -> String {
    format!("kzlab {}", env!("CARGO_PKG_VERSION"))
}

/// Plots one metric of several traces against the iteration count.
pub(crate) fn trace_plot(
    metric: &str,
    y_label: &str,
    log_y: bool,
    traces: &[(&str, &IterationTrace)],
    pick: impl Fn(&IterationTrace) -> Option<&Vec<f64>>,
) -> Plot {
    let lines = traces
        .iter()
        .filter_map(|(label, t)| {
            pick(t).map(|s| Line {
                label: label.to_string(),
                points: t.iterations.iter().map(|k| *k as f64).zip(s.iter().copied()).collect(),
            })
        })
        .collect();
    Plot {
        metric: metric.into(),
        x_label: "iteration".into(),
        y_label: y_label.into(),
        log_y,
        lines,
    }
}
