//! Tabular results with a metadata header, written as CSV or JSON.
//!
//! CSV numbers carry 17 significant digits in `d.dddddddddddddddde±x` form so
//! every double survives a round trip. Missing values are written as `NA` in
//! CSV and `null` in JSON. Header lines start with `# `.

use std::fmt::Write as _;

use serde_json::{json, Map, Value};

use crate::config::{Format, RunConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Bool(bool),
    Text(String),
    Missing,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Missing, Cell::Num)
    }
}

impl From<i64> for Cell {
    fn from(x: i64) -> Self {
        Cell::Int(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => format_number(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
            Cell::Missing => "NA".into(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => serde_json::Number::from_f64(*x).map_or(Value::Null, Value::Number),
            Cell::Int(i) => json!(i),
            Cell::Bool(b) => json!(b),
            Cell::Text(s) => json!(s),
            Cell::Missing => Value::Null,
        }
    }
}

/// Result of one command.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// Command-specific scalars echoed in the header.
    pub summary: Map<String, Value>,
    pub warnings: Vec<String>,
    /// Set by `verify` when a criterion fails.
    pub failed: bool,
}

impl Report {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Report {
            columns,
            ..Default::default()
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }
}

/// Numerical tolerances fixed in the library, echoed for provenance.
pub fn tolerances() -> Value {
    json!({
        "hopfBisection": 1e-12,
        "hopfResidual": 1e-10,
        "closedFormCrossCheck": 1e-10,
        "transversalityStep": 1e-6,
        "transversalityRelative": 1e-5,
        "criticalityBand": 1e-10,
        "tailStdOverMean": 0.02,
        "manifoldEscape": 1e-3,
        "coherenceThreshold": kuragap::ensemble::COHERENCE_THRESHOLD,
    })
}

pub fn metadata(cfg: &RunConfig, report: &Report) -> Value {
    json!({
        "tool": "kuragap-cli",
        "version": env!("CARGO_PKG_VERSION"),
        "coreVersion": kuragap::VERSION,
        "command": cfg.command().as_str(),
        "config": cfg.to_value(),
        "tolerances": tolerances(),
        "warnings": report.warnings.len(),
    })
}

pub fn render_csv(cfg: &RunConfig, report: &Report) -> String {
    let meta = metadata(cfg, report);
    let mut out = String::new();
    for key in [
        "tool",
        "version",
        "coreVersion",
        "command",
        "config",
        "tolerances",
        "warnings",
    ] {
        let v = &meta[key];
        let text = match v {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        writeln!(out, "# {key}: {text}").unwrap();
    }
    writeln!(out, "# summary: {}", Value::Object(report.summary.clone())).unwrap();
    for w in &report.warnings {
        writeln!(out, "# warning: {w}").unwrap();
    }
    writeln!(out, "{}", report.columns.join(",")).unwrap();
    for row in &report.rows {
        let cells: Vec<String> = row.iter().map(Cell::csv).collect();
        writeln!(out, "{}", cells.join(",")).unwrap();
    }
    out
}

pub fn render_json(cfg: &RunConfig, report: &Report) -> String {
    let rows: Vec<Value> = report
        .rows
        .iter()
        .map(|r| Value::Array(r.iter().map(Cell::json).collect()))
        .collect();
    let doc = json!({
        "metadata": metadata(cfg, report),
        "summary": Value::Object(report.summary.clone()),
        "warnings": report.warnings,
        "columns": report.columns,
        "rows": rows,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("report serialises");
    s.push('\n');
    s
}

pub fn render(cfg: &RunConfig, report: &Report) -> String {
    match cfg.output.format {
        Format::Csv => render_csv(cfg, report),
        Format::Json => render_json(cfg, report),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{CommandName, Job};

    fn sample() -> (RunConfig, Report) {
        let cfg = RunConfig::new(Job::default_for(CommandName::NormalForm));
        let mut r = Report::new(vec!["x", "label", "flag", "n"]);
        r.push(vec![0.1.into(), "a,b".into(), true.into(), Cell::Missing]);
        r.push(vec![f64::NAN.into(), "c".into(), false.into(), 3usize.into()]);
        (cfg, r)
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.6992e-300, 7.0e22, 5e-324, f64::MAX] {
            let s = format_number(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
            let digits = s.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
            assert_eq!(digits.len(), 17);
        }
    }

    #[test]
    fn csv_layout() {
        let (cfg, r) = sample();
        let text = render_csv(&cfg, &r);
        let lines: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(lines[0], "x,label,flag,n");
        assert_eq!(lines[1], "1.0000000000000001e-1,\"a,b\",true,NA");
        assert_eq!(lines[2], "NaN,c,false,3");
        assert!(text.starts_with("# tool: kuragap-cli\n"));
        let config_line = text.lines().find(|l| l.starts_with("# config: ")).unwrap();
        let v: Value = serde_json::from_str(&config_line["# config: ".len()..]).unwrap();
        assert_eq!(v["command"], "normal-form");
    }

    #[test]
    fn json_layout() {
        let (cfg, r) = sample();
        let v: Value = serde_json::from_str(&render_json(&cfg, &r)).unwrap();
        assert_eq!(v["columns"][1], "label");
        assert_eq!(v["rows"][0][0], 0.1);
        assert!(v["rows"][0][3].is_null());
        assert!(v["rows"][1][0].is_null());
        assert_eq!(v["metadata"]["command"], "normal-form");
    }
}
