//! Report assembly and output: summary JSON, CSV tables, exit codes.

use crate::config::RunConfig;
use serde::Serialize;
use std::path::Path;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// One asserted invariant: passes iff `value <= threshold`.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), value, threshold, pass: value <= threshold }
    }

    /// A boolean invariant recorded as 0 (holds) / 1 (violated).
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Check { name: name.into(), value: if ok { 0.0 } else { 1.0 }, threshold: 0.0, pass: ok }
    }
}

/// A CSV table built in memory.
#[derive(Debug, Clone)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push<I: IntoIterator<Item = Cell>>(&mut self, row: I) {
        let row: Vec<String> = row.into_iter().map(|c| c.0).collect();
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

/// A formatted CSV cell (shortest round-trip formatting for floats).
pub struct Cell(String);

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell(format!("{v:e}"))
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell(v.to_string())
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell(v.to_string())
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell(v)
    }
}

/// Builds a row from heterogeneous cells.
#[macro_export]
macro_rules! row {
    ($($x:expr),* $(,)?) => { vec![$($crate::report::Cell::from($x)),*] };
}

/// Result of one subcommand before anything is written.
#[derive(Debug, Default)]
pub struct Outcome {
    pub results: serde_json::Value,
    pub checks: Vec<Check>,
    pub tables: Vec<(String, Table)>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    subcommand: &'a str,
    config: &'a RunConfig,
    passed: bool,
    checks: &'a [Check],
    results: &'a serde_json::Value,
    files: Vec<&'a str>,
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serialization");
    s.push('\n');
    s
}

/// Writes summary.json and every table into the output directory and
/// returns the summary text.
pub fn write_outcome(sub: &str, cfg: &RunConfig, out: &Outcome) -> std::io::Result<String> {
    let summary = Summary {
        subcommand: sub,
        config: cfg,
        passed: out.passed(),
        checks: &out.checks,
        results: &out.results,
        files: out.tables.iter().map(|(n, _)| n.as_str()).collect(),
    };
    let text = pretty(&summary);
    std::fs::create_dir_all(&cfg.out)?;
    for (name, table) in &out.tables {
        std::fs::write(cfg.out.join(name), table.to_bytes())?;
    }
    std::fs::write(cfg.out.join("summary.json"), &text)?;
    Ok(text)
}

/// Diagnostic written when a numerical routine fails.
pub fn write_error(sub: &str, cfg: &RunConfig, err: &fraclab::Error) -> std::io::Result<String> {
    let diag = serde_json::json!({
        "subcommand": sub,
        "config": cfg,
        "error": err.to_string(),
        "kind": format!("{err:?}"),
    });
    let text = pretty(&diag);
    write_file(&cfg.out, "error.json", &text)?;
    Ok(text)
}

fn write_file(dir: &Path, name: &str, text: &str) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), text)
}
