use std::fs;
use std::io::Write;
use std::path::Path;

use gensylv::dense::LowRankFactorPair;
use gensylv::krylov::SolveReport;
use gensylv::operators::matrix_market::write_matrix_market_array;
use gensylv::{Error, Result};
use serde::Serialize;

use crate::args::Format;

pub const EXIT_CONVERGED: i32 = 0;
pub const EXIT_DISCREPANCY: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;

/// Machine-readable error field of a report row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorField {
    pub kind: &'static str,
    pub message: String,
}

impl ErrorField {
    pub fn new(e: &Error) -> Self {
        let kind = match e {
            Error::Factorization(_) => "factorization",
            Error::SpectrumOverlap { .. } => "spectrum-overlap",
            Error::Singular(_) => "singular",
            Error::Dimension(_) => "dimension",
            Error::Unsupported(_) => "unsupported",
            Error::NotLowRankCommuting { .. } => "not-low-rank-commuting",
            Error::Divergence { .. } => "divergence",
            Error::InnerSolver(_) => "inner-solver",
            Error::Domain(_) => "domain",
            Error::Config(_) => "config",
            Error::TooLarge { .. } => "too-large",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
        };
        Self { kind, message: e.to_string() }
    }
}

/// One line of the benchmark report: the columns of the results tables plus
/// bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub family: String,
    pub n: usize,
    pub status: &'static str,
    pub its: Option<usize>,
    pub mem: Option<usize>,
    pub rank: Option<usize>,
    pub lin_solves: Option<usize>,
    pub time_s: Option<f64>,
    pub final_residual: Option<f64>,
    pub block_width: Option<usize>,
    pub neumann_diverged_at: Option<usize>,
    pub error: Option<ErrorField>,
}

impl ReportRow {
    pub fn solved(family: &str, n: usize, r: &SolveReport) -> Self {
        Self {
            family: family.to_owned(),
            n,
            status: if r.converged { "converged" } else { "not-converged" },
            its: Some(r.iterations),
            mem: Some(r.memory),
            rank: Some(r.rank),
            lin_solves: Some(r.linear_solves),
            time_s: Some(r.wall_time.as_secs_f64()),
            final_residual: Some(r.final_residual),
            block_width: Some(r.block_width_left),
            neumann_diverged_at: r.inner.neumann_diverged_at,
            error: None,
        }
    }

    pub fn failed(family: &str, n: usize, e: &Error) -> Self {
        Self {
            family: family.to_owned(),
            n,
            status: "error",
            its: None,
            mem: None,
            rank: None,
            lin_solves: None,
            time_s: None,
            final_residual: None,
            block_width: None,
            neumann_diverged_at: None,
            error: Some(ErrorField::new(e)),
        }
    }
}

const COLUMNS: [&str; 13] = [
    "family",
    "n",
    "status",
    "its",
    "mem",
    "rank",
    "lin_solves",
    "time_s",
    "final_residual",
    "block_width",
    "neumann_diverged_at",
    "error_kind",
    "error_message",
];

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(T::to_string).unwrap_or_default()
}

fn fields(row: &ReportRow) -> Vec<String> {
    vec![
        row.family.clone(),
        row.n.to_string(),
        row.status.to_owned(),
        opt(&row.its),
        opt(&row.mem),
        opt(&row.rank),
        opt(&row.lin_solves),
        row.time_s.map(|t| format!("{t:.3}")).unwrap_or_default(),
        row.final_residual.map(|r| format!("{r:.3e}")).unwrap_or_default(),
        opt(&row.block_width),
        opt(&row.neumann_diverged_at),
        row.error.as_ref().map(|e| e.kind.to_owned()).unwrap_or_default(),
        row.error.as_ref().map(|e| e.message.clone()).unwrap_or_default(),
    ]
}

/// Writes report rows to stdout-like sinks, emitting the header once.
pub struct RowWriter<W: Write> {
    format: Format,
    sink: W,
    header_done: bool,
}

impl<W: Write> RowWriter<W> {
    pub fn new(format: Format, sink: W) -> Self {
        Self { format, sink, header_done: false }
    }

    pub fn write(&mut self, row: &ReportRow) -> Result<()> {
        match self.format {
            Format::Jsonl => {
                let line = serde_json::to_string(row).map_err(|e| Error::Parse(e.to_string()))?;
                writeln!(self.sink, "{line}")?;
            }
            Format::Csv => {
                let mut w = csv::WriterBuilder::new().from_writer(&mut self.sink);
                let res = (|| -> std::result::Result<(), csv::Error> {
                    if !self.header_done {
                        w.write_record(COLUMNS)?;
                    }
                    w.write_record(fields(row))?;
                    w.flush()?;
                    Ok(())
                })();
                res.map_err(csv_error)?;
            }
            Format::Table => {
                if !self.header_done {
                    writeln!(
                        self.sink,
                        "{:<10} {:>7} {:<13} {:>5} {:>6} {:>6} {:>10} {:>9} {:>10}",
                        "family", "n", "status", "Its", "Mem", "rank", "Lin.solves", "time[s]", "residual"
                    )?;
                }
                let f = fields(row);
                writeln!(
                    self.sink,
                    "{:<10} {:>7} {:<13} {:>5} {:>6} {:>6} {:>10} {:>9} {:>10}",
                    f[0], f[1], f[2], f[3], f[4], f[5], f[6], f[7], f[8]
                )?;
                if let Some(e) = &row.error {
                    writeln!(self.sink, "  error [{}]: {}", e.kind, e.message)?;
                }
            }
        }
        self.header_done = true;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse(format!("{other:?}")),
    }
}

/// `iter,cheap_res,true_res`, one row per iteration; residuals that were not
/// computed are left empty.
pub fn write_history(path: &Path, report: &SolveReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(["iter", "cheap_res", "true_res"]).map_err(csv_error)?;
    for rec in &report.history {
        let f = |v: Option<f64>| v.map(|x| format!("{x:.6e}")).unwrap_or_default();
        w.write_record([rec.iter.to_string(), f(rec.cheap), f(rec.true_res)]).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `report.json`, `residuals.csv` and optionally `L.mtx`, `R.mtx`.
pub fn write_artifacts(
    dir: &Path,
    row: &ReportRow,
    report: Option<&SolveReport>,
    factors: Option<&LowRankFactorPair>,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    #[derive(Serialize)]
    struct Full<'a> {
        row: &'a ReportRow,
        report: Option<&'a SolveReport>,
    }
    let json = serde_json::to_string_pretty(&Full { row, report }).map_err(|e| Error::Parse(e.to_string()))?;
    fs::write(dir.join("report.json"), json)?;
    if let Some(r) = report {
        write_history(&dir.join("residuals.csv"), r)?;
    }
    if let Some(x) = factors {
        write_matrix_market_array(dir.join("L.mtx"), &x.left)?;
        write_matrix_market_array(dir.join("R.mtx"), &x.right)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row() -> ReportRow {
        ReportRow {
            family: "mimo".into(),
            n: 100,
            status: "converged",
            its: Some(6),
            mem: Some(72),
            rank: Some(40),
            lin_solves: Some(36),
            time_s: Some(0.25),
            final_residual: Some(3.1e-7),
            block_width: Some(6),
            neumann_diverged_at: None,
            error: None,
        }
    }

    #[test]
    fn csv_header_once() {
        let mut buf = Vec::new();
        let mut w = RowWriter::new(Format::Csv, &mut buf);
        w.write(&row()).unwrap();
        w.write(&row()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("family,n,status,its,mem,rank,lin_solves"));
        assert!(lines[1].starts_with("mimo,100,converged,6,72,40,36,"));
    }

    #[test]
    fn jsonl_carries_error_field() {
        let mut buf = Vec::new();
        let e = Error::Config("bad".into());
        RowWriter::new(Format::Jsonl, &mut buf).write(&ReportRow::failed("lowrank", 10, &e)).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["status"], "error");
        assert_eq!(v["error"]["kind"], "config");
        assert!(v["its"].is_null());
    }

    #[test]
    fn table_has_report_columns() {
        let mut buf = Vec::new();
        RowWriter::new(Format::Table, &mut buf).write(&row()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        for col in ["Its", "Mem", "rank", "Lin.solves", "time[s]"] {
            assert!(text.contains(col));
        }
    }
}
