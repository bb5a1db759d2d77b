//! `gensylv run` and `gensylv verify`.

mod args;
mod config;
mod report;
mod verify;

use std::io::{self, Write};
use std::process::ExitCode;

use clap::Parser;
use gensylv::{krylov, Error};

use crate::args::{Cli, Command, RunArgs};
use crate::config::RunConfig;
use crate::report::{
    write_artifacts, ErrorField, ReportRow, RowWriter, EXIT_CONFIG, EXIT_CONVERGED, EXIT_DISCREPANCY,
    EXIT_NOT_CONVERGED, EXIT_SOLVER,
};

fn is_config_error(e: &Error) -> bool {
    matches!(e, Error::Config(_) | Error::Parse(_) | Error::Io(_) | Error::TooLarge { .. })
}

/// Reports a failure to resolve the command line as a single JSON line.
fn config_failure(e: &Error) -> i32 {
    log::error!("{e}");
    let line = serde_json::json!({ "status": "error", "error": ErrorField::new(e) });
    println!("{line}");
    EXIT_CONFIG
}

fn run_one(cfg: &RunConfig, rows: &mut RowWriter<impl Write>) -> i32 {
    let family = cfg.problem.family();
    let n = cfg.problem.n().unwrap_or(0);
    let problem = match cfg.problem.build() {
        Ok(p) => p,
        Err(e) => {
            log::error!("building the {family} problem failed: {e}");
            let row = ReportRow::failed(family, n, &e);
            emit(cfg, rows, &row, None, None);
            return EXIT_CONFIG;
        }
    };
    let n = problem.n();
    log::info!("solving {family} with n = {n}, m = {}, r = {}", problem.m(), problem.r());
    match krylov::solve(&problem, &cfg.solve) {
        Ok((x, report)) => {
            let row = ReportRow::solved(family, n, &report);
            let factors = cfg.factors.then_some(&x);
            if emit(cfg, rows, &row, Some(&report), factors) != EXIT_CONVERGED {
                return EXIT_CONFIG;
            }
            if report.converged {
                EXIT_CONVERGED
            } else {
                EXIT_NOT_CONVERGED
            }
        }
        Err(e) => {
            log::error!("solve failed: {e}");
            let row = ReportRow::failed(family, n, &e);
            emit(cfg, rows, &row, None, None);
            if is_config_error(&e) {
                EXIT_CONFIG
            } else {
                EXIT_SOLVER
            }
        }
    }
}

fn emit(
    cfg: &RunConfig,
    rows: &mut RowWriter<impl Write>,
    row: &ReportRow,
    report: Option<&krylov::SolveReport>,
    factors: Option<&gensylv::dense::LowRankFactorPair>,
) -> i32 {
    if let Err(e) = rows.write(row) {
        log::error!("writing the report failed: {e}");
        return EXIT_CONFIG;
    }
    if let Some(dir) = &cfg.out {
        if let Err(e) = write_artifacts(dir, row, report, factors) {
            log::error!("writing artifacts to {} failed: {e}", dir.display());
            return EXIT_CONFIG;
        }
    }
    EXIT_CONVERGED
}

fn run(args: &RunArgs) -> i32 {
    let configs = match config::resolve(args) {
        Ok(c) => c,
        Err(e) => return config_failure(&e),
    };
    let stdout = io::stdout();
    let mut rows = RowWriter::new(configs[0].format, stdout.lock());
    configs.iter().map(|cfg| run_one(cfg, &mut rows)).max().unwrap_or(EXIT_CONVERGED)
}

fn verify_all(args: &RunArgs) -> i32 {
    let configs = match config::resolve(args) {
        Ok(c) => c,
        Err(e) => return config_failure(&e),
    };
    let mut out = io::stdout().lock();
    let mut worst = EXIT_CONVERGED;
    for cfg in &configs {
        let code = match verify::verify(cfg) {
            Ok(v) => {
                if let Err(e) = verify::print(&mut out, cfg.format, &v) {
                    log::error!("{e}");
                }
                if v.pass {
                    EXIT_CONVERGED
                } else {
                    EXIT_DISCREPANCY
                }
            }
            Err(e) => {
                log::error!("verify failed: {e}");
                let line = serde_json::json!({
                    "status": "error",
                    "family": cfg.problem.family(),
                    "error": ErrorField::new(&e),
                });
                let _ = writeln!(out, "{line}");
                if is_config_error(&e) {
                    EXIT_CONFIG
                } else {
                    EXIT_SOLVER
                }
            }
        };
        worst = match (worst, code) {
            (EXIT_DISCREPANCY, _) | (_, EXIT_DISCREPANCY) => EXIT_DISCREPANCY,
            (a, b) => a.max(b),
        };
    }
    worst
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Run(args) => run(args),
        Command::Verify(args) => verify_all(args),
    };
    ExitCode::from(code as u8)
}
