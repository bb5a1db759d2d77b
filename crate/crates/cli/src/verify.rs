use std::io::Write;

use gensylv::dense::{kron_dense_solve, KRON_DENSE_LIMIT};
use gensylv::krylov::{self, ResidualMode, SolveConfig};
use gensylv::neumann::{neumann_solve, DEFAULT_MAX_TERMS};
use gensylv::{Error, Mat, Result};
use serde::Serialize;

use crate::args::Format;
use crate::config::RunConfig;

/// Largest tolerated relative disagreement between two solutions.
pub const DISCREPANCY_LIMIT: f64 = 1e-7;

#[derive(Debug, Clone, Serialize)]
pub struct VerifyOutcome {
    pub family: String,
    pub n: usize,
    /// `‖X_neumann − X_kron‖ / ‖X_kron‖`, absent when the series diverged.
    pub neumann_vs_kronecker: Option<f64>,
    pub krylov_vs_kronecker: f64,
    pub krylov_vs_neumann: Option<f64>,
    pub neumann_diverged: bool,
    pub krylov_iterations: usize,
    pub krylov_residual: f64,
    pub max_discrepancy: f64,
    pub pass: bool,
}

fn rel(x: &Mat, y: &Mat, scale: f64) -> f64 {
    let d = (x - y).norm();
    if scale > 0.0 {
        d / scale
    } else {
        d
    }
}

/// Solves the configured problem densely, by the Neumann series and by the
/// projection method, and compares the three.
pub fn verify(cfg: &RunConfig) -> Result<VerifyOutcome> {
    if let Some(n) = cfg.problem.n() {
        if n > KRON_DENSE_LIMIT {
            return Err(Error::TooLarge { n, limit: KRON_DENSE_LIMIT });
        }
    }
    let problem = cfg.problem.build()?;
    let n = problem.n().max(problem.n_right());
    if n > KRON_DENSE_LIMIT {
        return Err(Error::TooLarge { n, limit: KRON_DENSE_LIMIT });
    }
    let dense = problem.to_dense();
    let oracle = kron_dense_solve(&dense)?;
    let scale = oracle.norm();

    let neumann = match neumann_solve(&dense, 1e-14, DEFAULT_MAX_TERMS) {
        Ok(sol) => Some(sol.x),
        Err(Error::Divergence { terms, last_residual }) => {
            log::info!("Neumann series diverged after {terms} terms (residual {last_residual:.3e})");
            None
        }
        Err(e) => return Err(e),
    };

    let solve_cfg = SolveConfig {
        tol: cfg.solve.tol.min(1e-12),
        max_iters: cfg.solve.max_iters.max(2 * n),
        residual: ResidualMode::True,
        truncation_tol: 0.0,
        ..cfg.solve.clone()
    };
    let (x, report) = krylov::solve(&problem, &solve_cfg)?;
    let xk = x.densify();

    let neumann_vs_kronecker = neumann.as_ref().map(|xn| rel(xn, &oracle, scale));
    let krylov_vs_kronecker = rel(&xk, &oracle, scale);
    let krylov_vs_neumann = neumann.as_ref().map(|xn| rel(&xk, xn, scale));
    let max_discrepancy = [neumann_vs_kronecker, Some(krylov_vs_kronecker), krylov_vs_neumann]
        .into_iter()
        .flatten()
        .fold(0.0, f64::max);
    Ok(VerifyOutcome {
        family: cfg.problem.family().to_owned(),
        n,
        neumann_vs_kronecker,
        krylov_vs_kronecker,
        krylov_vs_neumann,
        neumann_diverged: neumann.is_none(),
        krylov_iterations: report.iterations,
        krylov_residual: report.final_residual,
        max_discrepancy,
        pass: max_discrepancy <= DISCREPANCY_LIMIT,
    })
}

pub fn print(out: &mut impl Write, format: Format, v: &VerifyOutcome) -> Result<()> {
    if format == Format::Jsonl {
        let line = serde_json::to_string(v).map_err(|e| Error::Parse(e.to_string()))?;
        writeln!(out, "{line}")?;
        return Ok(());
    }
    let show = |d: Option<f64>| match d {
        Some(d) => format!("{d:.3e}"),
        None => "diverged".to_owned(),
    };
    writeln!(out, "verify {} n = {}", v.family, v.n)?;
    writeln!(out, "  neumann vs kronecker  {}", show(v.neumann_vs_kronecker))?;
    writeln!(out, "  krylov  vs kronecker  {:.3e}", v.krylov_vs_kronecker)?;
    writeln!(out, "  krylov  vs neumann    {}", show(v.krylov_vs_neumann))?;
    writeln!(
        out,
        "  max discrepancy {:.3e} ({}; limit {DISCREPANCY_LIMIT:e}, krylov {} its, residual {:.3e})",
        v.max_discrepancy,
        if v.pass { "ok" } else { "FAILED" },
        v.krylov_iterations,
        v.krylov_residual
    )?;
    Ok(())
}
