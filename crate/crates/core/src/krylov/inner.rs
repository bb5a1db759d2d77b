//! Solvers for the small projected equation.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::InnerConfig;
use crate::dense::{kron_dense_solve, DenseProblem, SylvesterSolver};
use crate::neumann::{neumann_solve_triangularized, TriangularizedProblem};
use crate::{Error, Mat, Result};

/// Which solver produced a projected solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InnerMethod {
    Sylvester,
    Neumann,
    Kronecker,
    Gmres,
}

/// State carried across the iterations of one outer solve.
#[derive(Debug, Clone, Default)]
pub struct InnerState {
    /// The series diverged on an earlier projected problem; later (larger)
    /// projections contain it, so it is not retried.
    pub neumann_diverged: bool,
}

#[derive(Debug, Clone)]
pub struct GmresOutcome {
    pub x: DVector<f64>,
    pub iterations: usize,
    /// Final relative residual `‖b − Ax‖ / ‖b‖`.
    pub residual: f64,
    pub converged: bool,
}

/// Restarted GMRES with modified Gram–Schmidt and Givens rotations, from a
/// zero initial guess.
pub fn gmres(
    apply: impl Fn(&DVector<f64>) -> DVector<f64>,
    b: &DVector<f64>,
    restart: usize,
    max_iters: usize,
    tol: f64,
) -> GmresOutcome {
    let n = b.len();
    let bnorm = b.norm();
    let mut x = DVector::zeros(n);
    if bnorm == 0.0 {
        return GmresOutcome { x, iterations: 0, residual: 0.0, converged: true };
    }
    let restart = restart.max(1).min(n.max(1));
    let mut total = 0;
    let mut rel: f64;
    let mut cycle_start = f64::INFINITY;
    while total < max_iters {
        let r = b - apply(&x);
        let beta = r.norm();
        rel = beta / bnorm;
        if rel <= tol {
            return GmresOutcome { x, iterations: total, residual: rel, converged: true };
        }
        // A whole restart cycle that barely helps means rounding has taken over.
        if rel > 0.9 * cycle_start {
            break;
        }
        cycle_start = rel;
        let mut vs: Vec<DVector<f64>> = vec![r / beta];
        let mut h = Mat::zeros(restart + 1, restart);
        let mut cs = vec![0.0; restart];
        let mut sn = vec![0.0; restart];
        let mut g = DVector::zeros(restart + 1);
        g[0] = beta;
        let mut used = 0;
        for j in 0..restart {
            if total >= max_iters {
                break;
            }
            total += 1;
            let mut w = apply(&vs[j]);
            for (i, vi) in vs.iter().enumerate() {
                let hij = vi.dot(&w);
                h[(i, j)] = hij;
                w.axpy(-hij, vi, 1.0);
            }
            let hn = w.norm();
            h[(j + 1, j)] = hn;
            for i in 0..j {
                let t = cs[i] * h[(i, j)] + sn[i] * h[(i + 1, j)];
                h[(i + 1, j)] = -sn[i] * h[(i, j)] + cs[i] * h[(i + 1, j)];
                h[(i, j)] = t;
            }
            let d = h[(j, j)].hypot(h[(j + 1, j)]);
            if d == 0.0 {
                cs[j] = 1.0;
                sn[j] = 0.0;
            } else {
                cs[j] = h[(j, j)] / d;
                sn[j] = h[(j + 1, j)] / d;
            }
            h[(j, j)] = d;
            h[(j + 1, j)] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            used = j + 1;
            rel = g[j + 1].abs() / bnorm;
            if rel <= tol || hn == 0.0 {
                break;
            }
            vs.push(w / hn);
        }
        // Back substitution on the rotated Hessenberg system.
        let mut y = DVector::zeros(used);
        for i in (0..used).rev() {
            let mut s = g[i];
            for k in i + 1..used {
                s -= h[(i, k)] * y[k];
            }
            y[i] = if h[(i, i)] != 0.0 { s / h[(i, i)] } else { 0.0 };
        }
        for (i, yi) in y.iter().enumerate() {
            x.axpy(*yi, &vs[i], 1.0);
        }
        if used == 0 {
            break;
        }
        if rel <= tol {
            let true_rel = (b - apply(&x)).norm() / bnorm;
            if true_rel <= tol * 10.0 {
                return GmresOutcome { x, iterations: total, residual: true_rel, converged: true };
            }
        }
    }
    let residual = (b - apply(&x)).norm() / bnorm;
    GmresOutcome { x, iterations: total, residual, converged: residual <= tol }
}

fn vec_of(m: &Mat) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

fn mat_of(v: &DVector<f64>, rows: usize, cols: usize) -> Mat {
    Mat::from_column_slice(rows, cols, v.as_slice())
}

/// Residual at which a stagnated projected GMRES run is still accepted.
const GMRES_ACCEPT: f64 = 1e-10;

/// GMRES on `W + Π̃(L̃⁻¹W) = C̃` in Schur coordinates, then `Ỹ = L̃⁻¹W`.
fn gmres_projected(tp: &TriangularizedProblem, cfg: &InnerConfig) -> Result<Mat> {
    let (p, q) = (tp.c1.nrows(), tp.c2.nrows());
    let rhs = &tp.c1 * tp.c2.transpose();
    let failure = std::cell::RefCell::new(None);
    let apply = |w: &DVector<f64>| -> DVector<f64> {
        let wm = mat_of(w, p, q);
        match tp.solver.solve_transformed(&wm) {
            Ok(y) => vec_of(&(wm + tp.apply_perturbation(&y))),
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                DVector::zeros(p * q)
            }
        }
    };
    let out = gmres(apply, &vec_of(&rhs), cfg.gmres_restart, cfg.gmres_max_iters, cfg.tol);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    if !out.converged && out.residual > GMRES_ACCEPT {
        return Err(Error::InnerSolver(format!(
            "GMRES stopped at relative residual {:.3e} after {} iterations",
            out.residual, out.iterations
        )));
    }
    log::debug!("projected GMRES converged in {} iterations", out.iterations);
    let y = tp.solver.solve_transformed(&mat_of(&out.x, p, q))?;
    Ok(tp.to_original(&y))
}

/// Solves the projected problem: Bartels–Stewart without terms, otherwise
/// the Neumann series, then the Kronecker system for small sizes, then
/// preconditioned GMRES.
pub fn solve_projected(
    dp: &DenseProblem,
    cfg: &InnerConfig,
    state: &mut InnerState,
) -> Result<(Mat, InnerMethod)> {
    let (p, q) = (dp.a.nrows(), dp.b.nrows());
    let rhs = dp.rhs();
    if dp.terms.is_empty() {
        let z = SylvesterSolver::new(&dp.a, &dp.b)?.solve(&rhs)?;
        return Ok((z, InnerMethod::Sylvester));
    }
    let tp = TriangularizedProblem::new(dp)?;
    let mut sylvester_singular = false;
    if !state.neumann_diverged {
        match neumann_solve_triangularized(&tp, cfg.tol, cfg.neumann_max_terms) {
            Ok(sol) => return Ok((sol.x, InnerMethod::Neumann)),
            Err(Error::Divergence { terms, last_residual }) => {
                log::info!(
                    "Neumann series diverged on the {p}×{q} projected problem after {terms} terms (residual {last_residual:.3e}); switching solver"
                );
                state.neumann_diverged = true;
            }
            Err(Error::SpectrumOverlap { .. }) => sylvester_singular = true,
            Err(e) => return Err(e),
        }
    }
    if p <= cfg.kron_limit && q <= cfg.kron_limit {
        let z = kron_dense_solve(dp).map_err(|e| Error::InnerSolver(format!("Kronecker fallback failed: {e}")))?;
        return Ok((z, InnerMethod::Kronecker));
    }
    if sylvester_singular {
        return Err(Error::InnerSolver(format!(
            "projected Sylvester operator is singular and {p}×{q} exceeds the Kronecker limit"
        )));
    }
    Ok((gmres_projected(&tp, cfg)?, InnerMethod::Gmres))
}
