//! The outer projection loop.

use std::time::Instant;

use super::basis::ExtendedKrylovBasis;
use super::gk::{build_starting_blocks, resolve_mode};
use super::inner::{solve_projected, InnerMethod, InnerState};
use super::projected::{cheap_residual_norm, ProjectedProblem, ProjectedSide};
use super::{InnerUsage, IterationRecord, ResidualMode, SolveConfig, SolveReport, StartingBlocks};
use crate::dense::{truncate_factors, LowRankFactorPair};
use crate::operators::{GeneralizedSylvesterProblem, Operator};
use crate::{Mat, Result};

/// Snapshot handed to the observer after every iteration.
#[derive(Debug)]
pub struct IterationView<'a> {
    pub k: usize,
    /// `𝒱_k`.
    pub v: &'a Mat,
    /// `𝒲_k` (the same matrix as `v` for Lyapunov-symmetric runs).
    pub w: &'a Mat,
    /// Projected solution `Z_k`.
    pub z: &'a Mat,
    pub projected: &'a ProjectedProblem,
    pub left: &'a ExtendedKrylovBasis,
    pub right: &'a ExtendedKrylovBasis,
    pub record: &'a IterationRecord,
}

/// Solves `A X + X Bᵀ + Σ Nᵢ X Mᵢᵀ = C₁C₂ᵀ` for a low-rank `X = L Rᵀ`.
pub fn solve(
    problem: &GeneralizedSylvesterProblem,
    config: &SolveConfig,
) -> Result<(LowRankFactorPair, SolveReport)> {
    solve_observed(problem, config, |_| {})
}

fn effective_mode(problem: &GeneralizedSylvesterProblem, config: &SolveConfig, symmetric: bool) -> ResidualMode {
    match config.residual {
        ResidualMode::Auto => {
            let structured = matches!(
                resolve_mode(problem, &config.blocks),
                StartingBlocks::Commutator { .. } | StartingBlocks::LowRank
            );
            if symmetric || structured || problem.m() == 0 {
                ResidualMode::Cheap
            } else {
                ResidualMode::True
            }
        }
        other => other,
    }
}

/// Compresses `𝒱 Z 𝒲ᵀ`, tightening the truncation tolerance until the
/// compressed factors still meet `max(tol, full)` (coefficients of large norm
/// amplify truncation errors in the residual).
fn truncate_output(
    problem: &GeneralizedSylvesterProblem,
    left: &ExtendedKrylovBasis,
    right: &ExtendedKrylovBasis,
    z: &Mat,
    config: &SolveConfig,
    full: f64,
) -> (LowRankFactorPair, usize, f64) {
    let rhs_norm = problem.rhs_norm();
    let target = config.tol.max(full) * (1.0 + 1e-3);
    let id = Mat::identity(z.ncols(), z.ncols());
    let mut ttol = config.truncation_tol;
    loop {
        let core = truncate_factors(z, &id, ttol);
        let rank = core.left.ncols();
        let x = LowRankFactorPair::new(left.basis() * &core.left, right.basis() * &core.right);
        let res = problem.residual_norm(&x) / rhs_norm;
        if res <= target || ttol <= 1e-15 || rank == z.nrows().min(z.ncols()) {
            return (x, rank, res);
        }
        log::debug!("truncation at {ttol:.1e} raised the residual to {res:.3e}; tightening");
        ttol *= 1e-2;
    }
}

/// [`solve`] with a callback after every iteration.
pub fn solve_observed(
    problem: &GeneralizedSylvesterProblem,
    config: &SolveConfig,
    mut observer: impl FnMut(&IterationView<'_>),
) -> Result<(LowRankFactorPair, SolveReport)> {
    config.validate()?;
    let started = Instant::now();
    let symmetric = problem.is_lyapunov();
    let mode = effective_mode(problem, config, symmetric);
    let rhs_norm = problem.rhs_norm();
    let (n, nr) = (problem.n(), problem.n_right());

    let mut report = SolveReport {
        converged: false,
        iterations: 0,
        memory: 0,
        memory_left: 0,
        memory_right: 0,
        rank: 0,
        linear_solves: 0,
        linear_solves_left: 0,
        linear_solves_right: 0,
        block_width_left: 0,
        block_width_right: 0,
        symmetric,
        breakdown: false,
        residual_mode: mode,
        history: Vec::new(),
        final_residual: 0.0,
        inner: InnerUsage::default(),
        wall_time: started.elapsed(),
    };
    if problem.r() == 0 || rhs_norm == 0.0 {
        report.converged = true;
        report.wall_time = started.elapsed();
        return Ok((LowRankFactorPair::zeros(n, nr), report));
    }

    let blocks = build_starting_blocks(problem, config)?;
    let mut left = ExtendedKrylovBasis::bootstrap(problem.a.clone(), &blocks.left)?;
    let mut right = if symmetric {
        None
    } else {
        Some(ExtendedKrylovBasis::bootstrap(problem.b.clone(), &blocks.right)?)
    };
    let n_ops: Vec<Operator> = problem.terms.iter().map(|t| t.n.clone()).collect();
    let m_ops: Vec<Operator> = problem.terms.iter().map(|t| t.m.clone()).collect();
    let mut projected = ProjectedProblem {
        left: ProjectedSide::empty(problem.m(), problem.r()),
        right: if symmetric { None } else { Some(ProjectedSide::empty(problem.m(), problem.r())) },
    };
    let mut state = InnerState::default();
    let mut z = Mat::zeros(0, 0);

    for k in 1..=config.max_iters {
        if k > 1 {
            let grew_left = left.expand()?;
            let grew_right = match right.as_mut() {
                Some(r) => r.expand()?,
                None => false,
            };
            if !grew_left && (symmetric || !grew_right) {
                log::info!("basis stopped growing at iteration {k}");
                report.breakdown = true;
                break;
            }
        }
        let old = projected.left.dim();
        if left.dim() > old {
            projected.left.extend(&problem.a, &n_ops, &problem.c1, left.basis(), old);
        }
        if let (Some(side), Some(rb)) = (projected.right.as_mut(), right.as_ref()) {
            let old = side.dim();
            if rb.dim() > old {
                side.extend(&problem.b, &m_ops, &problem.c2, rb.basis(), old);
            }
        }

        let (zk, method) = solve_projected(&projected.to_dense(), &config.inner, &mut state)?;
        z = zk;
        if state.neumann_diverged && report.inner.neumann_diverged_at.is_none() {
            report.inner.neumann_diverged_at = Some(k);
        }
        match method {
            InnerMethod::Sylvester => report.inner.sylvester += 1,
            InnerMethod::Neumann => report.inner.neumann += 1,
            InnerMethod::Kronecker => report.inner.kronecker += 1,
            InnerMethod::Gmres => report.inner.gmres += 1,
        }

        let rb = right.as_ref().unwrap_or(&left);
        let cheap = matches!(mode, ResidualMode::Cheap | ResidualMode::Both).then(|| {
            cheap_residual_norm(&z, left.tau(), left.last_block(), rb.tau(), rb.last_block()) / rhs_norm
        });
        let true_res = matches!(mode, ResidualMode::True | ResidualMode::Both).then(|| {
            let x = LowRankFactorPair::new(left.basis() * &z, rb.basis().clone());
            problem.residual_norm(&x) / rhs_norm
        });
        let record = IterationRecord { iter: k, cheap, true_res, inner: method };
        log::debug!("iteration {k}: dim {}x{}, cheap {cheap:?}, true {true_res:?}", left.dim(), rb.dim());
        observer(&IterationView {
            k,
            v: left.basis(),
            w: rb.basis(),
            z: &z,
            projected: &projected,
            left: &left,
            right: rb,
            record: &record,
        });
        report.iterations = k;
        let decisive = true_res.or(cheap).unwrap();
        report.history.push(record);
        if decisive <= config.tol {
            report.converged = true;
            break;
        }
    }

    let rb = right.as_ref().unwrap_or(&left);
    let full = report.history.last().and_then(|r| r.true_res).unwrap_or_else(|| {
        problem.residual_norm(&LowRankFactorPair::new(left.basis() * &z, rb.basis().clone())) / rhs_norm
    });
    let (x, rank, final_residual) = truncate_output(problem, &left, rb, &z, config, full);
    report.rank = rank;
    report.final_residual = final_residual;
    report.memory_left = left.dim();
    report.memory_right = rb.dim();
    report.linear_solves_left = left.linear_solves();
    report.linear_solves_right = rb.linear_solves();
    report.block_width_left = left.rbar();
    report.block_width_right = rb.rbar();
    if symmetric {
        report.memory = report.memory_left;
        report.linear_solves = report.linear_solves_left;
    } else {
        report.memory = report.memory_left + report.memory_right;
        report.linear_solves = report.linear_solves_left + report.linear_solves_right;
    }
    report.wall_time = started.elapsed();
    log::info!(
        "solve finished: converged {}, {} iterations, rank {}, residual {:.3e}",
        report.converged,
        report.iterations,
        report.rank,
        report.final_residual
    );
    Ok((x, report))
}
