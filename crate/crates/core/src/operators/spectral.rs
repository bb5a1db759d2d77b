//! Estimates of `ρ(L⁻¹Π)`, the quantity governing the Neumann series.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::GeneralizedSylvesterProblem;
use crate::dense::{LowRankFactorPair, SylvesterSolver, KRON_DENSE_LIMIT};
use crate::krylov::{self, ResidualMode, SolveConfig};
use crate::{Mat, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralEstimate {
    pub rho: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Estimates `ρ(L⁻¹Π)`. Up to n = 120 this runs Arnoldi on `vec(X)` with
/// dense Schur-based Sylvester solves and takes the largest Ritz value;
/// beyond that, power iteration on low-rank iterates with Krylov-based
/// Sylvester solves.
pub fn estimate_spectral_radius(
    problem: &GeneralizedSylvesterProblem,
    max_iters: usize,
    tol: f64,
) -> Result<SpectralEstimate> {
    if problem.m() == 0 {
        return Ok(SpectralEstimate { rho: 0.0, converged: true, iterations: 0 });
    }
    if problem.n().max(problem.n_right()) <= KRON_DENSE_LIMIT {
        dense_arnoldi(problem, max_iters, tol)
    } else {
        factored_power(problem, max_iters, tol)
    }
}

fn dense_arnoldi(problem: &GeneralizedSylvesterProblem, max_iters: usize, tol: f64) -> Result<SpectralEstimate> {
    let dp = problem.to_dense();
    let (p, q) = (dp.a.nrows(), dp.b.nrows());
    let solver = SylvesterSolver::new(&dp.a, &dp.b)?;
    let dim = p * q;
    let steps = max_iters.max(1).min(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v0 = Mat::from_fn(p, q, |_, _| StandardNormal.sample(&mut rng));
    v0 /= v0.norm();
    let mut vs = vec![v0];
    let mut h = Mat::zeros(steps + 1, steps);
    let mut history: Vec<f64> = Vec::new();
    let mut rho = 0.0;
    let mut converged = false;
    let mut done = 0;
    for j in 0..steps {
        let mut w = solver.solve(&dp.apply_perturbation(&vs[j]))?;
        for _ in 0..2 {
            for (i, vi) in vs.iter().enumerate() {
                let c = vi.dot(&w);
                h[(i, j)] += c;
                w -= vi * c;
            }
        }
        let hn = w.norm();
        h[(j + 1, j)] = hn;
        done = j + 1;
        let hk = h.view((0, 0), (done, done)).clone_owned();
        rho = crate::dense::schur::spectral_radius(&hk)?;
        history.push(rho);
        let scale = h.view((0, 0), (done + 1, done)).norm();
        if hn <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
        if history.len() >= 4 {
            let prev = history[history.len() - 4];
            if (rho - prev).abs() <= tol * rho.max(f64::MIN_POSITIVE) {
                converged = true;
                break;
            }
        }
        vs.push(w / hn);
    }
    if h.iter().all(|x| *x == 0.0) {
        return Ok(SpectralEstimate { rho: 0.0, converged: true, iterations: done });
    }
    Ok(SpectralEstimate { rho, converged, iterations: done })
}

fn factored_power(problem: &GeneralizedSylvesterProblem, max_iters: usize, tol: f64) -> Result<SpectralEstimate> {
    let (n, nr) = (problem.n(), problem.n_right());
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x = LowRankFactorPair::new(
        Mat::from_fn(n, 1, |_, _| StandardNormal.sample(&mut rng)),
        Mat::from_fn(nr, 1, |_, _| StandardNormal.sample(&mut rng)),
    );
    let inner = SolveConfig { tol: 1e-8, residual: ResidualMode::Cheap, max_iters: 200, ..SolveConfig::default() };
    let mut ratios: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut done = 0;
    for it in 0..max_iters.max(1) {
        let xn = x.norm();
        let pi = problem.apply_pi(&x);
        if pi.norm() == 0.0 {
            return Ok(SpectralEstimate { rho: 0.0, converged: true, iterations: it + 1 });
        }
        let sub = GeneralizedSylvesterProblem::new(problem.a.clone(), problem.b.clone(), vec![], pi.left, pi.right)?;
        let (y, _) = krylov::solve(&sub, &inner)?;
        let y = y.truncate(1e-10);
        let ratio = y.norm() / xn;
        ratios.push(ratio);
        done = it + 1;
        let yn = y.norm();
        if yn == 0.0 {
            return Ok(SpectralEstimate { rho: 0.0, converged: true, iterations: done });
        }
        x = LowRankFactorPair::new(y.left / yn, y.right);
        if ratios.len() >= 2 {
            let prev = ratios[ratios.len() - 2];
            if (ratio - prev).abs() <= tol * ratio {
                converged = true;
                break;
            }
        }
    }
    let tail = &ratios[ratios.len().saturating_sub(2)..];
    let rho = tail.iter().copied().fold(0.0, f64::max);
    Ok(SpectralEstimate { rho, converged, iterations: done })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::kron_spectral_radius;
    use crate::operators::{BandedOperator, DiagonalOperator, PerturbationTerm};

    #[test]
    fn no_terms_zero() {
        let a = DiagonalOperator::identity(4).shared();
        let c = Mat::from_element(4, 1, 1.0);
        let p = GeneralizedSylvesterProblem::new(a.clone(), a, vec![], c.clone(), c).unwrap();
        assert_eq!(estimate_spectral_radius(&p, 10, 1e-8).unwrap().rho, 0.0);
    }

    #[test]
    fn identity_half() {
        let a = DiagonalOperator::identity(6).shared();
        let c = Mat::from_element(6, 1, 1.0);
        let t = PerturbationTerm::new(a.clone(), a.clone());
        let p = GeneralizedSylvesterProblem::new(a.clone(), a, vec![t], c.clone(), c).unwrap();
        let est = estimate_spectral_radius(&p, 20, 1e-10).unwrap();
        assert!((est.rho - 0.5).abs() < 1e-12);
        assert!(est.converged);
    }

    #[test]
    fn matches_dense_eigensolve() {
        let n = 12;
        let a = BandedOperator::toeplitz_tridiagonal(n, 2.0, -5.0, 2.0).shared();
        let n1 = BandedOperator::toeplitz_tridiagonal(n, 0.5, 0.0, -0.5).shared();
        let c = Mat::from_element(n, 1, 1.0);
        let t = PerturbationTerm::new(n1.clone(), n1);
        let p = GeneralizedSylvesterProblem::new(a.clone(), a, vec![t], c.clone(), c).unwrap();
        let est = estimate_spectral_radius(&p, 144, 1e-12).unwrap();
        let exact = kron_spectral_radius(&p.to_dense()).unwrap();
        assert!((est.rho - exact).abs() < 1e-6 * exact, "{} vs {exact}", est.rho);
    }

    #[test]
    fn factored_path_scalar_multiple() {
        // N = M = βI, A = B = αI: L⁻¹Π = β²/(2α) · identity.
        let n = 150;
        let a = DiagonalOperator::scaled_identity(n, -2.0).shared();
        let nn = DiagonalOperator::scaled_identity(n, 1.0).shared();
        let c = Mat::from_element(n, 1, 1.0);
        let t = PerturbationTerm::new(nn.clone(), nn);
        let p = GeneralizedSylvesterProblem::new(a.clone(), a, vec![t], c.clone(), c).unwrap();
        let est = estimate_spectral_radius(&p, 10, 1e-8).unwrap();
        assert!((est.rho - 0.25).abs() < 1e-6, "{}", est.rho);
    }
}
