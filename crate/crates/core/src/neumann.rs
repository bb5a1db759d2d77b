//! Neumann-series solver for small dense generalized Sylvester equations.
//!
//! Both coefficients are reduced once to real Schur form, `A = Q_A U_A Q_Aᵀ`,
//! `B = Q_B U_B Q_Bᵀ`, and the terms of
//!
//! ```text
//! U_A Ỹ₀ + Ỹ₀ U_Bᵀ = C̃₁C̃₂ᵀ,   U_A Ỹⱼ₊₁ + Ỹⱼ₊₁ U_Bᵀ = −Σ Ñᵢ Ỹⱼ M̃ᵢᵀ
//! ```
//!
//! are accumulated by triangular Sylvester solves. The residual of the
//! partial sum `X⁽ˡ⁾ = Q_A (Σⱼ≤ₗ Ỹⱼ) Q_Bᵀ` equals `‖Σ Ñᵢ Ỹₗ M̃ᵢᵀ‖_F` exactly,
//! so it is available without forming `X⁽ˡ⁾`.

use crate::dense::{DenseProblem, SylvesterSolver};
use crate::{Error, Mat, Result};

/// Default cap on the number of series terms.
pub const DEFAULT_MAX_TERMS: usize = 200;
/// Consecutive growing terms that signal divergence.
pub const DIVERGENCE_WINDOW: usize = 3;

/// Coefficients transformed to Schur coordinates.
#[derive(Debug, Clone)]
pub struct TriangularizedProblem {
    pub solver: SylvesterSolver,
    /// `Q_Aᵀ C₁`.
    pub c1: Mat,
    /// `Q_Bᵀ C₂`.
    pub c2: Mat,
    /// `Q_Aᵀ Nᵢ Q_A`.
    pub n: Vec<Mat>,
    /// `Q_Bᵀ Mᵢ Q_B`.
    pub m: Vec<Mat>,
}

impl TriangularizedProblem {
    pub fn new(problem: &DenseProblem) -> Result<Self> {
        let solver = SylvesterSolver::new(&problem.a, &problem.b)?;
        let qa = &solver.schur_a.q;
        let qb = &solver.schur_b.q;
        let c1 = qa.tr_mul(&problem.c1);
        let c2 = qb.tr_mul(&problem.c2);
        let n = problem.terms.iter().map(|(nm, _)| qa.tr_mul(nm) * qa).collect();
        let m = problem.terms.iter().map(|(_, mm)| qb.tr_mul(mm) * qb).collect();
        Ok(Self { solver, c1, c2, n, m })
    }

    /// `Σ Ñᵢ Y M̃ᵢᵀ`.
    pub fn apply_perturbation(&self, y: &Mat) -> Mat {
        let mut out = Mat::zeros(y.nrows(), y.ncols());
        for (nt, mt) in self.n.iter().zip(&self.m) {
            out += nt * y * mt.transpose();
        }
        out
    }

    /// Maps Schur coordinates back: `Q_A Y Q_Bᵀ`.
    pub fn to_original(&self, y: &Mat) -> Mat {
        &self.solver.schur_a.q * y * self.solver.schur_b.q.transpose()
    }
}

#[derive(Debug, Clone)]
pub struct NeumannSolution {
    pub x: Mat,
    /// Index ℓ of the last term included.
    pub terms_used: usize,
    /// `‖R⁽ʲ⁾‖_F / ‖C₁C₂ᵀ‖_F` for j = 0..=ℓ.
    pub residual_history: Vec<f64>,
    /// `‖Ỹⱼ‖_F` for j = 0..=ℓ.
    pub term_norms: Vec<f64>,
}

/// Solves the dense problem by the Neumann series to relative residual `tol`.
pub fn neumann_solve(problem: &DenseProblem, tol: f64, max_terms: usize) -> Result<NeumannSolution> {
    let tp = TriangularizedProblem::new(problem)?;
    neumann_solve_triangularized(&tp, tol, max_terms)
}

/// Same as [`neumann_solve`] with the Schur reduction already done.
pub fn neumann_solve_triangularized(
    tp: &TriangularizedProblem,
    tol: f64,
    max_terms: usize,
) -> Result<NeumannSolution> {
    let rhs = &tp.c1 * tp.c2.transpose();
    let rhs_norm = rhs.norm();
    let mut y = tp.solver.solve_transformed(&rhs)?;
    let mut sum = y.clone();
    let mut residual_history = Vec::new();
    let mut term_norms = vec![y.norm()];
    let mut growing = 0usize;
    let mut ell = 0usize;
    loop {
        let p = tp.apply_perturbation(&y);
        let res = p.norm();
        let rel = if rhs_norm > 0.0 { res / rhs_norm } else { res };
        residual_history.push(rel);
        if res <= tol * rhs_norm || res == 0.0 {
            break;
        }
        if ell >= max_terms {
            return Err(Error::Divergence { terms: ell, last_residual: rel });
        }
        y = tp.solver.solve_transformed(&(-p))?;
        ell += 1;
        let norm = y.norm();
        if !norm.is_finite() {
            return Err(Error::Divergence { terms: ell, last_residual: f64::INFINITY });
        }
        growing = if norm > *term_norms.last().unwrap() { growing + 1 } else { 0 };
        term_norms.push(norm);
        sum += &y;
        if growing >= DIVERGENCE_WINDOW {
            return Err(Error::Divergence { terms: ell, last_residual: rel });
        }
    }
    log::debug!("Neumann series converged with {} terms", ell + 1);
    Ok(NeumannSolution { x: tp.to_original(&sum), terms_used: ell, residual_history, term_norms })
}

/// Partial sums `X⁽⁰⁾, …, X⁽ᶜᵒᵘⁿᵗ⁻¹⁾` in original coordinates, with no
/// stopping test.
pub fn neumann_partial_sums(problem: &DenseProblem, count: usize) -> Result<Vec<Mat>> {
    let tp = TriangularizedProblem::new(problem)?;
    let rhs = &tp.c1 * tp.c2.transpose();
    let mut y = tp.solver.solve_transformed(&rhs)?;
    let mut sum = y.clone();
    let mut out = Vec::with_capacity(count);
    for j in 0..count {
        out.push(tp.to_original(&sum));
        if j + 1 < count {
            y = tp.solver.solve_transformed(&(-tp.apply_perturbation(&y)))?;
            sum += &y;
        }
    }
    Ok(out)
}

/// The series terms `Ỹ₀, …, Ỹ_{count−1}` in Schur coordinates.
pub fn neumann_terms(tp: &TriangularizedProblem, count: usize) -> Result<Vec<Mat>> {
    let rhs = &tp.c1 * tp.c2.transpose();
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return Ok(out);
    }
    out.push(tp.solver.solve_transformed(&rhs)?);
    for _ in 1..count {
        let next = tp.solver.solve_transformed(&(-tp.apply_perturbation(out.last().unwrap())))?;
        out.push(next);
    }
    Ok(out)
}

/// `‖L⁻¹(C)‖ · ρ^{ℓ+1} / (1 − ρ)`, the error of truncating the series after
/// term ℓ.
pub fn truncation_error_bound(norm_linv_c: f64, rho: f64, ell: usize) -> Result<f64> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::Domain(format!("spectral radius {rho} outside [0, 1)")));
    }
    Ok(norm_linv_c * rho.powi(ell as i32 + 1) / (1.0 - rho))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{kron_dense_solve, kron_spectral_radius};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, n: usize, b: usize) -> Mat {
        Mat::from_fn(n, b, |_, _| rng.random_range(-1.0..1.0))
    }

    fn stable(rng: &mut ChaCha8Rng, n: usize) -> Mat {
        Mat::identity(n, n) * -3.0 + random(rng, n, n) * (0.5 / (n as f64).sqrt())
    }

    fn problem(rng: &mut ChaCha8Rng, n: usize, m: usize, scale: f64) -> DenseProblem {
        DenseProblem {
            a: stable(rng, n),
            b: stable(rng, n),
            terms: (0..m).map(|_| (random(rng, n, n) * scale, random(rng, n, n) * scale)).collect(),
            c1: random(rng, n, 2),
            c2: random(rng, n, 2),
        }
    }

    #[test]
    fn no_perturbation_is_one_sylvester_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let dp = problem(&mut rng, 10, 0, 0.0);
        let sol = neumann_solve(&dp, 1e-12, 10).unwrap();
        assert_eq!(sol.terms_used, 0);
        let xs = SylvesterSolver::new(&dp.a, &dp.b).unwrap().solve(&dp.rhs()).unwrap();
        assert!((&sol.x - &xs).norm() <= 1e-14 * xs.norm());
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut dp = problem(&mut rng, 8, 2, 0.3);
        dp.c1 = Mat::zeros(8, 2);
        let sol = neumann_solve(&dp, 1e-12, 10).unwrap();
        assert_eq!(sol.terms_used, 0);
        assert_eq!(sol.x, Mat::zeros(8, 8));
    }

    #[test]
    fn matches_oracle_and_predicted_term_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 20;
        let mut dp = problem(&mut rng, n, 1, 1.0);
        // Rescale the perturbation so that ρ(L⁻¹Π) = 1/2.
        let rho0 = kron_spectral_radius(&dp).unwrap();
        let s = (0.5 / rho0).sqrt();
        for (nm, mm) in dp.terms.iter_mut() {
            *nm *= s;
            *mm *= s;
        }
        let rho = kron_spectral_radius(&dp).unwrap();
        assert!((rho - 0.5).abs() < 1e-10);
        let tol = 1e-12;
        let sol = neumann_solve(&dp, tol, 200).unwrap();
        let xo = kron_dense_solve(&dp).unwrap();
        assert!((&sol.x - &xo).norm() <= 1e-8 * xo.norm());
        let predicted = tol.ln() / rho.ln();
        assert!(
            (sol.terms_used as f64 - predicted).abs() <= 3.0,
            "used {} terms, predicted {predicted:.1}",
            sol.terms_used
        );
    }

    #[test]
    fn recurrence_and_exact_residual_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 15;
        let dp = problem(&mut rng, n, 2, 0.4);
        let tp = TriangularizedProblem::new(&dp).unwrap();
        let terms = neumann_terms(&tp, 8).unwrap();
        let ua = &tp.solver.schur_a.u;
        let ub = &tp.solver.schur_b.u;
        for j in 0..terms.len() - 1 {
            let lhs = ua * &terms[j + 1] + &terms[j + 1] * ub.transpose() + tp.apply_perturbation(&terms[j]);
            assert!(lhs.norm() <= 1e-11 * terms[j].norm());
        }
        let sums = neumann_partial_sums(&dp, 8).unwrap();
        for (l, x) in sums.iter().enumerate() {
            let direct = dp.residual(x).norm();
            let closed = tp.apply_perturbation(&terms[l]).norm();
            assert!((direct - closed).abs() <= 1e-10 * closed.max(direct), "ℓ = {l}");
        }
        // Similarity preserves coefficient norms.
        for ((nm, mm), (nt, mt)) in dp.terms.iter().zip(tp.n.iter().zip(&tp.m)) {
            assert!((nm.norm() - nt.norm()).abs() <= 1e-12 * nm.norm());
            assert!((mm.norm() - mt.norm()).abs() <= 1e-12 * mm.norm());
        }
    }

    #[test]
    fn divergence_is_detected() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 8;
        let mut dp = problem(&mut rng, n, 1, 1.0);
        let rho0 = kron_spectral_radius(&dp).unwrap();
        let s = (3.0 / rho0).sqrt();
        for (nm, mm) in dp.terms.iter_mut() {
            *nm *= s;
            *mm *= s;
        }
        assert!(matches!(neumann_solve(&dp, 1e-12, 200), Err(Error::Divergence { .. })));
    }

    #[test]
    fn truncation_bound_formula() {
        assert_eq!(truncation_error_bound(3.0, 0.0, 5).unwrap(), 0.0);
        assert_eq!(truncation_error_bound(1.0, 0.5, 0).unwrap(), 1.0);
        assert!((truncation_error_bound(2.0, 0.25, 2).unwrap() - 2.0 * 0.25f64.powi(3) / 0.75).abs() < 1e-16);
        assert!(matches!(truncation_error_bound(1.0, 1.0, 0), Err(Error::Domain(_))));
    }
}
