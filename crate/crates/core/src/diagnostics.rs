//! Low-rank approximability diagnostics: singular value decay of small dense
//! solutions, the Neumann–quadrature rank bound, and the exponential-sum
//! approximation of the Sylvester inverse.

use serde::{Deserialize, Serialize};

use crate::dense::schur::eigenvalues;
use crate::dense::{jacobi_svd, kron_dense_solve, LowRankFactorPair, SylvesterSolver, KRON_DENSE_LIMIT};
use crate::neumann::neumann_solve;
use crate::operators::GeneralizedSylvesterProblem;
use crate::{Error, Mat, Result};

/// Singular values of a dense solution, largest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayProfile {
    pub singular_values: Vec<f64>,
}

impl DecayProfile {
    pub fn from_matrix(x: &Mat) -> Self {
        Self { singular_values: jacobi_svd(x).s }
    }

    /// `σ_k / σ₁`.
    pub fn normalized(&self) -> Vec<f64> {
        let s1 = self.singular_values.first().copied().unwrap_or(0.0);
        if s1 == 0.0 {
            return vec![0.0; self.singular_values.len()];
        }
        self.singular_values.iter().map(|s| s / s1).collect()
    }

    /// Number of singular values above `tol · σ₁`.
    pub fn numerical_rank(&self, tol: f64) -> usize {
        let s1 = self.singular_values.first().copied().unwrap_or(0.0);
        self.singular_values.iter().filter(|&&s| s > tol * s1).count()
    }
}

/// Solves a small problem densely and returns the spectrum of the solution.
/// Uses Bartels–Stewart without terms, the Neumann series when it converges,
/// and the Kronecker system otherwise.
pub fn singular_value_decay(problem: &GeneralizedSylvesterProblem) -> Result<DecayProfile> {
    let n = problem.n().max(problem.n_right());
    if n > KRON_DENSE_LIMIT {
        return Err(Error::TooLarge { n, limit: KRON_DENSE_LIMIT });
    }
    let dp = problem.to_dense();
    let x = if dp.terms.is_empty() {
        SylvesterSolver::new(&dp.a, &dp.b)?.solve(&dp.rhs())?
    } else {
        match neumann_solve(&dp, 1e-14, crate::neumann::DEFAULT_MAX_TERMS) {
            Ok(sol) => sol.x,
            Err(Error::Divergence { .. }) => kron_dense_solve(&dp)?,
            Err(e) => return Err(e),
        }
    };
    Ok(DecayProfile::from_matrix(&x))
}

/// `(2k+1) r + Σ_{j=1}^{ℓ} (2k+1)^{j+1} m^j r`: rank of the quadrature
/// approximation of the ℓ-term Neumann partial sum.
pub fn rank_bound(ell: usize, k: usize, m: usize, r: usize) -> u128 {
    let q = 2 * k as u128 + 1;
    let (m, r) = (m as u128, r as u128);
    let mut total = q * r;
    let mut qp = q;
    let mut mp = 1u128;
    for _ in 1..=ell {
        qp *= q;
        mp *= m;
        total += qp * mp * r;
    }
    total
}

/// Nodes `t_j` and weights `w_j`, j = −k..=k, of the sinc quadrature for
/// `∫₀^∞ f(t) dt` with step `h = π/√k`, from the substitution `t = asinh(eˢ)`.
pub fn quadrature_rule(k: usize) -> Result<Vec<(f64, f64)>> {
    if k == 0 {
        return Err(Error::Domain("quadrature needs k ≥ 1".into()));
    }
    let h = std::f64::consts::PI / (k as f64).sqrt();
    Ok((-(k as i64)..=k as i64)
        .map(|j| {
            let s = j as f64 * h;
            let t = s.exp().asinh();
            let w = h / (1.0 + (-2.0 * s).exp()).sqrt();
            (t, w)
        })
        .collect())
}

/// Exponential-sum approximation `L_k⁻¹(C₁C₂ᵀ) = −Σ w_j e^{t_j A} C₁ (e^{t_j B} C₂)ᵀ`
/// of the Sylvester solve, returned as factors of width `(2k+1) r`.
///
/// The spectrum is scaled so that the smallest `|Re λ|` of `A ⊕ B` is one.
pub fn quadrature_inverse_apply(a: &Mat, b: &Mat, c1: &Mat, c2: &Mat, k: usize) -> Result<LowRankFactorPair> {
    let n = a.nrows().max(b.nrows());
    if n > KRON_DENSE_LIMIT {
        return Err(Error::TooLarge { n, limit: KRON_DENSE_LIMIT });
    }
    if c1.ncols() != c2.ncols() || c1.nrows() != a.nrows() || c2.nrows() != b.nrows() {
        return Err(Error::Dimension("right-hand side factors do not match the coefficients".into()));
    }
    let max_re = |m: &Mat| -> Result<(f64, f64)> {
        let ev = eigenvalues(m)?;
        let hi = ev.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        let lo = ev.iter().map(|z| -z.re).fold(f64::INFINITY, f64::min);
        Ok((hi, lo))
    };
    let (ha, la) = max_re(a)?;
    let (hb, lb) = max_re(b)?;
    if ha >= 0.0 || hb >= 0.0 {
        return Err(Error::Domain(format!(
            "quadrature needs both spectra in the open left half-plane (max real parts {ha:.3e}, {hb:.3e})"
        )));
    }
    let scale = la + lb;
    let rule = quadrature_rule(k)?;
    let r = c1.ncols();
    let mut left = Mat::zeros(a.nrows(), rule.len() * r);
    let mut right = Mat::zeros(b.nrows(), rule.len() * r);
    for (j, &(t, w)) in rule.iter().enumerate() {
        let tau = t / scale;
        let ea = (a * tau).exp();
        let eb = (b * tau).exp();
        left.columns_mut(j * r, r).copy_from(&(ea * c1 * (-w / scale)));
        right.columns_mut(j * r, r).copy_from(&(eb * c2));
    }
    Ok(LowRankFactorPair::new(left, right))
}
