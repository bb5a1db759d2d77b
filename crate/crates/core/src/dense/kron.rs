//! Brute-force Kronecker formulation, used as the reference solver at small n.
//!
//! With column-major `vec`, the equation `A X + X Bᵀ + Σ Nᵢ X Mᵢᵀ = C₁C₂ᵀ`
//! becomes `(I⊗A + B⊗I + Σ Mᵢ⊗Nᵢ) vec(X) = vec(C₁C₂ᵀ)`.

use nalgebra::DVector;

use super::sylvester::SylvesterSolver;
use crate::{Error, Mat, Result};

/// Largest `n` for which an n²×n² dense object is formed.
pub const KRON_DENSE_LIMIT: usize = 120;

/// A generalized Sylvester equation with all coefficients stored densely.
#[derive(Debug, Clone)]
pub struct DenseProblem {
    pub a: Mat,
    pub b: Mat,
    /// Pairs `(Nᵢ, Mᵢ)`.
    pub terms: Vec<(Mat, Mat)>,
    pub c1: Mat,
    pub c2: Mat,
}

impl DenseProblem {
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn rhs(&self) -> Mat {
        &self.c1 * self.c2.transpose()
    }

    /// `A X + X Bᵀ`.
    pub fn apply_sylvester(&self, x: &Mat) -> Mat {
        &self.a * x + x * self.b.transpose()
    }

    /// `Σ Nᵢ X Mᵢᵀ`.
    pub fn apply_perturbation(&self, x: &Mat) -> Mat {
        let mut out = Mat::zeros(self.a.nrows(), self.b.nrows());
        for (nm, mm) in &self.terms {
            out += nm * x * mm.transpose();
        }
        out
    }

    /// `A X + X Bᵀ + Σ Nᵢ X Mᵢᵀ − C₁C₂ᵀ`.
    pub fn residual(&self, x: &Mat) -> Mat {
        self.apply_sylvester(x) + self.apply_perturbation(x) - self.rhs()
    }

    fn check(&self) -> Result<()> {
        let (p, q) = (self.a.nrows(), self.b.nrows());
        let ok = self.a.is_square()
            && self.b.is_square()
            && self.c1.nrows() == p
            && self.c2.nrows() == q
            && self.c1.ncols() == self.c2.ncols()
            && self
                .terms
                .iter()
                .all(|(nm, mm)| nm.shape() == (p, p) && mm.shape() == (q, q));
        if ok {
            Ok(())
        } else {
            Err(Error::Dimension("inconsistent dense problem".into()))
        }
    }
}

fn kron_add(out: &mut Mat, left: &Mat, right: &Mat) {
    let (p, q) = (right.nrows(), right.ncols());
    for j in 0..left.ncols() {
        for i in 0..left.nrows() {
            let s = left[(i, j)];
            if s != 0.0 {
                let mut blk = out.view_mut((i * p, j * q), (p, q));
                blk.zip_apply(right, |o, r| *o += s * r);
            }
        }
    }
}

/// `I⊗A + B⊗I + Σ Mᵢ⊗Nᵢ` for explicit coefficient lists.
pub fn kron_matrix_parts(a: &Mat, b: &Mat, terms: &[(Mat, Mat)]) -> Mat {
    let (p, q) = (a.nrows(), b.nrows());
    let mut k = Mat::zeros(p * q, p * q);
    kron_add(&mut k, &Mat::identity(q, q), a);
    kron_add(&mut k, b, &Mat::identity(p, p));
    for (nm, mm) in terms {
        kron_add(&mut k, mm, nm);
    }
    k
}

pub fn kron_matrix(problem: &DenseProblem) -> Result<Mat> {
    problem.check()?;
    let n = problem.a.nrows().max(problem.b.nrows());
    if n > KRON_DENSE_LIMIT {
        return Err(Error::TooLarge { n, limit: KRON_DENSE_LIMIT });
    }
    Ok(kron_matrix_parts(&problem.a, &problem.b, &problem.terms))
}

/// Solves the full Kronecker system by LU with one refinement step.
pub fn kron_dense_solve(problem: &DenseProblem) -> Result<Mat> {
    let k = kron_matrix(problem)?;
    let (p, q) = (problem.a.nrows(), problem.b.nrows());
    let rhs_mat = problem.rhs();
    let rhs = DVector::from_column_slice(rhs_mat.as_slice());
    let lu = k.clone().lu();
    let diag = lu.u().diagonal();
    let dmax = diag.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let dmin = diag.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if dmax == 0.0 || dmin < 1e-14 * dmax {
        return Err(Error::Singular(format!(
            "Kronecker matrix is numerically singular (pivot ratio {:e})",
            if dmax == 0.0 { 0.0 } else { dmin / dmax }
        )));
    }
    let mut x = lu
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("Kronecker LU solve failed".into()))?;
    let r = &rhs - &k * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    Ok(Mat::from_column_slice(p, q, x.as_slice()))
}

/// Largest eigenvalue modulus of the pencil `(Σ Mᵢ⊗Nᵢ) v = λ (B⊗I + I⊗A) v`,
/// i.e. the spectral radius of `L⁻¹Π`.
pub fn kron_spectral_radius(problem: &DenseProblem) -> Result<f64> {
    problem.check()?;
    let (p, q) = (problem.a.nrows(), problem.b.nrows());
    let n = p.max(q);
    if n > KRON_DENSE_LIMIT {
        return Err(Error::TooLarge { n, limit: KRON_DENSE_LIMIT });
    }
    if problem.terms.is_empty() {
        return Ok(0.0);
    }
    let solver = SylvesterSolver::new(&problem.a, &problem.b)?;
    let dim = p * q;
    let mut op = Mat::zeros(dim, dim);
    for col in 0..dim {
        let mut e = Mat::zeros(p, q);
        e[(col % p, col / p)] = 1.0;
        let y = solver.solve(&problem.apply_perturbation(&e))?;
        op.column_mut(col).copy_from_slice(y.as_slice());
    }
    if op.iter().all(|v| *v == 0.0) {
        return Ok(0.0);
    }
    super::schur::spectral_radius(&op)
}
