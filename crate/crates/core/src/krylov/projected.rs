//! Galerkin-projected coefficients and residual norms.

use std::ops::Range;

use crate::dense::{kron_spectral_radius, DenseProblem};
use crate::operators::Operator;
use crate::{Error, Mat, Result};

/// Largest projected dimension for which the solvability eigenproblem is
/// formed densely.
pub const SOLVABILITY_LIMIT: usize = 40;

/// `T = 𝒱ᵀA𝒱`, `Gᵢ = 𝒱ᵀNᵢ𝒱`, `E = 𝒱ᵀC` for one side.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedSide {
    pub t: Mat,
    pub g: Vec<Mat>,
    pub e: Mat,
}

/// `[old, old·new; new·old, new·new]` block update of `Vᵀ X V`.
fn extend_square(prev: &Mat, op: &Operator, v: &Mat, old: usize) -> Mat {
    let p = v.ncols();
    let fresh = v.columns(old, p - old).clone_owned();
    let x_new = op.apply(&fresh);
    let xt_new = op.transpose_apply(&fresh);
    let mut out = Mat::zeros(p, p);
    out.view_mut((0, 0), (old, old)).copy_from(prev);
    // Column block: Vᵀ X V_new.
    out.view_mut((0, old), (p, p - old)).copy_from(&v.tr_mul(&x_new));
    // Row block: V_newᵀ X V_old = (Xᵀ V_new)ᵀ V_old.
    if old > 0 {
        let vo = v.columns(0, old);
        out.view_mut((old, 0), (p - old, old)).copy_from(&xt_new.tr_mul(&vo));
    }
    out
}

impl ProjectedSide {
    pub fn empty(terms: usize, r: usize) -> Self {
        Self { t: Mat::zeros(0, 0), g: vec![Mat::zeros(0, 0); terms], e: Mat::zeros(0, r) }
    }

    pub fn dim(&self) -> usize {
        self.t.nrows()
    }

    /// Adds the rows and columns for `v[:, old..]`; the leading `old × old`
    /// blocks are kept as they are.
    pub fn extend(&mut self, op: &Operator, ns: &[Operator], c: &Mat, v: &Mat, old: usize) {
        assert_eq!(self.dim(), old, "projected side out of step with basis");
        self.t = extend_square(&self.t, op, v, old);
        for (g, n) in self.g.iter_mut().zip(ns) {
            *g = extend_square(g, n, v, old);
        }
        let fresh = v.columns(old, v.ncols() - old);
        let e_new = fresh.tr_mul(c);
        let mut e = Mat::zeros(v.ncols(), c.ncols());
        e.view_mut((0, 0), (old, c.ncols())).copy_from(&self.e);
        e.view_mut((old, 0), (v.ncols() - old, c.ncols())).copy_from(&e_new);
        self.e = e;
    }

    /// Direct assembly, for checking the incremental path.
    pub fn from_scratch(op: &Operator, ns: &[Operator], c: &Mat, v: &Mat) -> Self {
        Self {
            t: v.tr_mul(&op.apply(v)),
            g: ns.iter().map(|n| v.tr_mul(&n.apply(v))).collect(),
            e: v.tr_mul(c),
        }
    }
}

/// The small equation `T Z + Z Hᵀ + Σ Gᵢ Z Fᵢᵀ = E₁E₂ᵀ`.
#[derive(Debug, Clone)]
pub struct ProjectedProblem {
    pub left: ProjectedSide,
    /// `None` when the right space is the left one.
    pub right: Option<ProjectedSide>,
}

impl ProjectedProblem {
    pub fn right(&self) -> &ProjectedSide {
        self.right.as_ref().unwrap_or(&self.left)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.left.dim(), self.right().dim())
    }

    pub fn to_dense(&self) -> DenseProblem {
        let r = self.right();
        DenseProblem {
            a: self.left.t.clone(),
            b: r.t.clone(),
            terms: self.left.g.iter().cloned().zip(r.g.iter().cloned()).collect(),
            c1: self.left.e.clone(),
            c2: r.e.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolvabilityCheck {
    /// `None` when the check was skipped or the pencil is singular.
    pub solvable: Option<bool>,
    /// Largest `|λ|` of `(Σ Fᵢ⊗Gᵢ) v = λ (H⊗I + I⊗T) v`.
    pub max_ratio: Option<f64>,
}

/// Checks whether every ratio of the projected pencil lies in the open unit
/// disk, which makes the projected problem uniquely solvable by the Neumann
/// series. Skipped above [`SOLVABILITY_LIMIT`].
pub fn check_projected_solvability(pp: &ProjectedProblem) -> Result<SolvabilityCheck> {
    let (p, q) = pp.dims();
    if p > SOLVABILITY_LIMIT || q > SOLVABILITY_LIMIT {
        return Ok(SolvabilityCheck { solvable: None, max_ratio: None });
    }
    match kron_spectral_radius(&pp.to_dense()) {
        Ok(rho) => Ok(SolvabilityCheck { solvable: Some(rho < 1.0), max_ratio: Some(rho) }),
        Err(Error::SpectrumOverlap { .. }) | Err(Error::Singular(_)) => {
            Ok(SolvabilityCheck { solvable: None, max_ratio: None })
        }
        Err(e) => Err(e),
    }
}

/// `(‖τ_L Z[rows, :]‖² + ‖Z[:, cols] τ_Rᵀ‖²)^{1/2}`, where `rows` and
/// `cols` index the last blocks of the two bases.
pub fn cheap_residual_norm(
    z: &Mat,
    tau_left: &Mat,
    rows: Range<usize>,
    tau_right: &Mat,
    cols: Range<usize>,
) -> f64 {
    let zl = z.rows(rows.start, rows.len());
    let zr = z.columns(cols.start, cols.len());
    let a = (tau_left * zl).norm_squared();
    let b = (zr * tau_right.transpose()).norm_squared();
    (a + b).sqrt()
}
