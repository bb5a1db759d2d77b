//! The generalized Sylvester problem `A X + X Bᵀ + Σ Nᵢ X Mᵢᵀ = C₁C₂ᵀ`.

use super::{commutator, same_operator, Operator};
use crate::dense::{hcat, product_norm, DenseProblem, LowRankFactorPair, KRON_DENSE_LIMIT};
use crate::{Error, Mat, Result};

/// One term `Nᵢ X Mᵢᵀ` together with whatever structure is known about it.
#[derive(Debug, Clone)]
pub struct PerturbationTerm {
    pub n: Operator,
    pub m: Operator,
    /// `[A, Nᵢ] = U Ũᵀ`.
    pub commutator_left: Option<LowRankFactorPair>,
    /// `[B, Mᵢ] = Q Q̃ᵀ`.
    pub commutator_right: Option<LowRankFactorPair>,
    /// `Nᵢ = 𝒰 𝒰̃ᵀ`.
    pub low_rank_left: Option<LowRankFactorPair>,
    /// `Mᵢ = 𝒬 𝒬̃ᵀ`.
    pub low_rank_right: Option<LowRankFactorPair>,
}

impl PerturbationTerm {
    pub fn new(n: Operator, m: Operator) -> Self {
        let low_rank_left = n.low_rank_factors().map(|(u, v)| LowRankFactorPair::new(u, v));
        let low_rank_right = m.low_rank_factors().map(|(u, v)| LowRankFactorPair::new(u, v));
        Self {
            n,
            m,
            commutator_left: None,
            commutator_right: None,
            low_rank_left,
            low_rank_right,
        }
    }

    pub fn with_commutators(mut self, left: LowRankFactorPair, right: LowRankFactorPair) -> Self {
        self.commutator_left = Some(left);
        self.commutator_right = Some(right);
        self
    }
}

#[derive(Debug, Clone)]
pub struct GeneralizedSylvesterProblem {
    pub a: Operator,
    pub b: Operator,
    pub terms: Vec<PerturbationTerm>,
    pub c1: Mat,
    pub c2: Mat,
}

impl GeneralizedSylvesterProblem {
    pub fn new(a: Operator, b: Operator, terms: Vec<PerturbationTerm>, c1: Mat, c2: Mat) -> Result<Self> {
        let (p, q) = (a.dim(), b.dim());
        if c1.nrows() != p || c2.nrows() != q {
            return Err(Error::Dimension(format!(
                "right-hand side factors have {} and {} rows, coefficients are {p} and {q}",
                c1.nrows(),
                c2.nrows()
            )));
        }
        if c1.ncols() != c2.ncols() {
            return Err(Error::Dimension("C1 and C2 have different widths".into()));
        }
        for (i, t) in terms.iter().enumerate() {
            if t.n.dim() != p || t.m.dim() != q {
                return Err(Error::Dimension(format!("perturbation term {i} has wrong size")));
            }
            let checks = [
                (&t.commutator_left, p),
                (&t.commutator_right, q),
                (&t.low_rank_left, p),
                (&t.low_rank_right, q),
            ];
            for (f, rows) in checks {
                if let Some(f) = f {
                    if f.left.nrows() != rows || f.right.nrows() != rows {
                        return Err(Error::Dimension(format!("factors of term {i} have wrong size")));
                    }
                }
            }
        }
        Ok(Self { a, b, terms, c1, c2 })
    }

    /// Dimension of the left space (rows of X).
    pub fn n(&self) -> usize {
        self.a.dim()
    }

    /// Dimension of the right space (columns of X).
    pub fn n_right(&self) -> usize {
        self.b.dim()
    }

    pub fn m(&self) -> usize {
        self.terms.len()
    }

    pub fn r(&self) -> usize {
        self.c1.ncols()
    }

    /// `B = A`, `Mᵢ = Nᵢ` (same objects) and `C₂ = C₁`.
    pub fn is_lyapunov(&self) -> bool {
        same_operator(&self.a, &self.b)
            && self.terms.iter().all(|t| same_operator(&t.n, &t.m))
            && self.c1 == self.c2
    }

    pub fn has_commutator_factors(&self) -> bool {
        self.terms
            .iter()
            .all(|t| t.commutator_left.is_some() && t.commutator_right.is_some())
    }

    pub fn has_low_rank_terms(&self) -> bool {
        self.terms.iter().all(|t| t.low_rank_left.is_some() && t.low_rank_right.is_some())
    }

    /// `‖C₁C₂ᵀ‖_F`.
    pub fn rhs_norm(&self) -> f64 {
        product_norm(&self.c1, &self.c2)
    }

    /// Factors of `A X + X Bᵀ`: `(A L, L)·(R, B R)ᵀ`.
    pub fn apply_l(&self, x: &LowRankFactorPair) -> LowRankFactorPair {
        let al = self.a.apply(&x.left);
        let br = self.b.apply(&x.right);
        LowRankFactorPair::new(hcat(&[&al, &x.left]), hcat(&[&x.right, &br]))
    }

    /// Factors of `Σ Nᵢ X Mᵢᵀ`.
    pub fn apply_pi(&self, x: &LowRankFactorPair) -> LowRankFactorPair {
        let lefts: Vec<Mat> = self.terms.iter().map(|t| t.n.apply(&x.left)).collect();
        let rights: Vec<Mat> = self.terms.iter().map(|t| t.m.apply(&x.right)).collect();
        LowRankFactorPair::new(
            hcat_owned(&lefts, self.n()),
            hcat_owned(&rights, self.n_right()),
        )
    }

    /// Factors `(P, S)` of the residual `A X + X Bᵀ + Σ Nᵢ X Mᵢᵀ − C₁C₂ᵀ`,
    /// of width `k(2+m) + r`.
    pub fn residual_factors(&self, x: &LowRankFactorPair) -> LowRankFactorPair {
        let l = self.apply_l(x);
        let p = self.apply_pi(x);
        let neg_c1 = -&self.c1;
        LowRankFactorPair::new(
            hcat(&[&l.left, &p.left, &neg_c1]),
            hcat(&[&l.right, &p.right, &self.c2]),
        )
    }

    /// `‖R‖_F` from the residual factors, without forming n×n matrices.
    pub fn residual_norm(&self, x: &LowRankFactorPair) -> f64 {
        self.residual_factors(x).norm()
    }

    /// Dense copy of every coefficient.
    pub fn to_dense(&self) -> DenseProblem {
        DenseProblem {
            a: self.a.to_dense(),
            b: self.b.to_dense(),
            terms: self.terms.iter().map(|t| (t.n.to_dense(), t.m.to_dense())).collect(),
            c1: self.c1.clone(),
            c2: self.c2.clone(),
        }
    }

    /// Checks every attached commutator factor pair: densely for n ≤ 120
    /// (relative to `‖A‖_F‖N‖_F`), otherwise by random probing. Returns the
    /// worst relative error.
    pub fn validate_commutators(&self, tol: f64) -> Result<f64> {
        let mut worst = 0.0f64;
        let dense = self.n().max(self.n_right()) <= KRON_DENSE_LIMIT;
        let (ad, bd) = if dense {
            (Some(self.a.to_dense()), Some(self.b.to_dense()))
        } else {
            (None, None)
        };
        for (i, t) in self.terms.iter().enumerate() {
            for (side, op, f) in [
                (0, &t.n, &t.commutator_left),
                (1, &t.m, &t.commutator_right),
            ] {
                let Some(f) = f else { continue };
                let coef = if side == 0 { &self.a } else { &self.b };
                let err = if dense {
                    let c = if side == 0 { ad.as_ref().unwrap() } else { bd.as_ref().unwrap() };
                    let nd = op.to_dense();
                    let k = c * &nd - &nd * c;
                    let scale = c.norm() * nd.norm();
                    let e = (k - f.densify()).norm();
                    if scale == 0.0 {
                        e
                    } else {
                        e / scale
                    }
                } else {
                    commutator::probe_commutator(coef.as_ref(), op.as_ref(), f, 4, 17 + i as u64)
                };
                worst = worst.max(err);
                if err > tol {
                    return Err(Error::Config(format!(
                        "commutator factors of term {i} ({}) are inconsistent: relative error {err:e}",
                        if side == 0 { "left" } else { "right" }
                    )));
                }
            }
        }
        Ok(worst)
    }
}

fn hcat_owned(blocks: &[Mat], rows: usize) -> Mat {
    if blocks.is_empty() {
        return Mat::zeros(rows, 0);
    }
    let refs: Vec<&Mat> = blocks.iter().collect();
    hcat(&refs)
}
