//! Orthonormal block basis of an extended Krylov space.

use std::ops::Range;

use crate::dense::hcat;
use crate::dense::orth::orthonormalize_block;
use crate::operators::Operator;
use crate::{Error, Mat, Result};

/// Column layout of one block: `poly` columns from the polynomial side
/// followed by `inv` columns from the inverted side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockInfo {
    pub start: usize,
    pub poly: usize,
    pub inv: usize,
}

impl BlockInfo {
    pub fn width(&self) -> usize {
        self.poly + self.inv
    }

    pub fn range(&self) -> Range<usize> {
        self.start..self.start + self.width()
    }
}

/// `𝒱_k = [V₁, …, V_k]` spanning `EK_k(A, C̄)`, together with the coupling
/// `(I − 𝒱_k𝒱_kᵀ) A V_k = Q τ` that yields the cheap residual norm.
#[derive(Debug, Clone)]
pub struct ExtendedKrylovBasis {
    op: Operator,
    v: Mat,
    blocks: Vec<BlockInfo>,
    rbar: usize,
    linear_solves: usize,
    av_last: Mat,
    tau_q: Mat,
    tau: Mat,
}

impl ExtendedKrylovBasis {
    /// `V₁ = orth(C̄, A⁻¹C̄)`; costs `r̄` inverse column solves.
    pub fn bootstrap(op: Operator, cbar: &Mat) -> Result<Self> {
        if cbar.nrows() != op.dim() {
            return Err(Error::Dimension(format!(
                "starting block has {} rows, operator is {}",
                cbar.nrows(),
                op.dim()
            )));
        }
        let start = orthonormalize_block(cbar, None).q;
        let rbar = start.ncols();
        if rbar == 0 {
            return Err(Error::Config("starting block is zero".into()));
        }
        let inv = op.inverse_apply(&start)?;
        let o = orthonormalize_block(&hcat(&[&start, &inv]), None);
        let poly = o.kept.iter().filter(|&&j| j < rbar).count();
        let block = BlockInfo { start: 0, poly, inv: o.width() - poly };
        let mut basis = Self {
            op,
            v: o.q,
            blocks: vec![block],
            rbar,
            linear_solves: rbar,
            av_last: Mat::zeros(0, 0),
            tau_q: Mat::zeros(0, 0),
            tau: Mat::zeros(0, 0),
        };
        basis.update_coupling();
        Ok(basis)
    }

    /// Appends `V_{k+1} = orth(A V_k⁽¹⁾, A⁻¹ V_k⁽²⁾)` against `𝒱_k`.
    /// Returns `false` (and leaves the basis unchanged) when every candidate
    /// deflates.
    pub fn expand(&mut self) -> Result<bool> {
        let last = *self.blocks.last().unwrap();
        let poly_part = self.av_last.columns(0, last.poly).clone_owned();
        let inv_src = self.v.columns(last.start + last.poly, last.inv).clone_owned();
        let inv_part = self.op.inverse_apply(&inv_src)?;
        self.linear_solves += last.inv;
        let o = orthonormalize_block(&hcat(&[&poly_part, &inv_part]), Some(&self.v));
        if o.width() == 0 {
            return Ok(false);
        }
        let poly = o.kept.iter().filter(|&&j| j < last.poly).count();
        let block = BlockInfo { start: self.v.ncols(), poly, inv: o.width() - poly };
        self.v = hcat(&[&self.v, &o.q]);
        self.blocks.push(block);
        self.update_coupling();
        Ok(true)
    }

    fn update_coupling(&mut self) {
        let last = *self.blocks.last().unwrap();
        let vk = self.v.columns(last.start, last.width()).clone_owned();
        self.av_last = self.op.apply(&vk);
        let mut p = self.av_last.clone();
        for _ in 0..2 {
            let c = self.v.tr_mul(&p);
            p -= &self.v * c;
        }
        let qr = p.qr();
        self.tau_q = qr.q();
        self.tau = qr.r();
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    /// `𝒱_k`.
    pub fn basis(&self) -> &Mat {
        &self.v
    }

    pub fn dim(&self) -> usize {
        self.v.ncols()
    }

    pub fn iterations(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[BlockInfo] {
        &self.blocks
    }

    /// Columns of the last block `V_k` in `𝒱_k`.
    pub fn last_block(&self) -> Range<usize> {
        self.blocks.last().unwrap().range()
    }

    /// Starting-block width `r̄`.
    pub fn rbar(&self) -> usize {
        self.rbar
    }

    /// Columns to which `A⁻¹` has been applied so far.
    pub fn linear_solves(&self) -> usize {
        self.linear_solves
    }

    /// `A V_k`.
    pub fn last_image(&self) -> &Mat {
        &self.av_last
    }

    /// `τ` with `(I − 𝒱𝒱ᵀ) A V_k = Q τ`.
    pub fn tau(&self) -> &Mat {
        &self.tau
    }

    /// The orthonormal `Q` paired with [`tau`](Self::tau); its span lies in
    /// the next block.
    pub fn tau_q(&self) -> &Mat {
        &self.tau_q
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{BandedOperator, DenseOperator, DiagonalOperator, LinearMatrixOperator};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, n: usize, b: usize) -> Mat {
        Mat::from_fn(n, b, |_, _| rng.random_range(-1.0..1.0))
    }

    fn stable(rng: &mut ChaCha8Rng, n: usize) -> Mat {
        let mut a = random(rng, n, n) * 0.3;
        for i in 0..n {
            a[(i, i)] -= 4.0;
        }
        a
    }

    #[test]
    fn arnoldi_relation_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 40;
        let a = stable(&mut rng, n);
        let op = DenseOperator::shared(a.clone()).unwrap();
        let mut b = ExtendedKrylovBasis::bootstrap(op, &random(&mut rng, n, 2)).unwrap();
        for _ in 0..4 {
            assert!(b.expand().unwrap());
        }
        let v = b.basis();
        let k = v.ncols();
        assert!((v.tr_mul(v) - Mat::identity(k, k)).norm() < 1e-10);
        let av = &a * v;
        let t = v.tr_mul(&av);
        let mut rhs = v * &t;
        let last = b.last_block();
        let coupling = b.tau_q() * b.tau();
        for (c, j) in last.clone().enumerate() {
            let mut col = rhs.column_mut(j);
            col += coupling.column(c);
        }
        assert!((&av - rhs).norm() <= 1e-10 * av.norm());
        assert_eq!(b.linear_solves(), 2 * 5);
        assert_eq!(b.dim(), 4 * 5);
        // The coupling direction lies in the next block.
        assert!(b.expand().unwrap());
        let vn = b.basis();
        assert!((&coupling - vn * vn.tr_mul(&coupling)).norm() < 1e-8 * coupling.norm().max(1.0));
    }

    #[test]
    fn identity_stagnates() {
        let op = DiagonalOperator::identity(10).shared();
        let c = Mat::from_fn(10, 1, |i, _| (i + 1) as f64);
        let mut b = ExtendedKrylovBasis::bootstrap(op, &c).unwrap();
        assert_eq!(b.dim(), 1);
        assert!(!b.expand().unwrap());
        assert_eq!(b.iterations(), 1);
        assert!(b.tau().norm() < 1e-14);
    }

    #[test]
    fn tridiagonal_spans_extended_space() {
        let n = 60;
        let t = BandedOperator::toeplitz_tridiagonal(n, 1.0, -3.0, 1.0);
        let a = t.to_dense();
        let op = t.shared();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = random(&mut rng, n, 1);
        let mut b = ExtendedKrylovBasis::bootstrap(op, &c).unwrap();
        b.expand().unwrap();
        b.expand().unwrap();
        let ainv = a.clone().try_inverse().unwrap();
        let parts = [
            c.clone(),
            &a * &c,
            &a * &a * &c,
            &ainv * &c,
            &ainv * &ainv * &c,
            &ainv * &ainv * &ainv * &c,
        ];
        let refs: Vec<&Mat> = parts.iter().collect();
        let k = crate::dense::orth::orth(&hcat(&refs));
        let v = b.basis();
        assert_eq!(v.ncols(), 6);
        assert!((&k - v * v.tr_mul(&k)).norm() < 1e-9);
    }
}
