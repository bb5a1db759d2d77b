//! Bartels–Stewart solver for `A Y + Y Bᵀ = C`.

use nalgebra::Complex;

use super::schur::{block_eigenvalues, quasi_triangular_blocks, real_schur, DiagonalBlock, SchurForm};
use crate::{Error, Mat, Result};

/// Relative threshold on `|λᵢ(A) + λⱼ(B)|` below which the equation is
/// treated as singular.
pub const OVERLAP_THRESHOLD: f64 = 1e-13;

/// Solves `U_A Y + Y U_Bᵀ = C` for quasi-upper-triangular `U_A` and `U_B`.
pub fn solve_triangular_sylvester(ua: &Mat, ub: &Mat, c: &Mat) -> Result<Mat> {
    let ba = quasi_triangular_blocks(ua);
    let bb = quasi_triangular_blocks(ub);
    solve_with_blocks(ua, &ba, ub, &bb, c)
}

fn solve_with_blocks(
    ua: &Mat,
    ba: &[DiagonalBlock],
    ub: &Mat,
    bb: &[DiagonalBlock],
    c: &Mat,
) -> Result<Mat> {
    let (p, q) = (ua.nrows(), ub.nrows());
    if ua.ncols() != p || ub.ncols() != q || c.nrows() != p || c.ncols() != q {
        return Err(Error::Dimension(format!(
            "triangular Sylvester: U_A {}×{}, U_B {}×{}, C {}×{}",
            ua.nrows(),
            ua.ncols(),
            ub.nrows(),
            ub.ncols(),
            c.nrows(),
            c.ncols()
        )));
    }
    let threshold = OVERLAP_THRESHOLD * (ua.norm() + ub.norm());
    let eig_a: Vec<Vec<Complex<f64>>> = ba.iter().map(|b| block_eigenvalues(ua, *b)).collect();
    let eig_b: Vec<Vec<Complex<f64>>> = bb.iter().map(|b| block_eigenvalues(ub, *b)).collect();

    let mut rhs = c.clone();
    let mut y = Mat::zeros(p, q);
    let mut small = [0.0f64; 16];
    let mut sol = [0.0f64; 4];

    for (jb, bj) in bb.iter().enumerate().rev() {
        let jr = bj.range();
        for (ib, bi) in ba.iter().enumerate().rev() {
            let ir = bi.range();
            let gap = eig_a[ib]
                .iter()
                .flat_map(|la| eig_b[jb].iter().map(move |mb| (la + mb).norm()))
                .fold(f64::INFINITY, f64::min);
            if gap < threshold || gap == 0.0 {
                return Err(Error::SpectrumOverlap { gap, threshold });
            }
            // (I ⊗ A_II + B_JJ ⊗ I) vec(Y_IJ) = vec(rhs_IJ)
            let (di, dj) = (bi.size, bj.size);
            let d = di * dj;
            for v in small.iter_mut() {
                *v = 0.0;
            }
            for k in 0..dj {
                for c2 in 0..di {
                    for i in 0..dj {
                        for a in 0..di {
                            let mut val = 0.0;
                            if i == k {
                                val += ua[(ir.start + a, ir.start + c2)];
                            }
                            if a == c2 {
                                val += ub[(jr.start + i, jr.start + k)];
                            }
                            small[(a + i * di) + (c2 + k * di) * d] = val;
                        }
                    }
                }
            }
            for i in 0..dj {
                for a in 0..di {
                    sol[a + i * di] = rhs[(ir.start + a, jr.start + i)];
                }
            }
            solve_small(&mut small[..d * d], &mut sol[..d], d)?;
            for i in 0..dj {
                for a in 0..di {
                    y[(ir.start + a, jr.start + i)] = sol[a + i * di];
                }
            }
            // Rows above the block in the same column block.
            if ir.start > 0 {
                let yij = y.view((ir.start, jr.start), (di, dj)).clone_owned();
                let upd = ua.view((0, ir.start), (ir.start, di)) * yij;
                let mut target = rhs.view_mut((0, jr.start), (ir.start, dj));
                target -= upd;
            }
        }
        // Earlier column blocks: rhs[:, j'] -= Y[:, J] U_B[j', J]ᵀ.
        if jr.start > 0 {
            let yj = y.columns(jr.start, bj.size).clone_owned();
            let coupling = ub.view((0, jr.start), (jr.start, bj.size)).transpose();
            let upd = yj * coupling;
            let mut target = rhs.columns_mut(0, jr.start);
            target -= upd;
        }
    }
    Ok(y)
}

/// Gaussian elimination with partial pivoting on a column-major `d×d` system.
fn solve_small(m: &mut [f64], b: &mut [f64], d: usize) -> Result<()> {
    for k in 0..d {
        let piv = (k..d)
            .max_by(|&i, &j| m[i + k * d].abs().total_cmp(&m[j + k * d].abs()))
            .unwrap();
        if m[piv + k * d] == 0.0 {
            return Err(Error::SpectrumOverlap { gap: 0.0, threshold: 0.0 });
        }
        if piv != k {
            for j in 0..d {
                m.swap(k + j * d, piv + j * d);
            }
            b.swap(k, piv);
        }
        for i in (k + 1)..d {
            let f = m[i + k * d] / m[k + k * d];
            if f != 0.0 {
                for j in k..d {
                    m[i + j * d] -= f * m[k + j * d];
                }
                b[i] -= f * b[k];
            }
        }
    }
    for k in (0..d).rev() {
        let mut s = b[k];
        for j in (k + 1)..d {
            s -= m[k + j * d] * b[j];
        }
        b[k] = s / m[k + k * d];
    }
    Ok(())
}

/// Bartels–Stewart solver with both Schur forms computed once.
#[derive(Debug, Clone)]
pub struct SylvesterSolver {
    pub schur_a: SchurForm,
    pub schur_b: SchurForm,
    blocks_a: Vec<DiagonalBlock>,
    blocks_b: Vec<DiagonalBlock>,
}

impl SylvesterSolver {
    pub fn new(a: &Mat, b: &Mat) -> Result<Self> {
        let schur_a = real_schur(a)?;
        let schur_b = real_schur(b)?;
        Ok(Self::from_schur(schur_a, schur_b))
    }

    pub fn from_schur(schur_a: SchurForm, schur_b: SchurForm) -> Self {
        let blocks_a = schur_a.blocks();
        let blocks_b = schur_b.blocks();
        Self { schur_a, schur_b, blocks_a, blocks_b }
    }

    /// Solves `A X + X Bᵀ = C`.
    pub fn solve(&self, c: &Mat) -> Result<Mat> {
        let ct = self.schur_a.q.tr_mul(c) * &self.schur_b.q;
        let y = self.solve_transformed(&ct)?;
        Ok(&self.schur_a.q * y * self.schur_b.q.transpose())
    }

    /// Solves `U_A Y + Y U_Bᵀ = C̃` in Schur coordinates.
    pub fn solve_transformed(&self, ct: &Mat) -> Result<Mat> {
        solve_with_blocks(&self.schur_a.u, &self.blocks_a, &self.schur_b.u, &self.blocks_b, ct)
    }
}
