//! Dense kernels shared by every solver: real Schur form, Bartels–Stewart,
//! block Gram–Schmidt, low-rank factor truncation and the Kronecker oracle.

pub mod kron;
pub mod lowrank;
pub mod orth;
pub mod schur;
pub mod svd;
pub mod sylvester;

pub use kron::{kron_dense_solve, kron_matrix, kron_spectral_radius, DenseProblem, KRON_DENSE_LIMIT};
pub use lowrank::{product_norm, truncate_factors, LowRankFactorPair};
pub use orth::{orthonormalize_block, OrthResult};
pub use schur::{real_schur, DiagonalBlock, SchurForm};
pub use svd::{jacobi_svd, Svd};
pub use sylvester::{solve_triangular_sylvester, SylvesterSolver};

use crate::Mat;

/// Horizontal concatenation of blocks with equal row counts.
pub fn hcat(blocks: &[&Mat]) -> Mat {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(rows, cols);
    let mut off = 0;
    for b in blocks {
        assert_eq!(b.nrows(), rows, "hcat: row mismatch");
        out.columns_mut(off, b.ncols()).copy_from(*b);
        off += b.ncols();
    }
    out
}

/// Selects the given columns.
pub fn select_columns(m: &Mat, idx: &[usize]) -> Mat {
    let mut out = Mat::zeros(m.nrows(), idx.len());
    for (k, &j) in idx.iter().enumerate() {
        out.set_column(k, &m.column(j));
    }
    out
}
