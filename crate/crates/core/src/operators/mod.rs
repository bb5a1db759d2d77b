//! Structured matrix operators, the problem type and residual machinery.

pub mod commutator;
pub mod matrix_market;
pub mod problem;
pub mod spectral;
mod structured;

use std::fmt::Debug;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub use commutator::{commutator_factor, commutator_factor_on_support, probe_commutator};
pub use problem::{GeneralizedSylvesterProblem, PerturbationTerm};
pub use spectral::{estimate_spectral_radius, SpectralEstimate};
pub use structured::{
    BandedOperator, DenseOperator, DiagonalOperator, LowRankOperator, SparseOperator,
    TridiagonalPlusLowRank,
};

use crate::{Mat, Result};

/// Structure class of an operator; decides which solves are available and
/// how expensive they are.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Structure {
    Dense,
    Tridiagonal,
    TridiagonalPlusLowRank,
    LowRank,
    DiagonalBlock,
    GeneralSparse,
}

/// An n×n matrix accessed only through block products and block solves.
/// Factorizations are computed once at construction.
pub trait LinearMatrixOperator: Debug + Send + Sync {
    fn dim(&self) -> usize;

    fn structure(&self) -> Structure;

    /// `A V` for an n×b block.
    fn apply(&self, v: &Mat) -> Mat;

    /// `Aᵀ V`.
    fn transpose_apply(&self, v: &Mat) -> Mat;

    /// `A⁻¹ V`.
    fn inverse_apply(&self, v: &Mat) -> Result<Mat>;

    /// `A⁻ᵀ V`.
    fn inverse_transpose_apply(&self, v: &Mat) -> Result<Mat>;

    /// `A + σI`.
    fn shifted(&self, sigma: f64) -> Result<Operator>;

    /// Factors `(U, V)` with `A = U Vᵀ`, when the operator is stored that way.
    fn low_rank_factors(&self) -> Option<(Mat, Mat)> {
        None
    }

    fn to_dense(&self) -> Mat {
        let n = self.dim();
        self.apply(&Mat::identity(n, n))
    }
}

/// Shared, immutable operator handle.
pub type Operator = Arc<dyn LinearMatrixOperator>;

/// Frobenius norm: exact for n ≤ 120, otherwise a Gaussian trace estimate
/// with a fixed seed.
pub fn frobenius_norm(op: &dyn LinearMatrixOperator) -> f64 {
    let n = op.dim();
    if n <= crate::dense::KRON_DENSE_LIMIT {
        return op.to_dense().norm();
    }
    let probes = 16;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let z = Mat::from_fn(n, probes, |_, _| StandardNormal.sample(&mut rng));
    (op.apply(&z).norm_squared() / probes as f64).sqrt()
}

/// Whether two handles refer to the same operator object.
pub fn same_operator(a: &Operator, b: &Operator) -> bool {
    std::ptr::addr_eq(Arc::as_ptr(a), Arc::as_ptr(b))
}
