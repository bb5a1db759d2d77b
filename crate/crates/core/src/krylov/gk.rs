//! Multivariate block Krylov spaces and starting-block construction.

use super::{SolveConfig, StartingBlocks};
use crate::dense::hcat;
use crate::dense::orth::{orthonormalize_block, orthonormalize_block_tol};
use crate::operators::{GeneralizedSylvesterProblem, Operator};
use crate::{Error, Mat, Result};

/// Orthonormal basis of `GK_d(N₁, …, N_m; U)`: every product of at most `d`
/// of the `Nᵢ` (in any order) applied to `U`. Level `j` applies each `Nᵢ`
/// only to the directions first found at level `j − 1`.
pub fn gk_basis(ops: &[Operator], u: &Mat, d: usize, tol: f64) -> Mat {
    let mut basis = orthonormalize_block_tol(u, None, tol).q;
    let mut frontier = basis.clone();
    for _ in 0..d {
        if frontier.ncols() == 0 || ops.is_empty() {
            break;
        }
        let images: Vec<Mat> = ops.iter().map(|op| op.apply(&frontier)).collect();
        let refs: Vec<&Mat> = images.iter().collect();
        let fresh = orthonormalize_block_tol(&hcat(&refs), Some(&basis), tol).q;
        basis = hcat(&[&basis, &fresh]);
        frontier = fresh;
    }
    basis
}

/// Starting blocks for the two spaces. For Lyapunov-symmetric problems
/// `right` equals `left`.
#[derive(Debug, Clone)]
pub struct StartingBlockSet {
    pub left: Mat,
    pub right: Mat,
    /// Columns dropped by the width cap (left, right).
    pub truncated: (usize, usize),
}

fn side_commutator(
    ops: &[Operator],
    c: &Mat,
    factors: &[&Mat],
    ell: usize,
    tol: f64,
) -> Mat {
    let gk_c = gk_basis(ops, c, ell, tol);
    if ell == 0 || factors.is_empty() {
        return gk_c;
    }
    let u = hcat(factors);
    let gk_u = gk_basis(ops, &u, ell - 1, tol);
    orthonormalize_block_tol(&hcat(&[&gk_c, &gk_u]), None, tol).q
}

/// `C̄₁ = orth(GK_ℓ(N; C₁) + GK_{ℓ−1}(N; U))`, `C̄₂` likewise with `Mᵢ`, `C₂`
/// and `Q`.
pub fn build_starting_blocks_commutator(
    problem: &GeneralizedSylvesterProblem,
    ell: usize,
) -> Result<StartingBlockSet> {
    if problem.m() > 0 && !problem.has_commutator_factors() {
        return Err(Error::Config(
            "commutator starting blocks need commutator factors on every term".into(),
        ));
    }
    let tol = crate::dense::orth::DEFLATION_TOL;
    let n_ops: Vec<Operator> = problem.terms.iter().map(|t| t.n.clone()).collect();
    let us: Vec<&Mat> = problem
        .terms
        .iter()
        .map(|t| &t.commutator_left.as_ref().unwrap().left)
        .filter(|u| u.ncols() > 0)
        .collect();
    let left = side_commutator(&n_ops, &problem.c1, &us, ell, tol);
    let right = if problem.is_lyapunov() {
        left.clone()
    } else {
        let m_ops: Vec<Operator> = problem.terms.iter().map(|t| t.m.clone()).collect();
        let qs: Vec<&Mat> = problem
            .terms
            .iter()
            .map(|t| &t.commutator_right.as_ref().unwrap().left)
            .filter(|q| q.ncols() > 0)
            .collect();
        side_commutator(&m_ops, &problem.c2, &qs, ell, tol)
    };
    Ok(StartingBlockSet { left, right, truncated: (0, 0) })
}

/// `C̄₁ = orth(C₁, 𝒰₁, …, 𝒰ₘ)`, `C̄₂ = orth(C₂, 𝒬₁, …, 𝒬ₘ)`.
pub fn build_starting_blocks_lowrank(problem: &GeneralizedSylvesterProblem) -> Result<StartingBlockSet> {
    if !problem.has_low_rank_terms() {
        return Err(Error::Config("low-rank starting blocks need every Nᵢ, Mᵢ in factored form".into()));
    }
    let mut left_parts: Vec<&Mat> = vec![&problem.c1];
    left_parts.extend(problem.terms.iter().map(|t| &t.low_rank_left.as_ref().unwrap().left));
    let left = orthonormalize_block(&hcat(&left_parts), None).q;
    let right = if problem.is_lyapunov() {
        left.clone()
    } else {
        let mut parts: Vec<&Mat> = vec![&problem.c2];
        parts.extend(problem.terms.iter().map(|t| &t.low_rank_right.as_ref().unwrap().left));
        orthonormalize_block(&hcat(&parts), None).q
    };
    Ok(StartingBlockSet { left, right, truncated: (0, 0) })
}

fn plain(problem: &GeneralizedSylvesterProblem) -> StartingBlockSet {
    let left = orthonormalize_block(&problem.c1, None).q;
    let right = if problem.is_lyapunov() {
        left.clone()
    } else {
        orthonormalize_block(&problem.c2, None).q
    };
    StartingBlockSet { left, right, truncated: (0, 0) }
}

/// Starting blocks for the configured mode, capped at the configured width.
pub fn build_starting_blocks(
    problem: &GeneralizedSylvesterProblem,
    config: &SolveConfig,
) -> Result<StartingBlockSet> {
    let mut set = match resolve_mode(problem, &config.blocks) {
        StartingBlocks::Commutator { ell } => build_starting_blocks_commutator(problem, ell)?,
        StartingBlocks::LowRank => build_starting_blocks_lowrank(problem)?,
        StartingBlocks::Plain | StartingBlocks::Auto => plain(problem),
    };
    let cap = config.max_block_width;
    let cut = |m: &mut Mat| -> usize {
        let extra = m.ncols().saturating_sub(cap);
        if extra > 0 {
            *m = m.columns(0, cap).clone_owned();
        }
        extra
    };
    set.truncated = (cut(&mut set.left), cut(&mut set.right));
    if set.truncated != (0, 0) {
        log::warn!(
            "starting block wider than {cap} columns; dropped {} left and {} right trailing directions",
            set.truncated.0,
            set.truncated.1
        );
    }
    Ok(set)
}

/// Replaces `Auto` by the concrete mode for this problem.
pub(crate) fn resolve_mode(problem: &GeneralizedSylvesterProblem, mode: &StartingBlocks) -> StartingBlocks {
    match mode {
        StartingBlocks::Auto if problem.m() > 0 && problem.has_commutator_factors() => {
            StartingBlocks::Commutator { ell: 1 }
        }
        StartingBlocks::Auto if problem.m() > 0 && problem.has_low_rank_terms() => StartingBlocks::LowRank,
        StartingBlocks::Auto => StartingBlocks::Plain,
        other => other.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::DenseOperator;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, n: usize, b: usize) -> Mat {
        Mat::from_fn(n, b, |_, _| rng.random_range(-1.0..1.0))
    }

    /// Largest principal angle (as a sine) of span(x) against span(y), both
    /// orthonormal.
    fn sin_angle(x: &Mat, y: &Mat) -> f64 {
        (x - y * y.tr_mul(x)).norm()
    }

    #[test]
    fn depth_zero_is_orth() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random(&mut rng, 20, 3);
        let op = DenseOperator::shared(random(&mut rng, 20, 20)).unwrap();
        let b = gk_basis(&[op], &u, 0, 1e-10);
        assert_eq!(b.ncols(), 3);
        assert!(sin_angle(&crate::dense::orth::orth(&u), &b) < 1e-12);
    }

    #[test]
    fn single_operator_is_block_krylov() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 30;
        let nd = random(&mut rng, n, n);
        let op = DenseOperator::shared(nd.clone()).unwrap();
        let u = random(&mut rng, n, 2);
        let b = gk_basis(&[op], &u, 3, 1e-10);
        let stacked = hcat(&[&u, &(&nd * &u), &(&nd * &nd * &u), &(&nd * &nd * &nd * &u)]);
        let k = crate::dense::orth::orth(&stacked);
        assert_eq!(b.ncols(), 8);
        assert!(sin_angle(&k, &b) < 1e-10 && sin_angle(&b, &k) < 1e-10);
    }

    #[test]
    fn two_operators_depth_two_matches_explicit_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 40;
        let n1 = random(&mut rng, n, n);
        let n2 = random(&mut rng, n, n);
        let ops: Vec<Operator> = vec![
            DenseOperator::shared(n1.clone()).unwrap(),
            DenseOperator::shared(n2.clone()).unwrap(),
        ];
        let u = random(&mut rng, n, 1);
        let b = gk_basis(&ops, &u, 2, 1e-10);
        let products = [
            u.clone(),
            &n1 * &u,
            &n2 * &u,
            &n1 * &n2 * &u,
            &n2 * &n1 * &u,
            &n1 * &n1 * &u,
            &n2 * &n2 * &u,
        ];
        let refs: Vec<&Mat> = products.iter().collect();
        let k = crate::dense::orth::orth(&hcat(&refs));
        assert_eq!(b.ncols(), 7);
        assert!(sin_angle(&k, &b) < 1e-10 && sin_angle(&b, &k) < 1e-10);
    }
}
