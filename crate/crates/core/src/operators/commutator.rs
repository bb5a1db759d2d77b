//! Low-rank factorization of commutators `[A, N] = A N − N A`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::LinearMatrixOperator;
use crate::dense::svd::jacobi_svd;
use crate::dense::{LowRankFactorPair, KRON_DENSE_LIMIT};
use crate::{Error, Mat, Result};

/// Factors `K = U Ũᵀ` from an SVD, keeping the numerical rank at `tol`
/// relative to `‖K‖_F`.
fn factor_dense(k: &Mat, tol: f64, cap: Option<usize>) -> Result<(Mat, Mat)> {
    let (rows, cols) = k.shape();
    let total = k.norm();
    if total == 0.0 {
        return Ok((Mat::zeros(rows, 0), Mat::zeros(cols, 0)));
    }
    let svd = jacobi_svd(k);
    let sv = &svd.s;
    let allowed = (tol * total).powi(2);
    let mut s = sv.len();
    let mut tail = 0.0;
    while s > 0 {
        let next = tail + sv[s - 1].powi(2);
        if next > allowed {
            break;
        }
        tail = next;
        s -= 1;
    }
    if let Some(cap) = cap {
        if s > cap {
            return Err(Error::NotLowRankCommuting { rank: s, cap });
        }
    }
    let mut left = svd.u.columns(0, s).clone_owned();
    for c in 0..s {
        left.column_mut(c).scale_mut(sv[c]);
    }
    Ok((left, svd.v.columns(0, s).clone_owned()))
}

/// Factors `[A, N]` from the dense commutator (`n ≤ 120`).
pub fn commutator_factor(
    a: &dyn LinearMatrixOperator,
    n_op: &dyn LinearMatrixOperator,
    tol: f64,
    cap: Option<usize>,
) -> Result<LowRankFactorPair> {
    let n = a.dim();
    if n_op.dim() != n {
        return Err(Error::Dimension("commutator of operators of different size".into()));
    }
    if n > KRON_DENSE_LIMIT {
        return Err(Error::TooLarge { n, limit: KRON_DENSE_LIMIT });
    }
    let ad = a.to_dense();
    let nd = n_op.to_dense();
    let k = &ad * &nd - &nd * &ad;
    let (l, r) = factor_dense(&k, tol, cap)?;
    Ok(LowRankFactorPair::new(l, r))
}

/// Factors `[A, N]` assuming it vanishes outside the rows and columns in
/// `support`, then checks that assumption by random probing. Works at any n.
pub fn commutator_factor_on_support(
    a: &dyn LinearMatrixOperator,
    n_op: &dyn LinearMatrixOperator,
    support: &[usize],
    tol: f64,
) -> Result<LowRankFactorPair> {
    let n = a.dim();
    let s = support.len();
    let mut e = Mat::zeros(n, s);
    for (c, &i) in support.iter().enumerate() {
        if i >= n {
            return Err(Error::Dimension(format!("support index {i} outside dimension {n}")));
        }
        e[(i, c)] = 1.0;
    }
    let cols = a.apply(&n_op.apply(&e)) - n_op.apply(&a.apply(&e));
    let mut ks = Mat::zeros(s, s);
    for (r, &i) in support.iter().enumerate() {
        for c in 0..s {
            ks[(r, c)] = cols[(i, c)];
        }
    }
    let (l, r) = factor_dense(&ks, tol, None)?;
    let pair = LowRankFactorPair::new(&e * l, &e * r);
    let err = probe_commutator(a, n_op, &pair, 4, 0xc0ffee);
    if err > 1e-10 {
        return Err(Error::Config(format!(
            "commutator is not supported on the given index set (probe error {err:e})"
        )));
    }
    Ok(pair)
}

/// Relative probe error `‖[A,N]Z − U ŨᵀZ‖_F / (‖ANZ‖_F + ‖NAZ‖_F)` for a
/// Gaussian block `Z` with `probes` columns.
pub fn probe_commutator(
    a: &dyn LinearMatrixOperator,
    n_op: &dyn LinearMatrixOperator,
    factors: &LowRankFactorPair,
    probes: usize,
    seed: u64,
) -> f64 {
    let n = a.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = Mat::from_fn(n, probes, |_, _| StandardNormal.sample(&mut rng));
    let anz = a.apply(&n_op.apply(&z));
    let naz = n_op.apply(&a.apply(&z));
    let scale = anz.norm() + naz.norm();
    let lowrank = &factors.left * factors.right.tr_mul(&z);
    let err = (anz - naz - lowrank).norm();
    if scale == 0.0 {
        err
    } else {
        err / scale
    }
}
