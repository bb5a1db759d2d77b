//! Low-rank factor pairs `X = L Rᵀ` and their compression.

use super::svd::jacobi_svd;
use crate::Mat;

/// `X = left · rightᵀ`, never materialized at large `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankFactorPair {
    pub left: Mat,
    pub right: Mat,
}

impl LowRankFactorPair {
    pub fn new(left: Mat, right: Mat) -> Self {
        assert_eq!(left.ncols(), right.ncols(), "factor widths differ");
        Self { left, right }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { left: Mat::zeros(rows, 0), right: Mat::zeros(cols, 0) }
    }

    pub fn rank_bound(&self) -> usize {
        self.left.ncols()
    }

    pub fn densify(&self) -> Mat {
        &self.left * self.right.transpose()
    }

    pub fn norm(&self) -> f64 {
        product_norm(&self.left, &self.right)
    }

    pub fn truncate(&self, tol_rel: f64) -> Self {
        truncate_factors(&self.left, &self.right, tol_rel)
    }
}

/// Thin QR returning `(Q, R)` with `Q` of width `min(rows, cols)`.
fn thin_qr(m: &Mat) -> (Mat, Mat) {
    let qr = m.clone().qr();
    (qr.q(), qr.r())
}

/// Core of a factored product: `L Rᵀ = Q_L S Q_Rᵀ`.
fn core(l: &Mat, r: &Mat) -> (Mat, Mat, Mat) {
    let (ql, rl) = thin_qr(l);
    let (qr_, rr) = thin_qr(r);
    let s = rl * rr.transpose();
    (ql, s, qr_)
}

/// `‖L Rᵀ‖_F` without forming the product.
pub fn product_norm(l: &Mat, r: &Mat) -> f64 {
    assert_eq!(l.ncols(), r.ncols());
    if l.ncols() == 0 || l.nrows() == 0 || r.nrows() == 0 {
        return 0.0;
    }
    core(l, r).1.norm()
}

/// Compresses `L Rᵀ` to the smallest rank `k` with
/// `‖L Rᵀ − L' R'ᵀ‖_F ≤ tol_rel · ‖L Rᵀ‖_F`. With `tol_rel = 0` the
/// numerical rank is kept.
pub fn truncate_factors(l: &Mat, r: &Mat, tol_rel: f64) -> LowRankFactorPair {
    assert_eq!(l.ncols(), r.ncols(), "factor widths differ");
    let (nl, nr) = (l.nrows(), r.nrows());
    if l.ncols() == 0 || nl == 0 || nr == 0 {
        return LowRankFactorPair::zeros(nl, nr);
    }
    let (ql, s, qr_) = core(l, r);
    let (sr, sc) = s.shape();
    let svd = jacobi_svd(&s);
    let sv = &svd.s;
    let order: Vec<usize> = (0..sv.len()).collect();
    let total: f64 = sv.iter().map(|x| x * x).sum();
    if total == 0.0 {
        return LowRankFactorPair::zeros(nl, nr);
    }
    let k = if tol_rel > 0.0 {
        let allowed = (tol_rel * tol_rel) * total;
        let mut tail = 0.0;
        let mut k = order.len();
        while k > 0 {
            let next = tail + sv[order[k - 1]].powi(2);
            if next > allowed {
                break;
            }
            tail = next;
            k -= 1;
        }
        k
    } else {
        let cutoff = sv[order[0]] * f64::EPSILON * (sr.max(sc) as f64);
        order.iter().filter(|&&i| sv[i] > cutoff).count()
    };
    let mut lk = svd.u.columns(0, k).clone_owned();
    for c in 0..k {
        lk.column_mut(c).scale_mut(sv[c]);
    }
    let rk = svd.v.columns(0, k).clone_owned();
    LowRankFactorPair { left: ql * lk, right: qr_ * rk }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, n: usize, b: usize) -> Mat {
        Mat::from_fn(n, b, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn rank_one_unit_vectors() {
        let mut e1 = Mat::zeros(5, 1);
        e1[(0, 0)] = 1.0;
        let t = truncate_factors(&e1, &e1, 1e-12);
        assert_eq!(t.rank_bound(), 1);
        assert!((t.densify() - &e1 * e1.transpose()).norm() < 1e-15);
    }

    #[test]
    fn known_rank_three_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 30;
        let l = random(&mut rng, n, 3) * random(&mut rng, 3, 10);
        let r = random(&mut rng, n, 10);
        let t = truncate_factors(&l, &r, 1e-12);
        assert_eq!(t.rank_bound(), 3);
        let x = &l * r.transpose();
        assert!((t.densify() - &x).norm() <= 1e-12 * x.norm());
    }

    #[test]
    fn zero_tolerance_keeps_numerical_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let l = random(&mut rng, 20, 4);
        let r = random(&mut rng, 15, 4);
        let t = truncate_factors(&l, &r, 0.0);
        assert_eq!(t.rank_bound(), 4);
        let x = &l * r.transpose();
        assert!((t.densify() - &x).norm() <= 1e-14 * x.norm());
    }

    #[test]
    fn empty_and_zero_factors() {
        let t = truncate_factors(&Mat::zeros(4, 0), &Mat::zeros(4, 0), 1e-8);
        assert_eq!(t.rank_bound(), 0);
        let t = truncate_factors(&Mat::zeros(4, 2), &Mat::zeros(4, 2), 1e-8);
        assert_eq!(t.rank_bound(), 0);
        assert_eq!(product_norm(&Mat::zeros(4, 0), &Mat::zeros(3, 0)), 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn truncation_respects_bound_and_is_minimal(seed in any::<u64>(), n in 5usize..40, p in 1usize..12, e in 1u32..10) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let l = random(&mut rng, n, p);
            let r = random(&mut rng, n, p);
            let tol = 10f64.powi(-(e as i32));
            let x = &l * r.transpose();
            let t = truncate_factors(&l, &r, tol);
            let err = (t.densify() - &x).norm();
            prop_assert!(err <= tol * x.norm() * (1.0 + 1e-10) + 1e-13 * x.norm());
            // Minimality against singular values of the dense product.
            let mut sv: Vec<f64> = x.clone().singular_values().iter().copied().collect();
            sv.sort_by(|a, b| b.total_cmp(a));
            let k = t.rank_bound();
            if k > 0 {
                let tail: f64 = sv[k - 1..].iter().map(|s| s * s).sum::<f64>().sqrt();
                prop_assert!(tail > tol * x.norm() * (1.0 - 1e-8));
            }
            prop_assert!((product_norm(&l, &r) - x.norm()).abs() <= 1e-12 * x.norm());
        }
    }
}
