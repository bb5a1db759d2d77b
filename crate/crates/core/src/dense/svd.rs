//! One-sided Jacobi SVD.
//!
//! Slower than bidiagonalization but accurate to working precision on
//! rank-deficient input, which is the common case for factored residuals and
//! commutators.

use crate::Mat;

/// Thin SVD `A = U diag(s) Vᵀ` with `s` sorted in decreasing order.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Mat,
    pub s: Vec<f64>,
    pub v: Mat,
}

impl Svd {
    pub fn recompose(&self) -> Mat {
        let mut us = self.u.clone();
        for (j, s) in self.s.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        us * self.v.transpose()
    }
}

const MAX_SWEEPS: usize = 80;

pub fn jacobi_svd(a: &Mat) -> Svd {
    let (m, n) = a.shape();
    if m < n {
        let t = jacobi_svd(&a.transpose());
        return Svd { u: t.v, s: t.s, v: t.u };
    }
    let mut w = a.clone();
    let mut v = Mat::identity(n, n);
    let mut norms: Vec<f64> = (0..n).map(|j| w.column(j).norm_squared()).collect();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta) = (norms[p], norms[q]);
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let gamma = w.column(p).dot(&w.column(q));
                if gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let (x, y) = (w[(i, p)], w[(i, q)]);
                    w[(i, p)] = c * x - s * y;
                    w[(i, q)] = s * x + c * y;
                }
                for i in 0..n {
                    let (x, y) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = c * x - s * y;
                    v[(i, q)] = s * x + c * y;
                }
                norms[p] = w.column(p).norm_squared();
                norms[q] = w.column(q).norm_squared();
            }
        }
        if !rotated {
            break;
        }
    }
    let sig: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| sig[y].total_cmp(&sig[x]));
    let mut u = Mat::zeros(m, n);
    let mut vs = Mat::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    for (c, &j) in order.iter().enumerate() {
        s.push(sig[j]);
        if sig[j] > 0.0 {
            u.set_column(c, &(w.column(j) / sig[j]));
        }
        vs.set_column(c, &v.column(j));
    }
    Svd { u, s, v: vs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Mat {
        Mat::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn rank_deficient_recomposes() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 15;
        let a = random(&mut rng, n, n);
        let u = random(&mut rng, n, 1);
        let v = random(&mut rng, n, 1);
        let nd = &u * v.transpose();
        let k = &a * &nd - &nd * &a;
        let svd = jacobi_svd(&k);
        assert!((svd.recompose() - &k).norm() <= 1e-14 * k.norm());
        assert!(svd.s[2] <= 1e-14 * svd.s[0]);
        assert!(svd.s.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn shapes_and_orthogonality() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (r, c) in [(7, 3), (3, 7), (6, 6), (1, 4)] {
            let a = random(&mut rng, r, c);
            let svd = jacobi_svd(&a);
            let k = r.min(c);
            assert_eq!(svd.u.shape(), (r, k));
            assert_eq!(svd.v.shape(), (c, k));
            assert!((svd.recompose() - &a).norm() < 1e-13);
            assert!((svd.u.tr_mul(&svd.u) - Mat::identity(k, k)).norm() < 1e-13);
            assert!((svd.v.tr_mul(&svd.v) - Mat::identity(k, k)).norm() < 1e-13);
        }
    }

    #[test]
    fn diagonal_values() {
        let a = Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -3.0, 0.0, 2.0]));
        let svd = jacobi_svd(&a);
        assert_eq!(svd.s, vec![3.0, 2.0, 1.0, 0.0]);
    }
}
