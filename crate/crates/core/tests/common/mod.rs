//! Random instance generators shared by the integration tests.
#![allow(dead_code)]

use gensylv::dense::{kron_spectral_radius, LowRankFactorPair};
use gensylv::operators::{
    commutator_factor, estimate_spectral_radius, DenseOperator, GeneralizedSylvesterProblem, Operator,
    PerturbationTerm,
};
use gensylv::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Mat {
    Mat::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

/// Stable tridiagonal matrix plus a small dense random part.
pub fn tridiag_plus_random(rng: &mut ChaCha8Rng, n: usize) -> Mat {
    let mut a = Mat::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = -rng.random_range(4.0..6.0);
        if i + 1 < n {
            a[(i + 1, i)] = rng.random_range(-1.0..1.0);
            a[(i, i + 1)] = rng.random_range(-1.0..1.0);
        }
    }
    a + random(rng, n, n) * (0.5 / (n as f64).sqrt())
}

/// `α A + β I + s u vᵀ` with unit `u, v` and `s ∈ [0.5, 2]`; its commutator
/// with `A` has rank at most two.
pub fn coupled(rng: &mut ChaCha8Rng, a: &Mat) -> Mat {
    let n = a.nrows();
    let alpha = rng.random_range(-0.3..0.3);
    let beta = rng.random_range(-1.0..1.0);
    let s = rng.random_range(0.5..2.0);
    let u = random(rng, n, 1).normalize();
    let v = random(rng, n, 1).normalize();
    a * alpha + Mat::identity(n, n) * beta + u * v.transpose() * s
}

fn dense(m: Mat) -> Operator {
    DenseOperator::shared(m).unwrap()
}

fn assemble(a: &Mat, b: Option<&Mat>, ns: &[Mat], ms: &[Mat], c1: Mat, c2: Mat, s: f64) -> GeneralizedSylvesterProblem {
    let a_op = dense(a.clone());
    let b_op = b.map(|b| dense(b.clone())).unwrap_or_else(|| a_op.clone());
    let terms = ns
        .iter()
        .zip(ms)
        .map(|(n, m)| {
            let n_op = dense(n * s);
            let m_op = if b.is_none() && n == m { n_op.clone() } else { dense(m * s) };
            let left = commutator_factor(a_op.as_ref(), n_op.as_ref(), 1e-12, None).unwrap();
            let right = commutator_factor(b_op.as_ref(), m_op.as_ref(), 1e-12, None).unwrap();
            PerturbationTerm::new(n_op, m_op).with_commutators(left, right)
        })
        .collect();
    let c2 = if b.is_none() { c1.clone() } else { c2 };
    GeneralizedSylvesterProblem::new(a_op, b_op, terms, c1, c2).unwrap()
}

/// Random problem with tridiagonal-plus-random coefficients and
/// `Nᵢ = αA + βI + uvᵀ`, scaled so that the estimated `ρ(L⁻¹Π)` equals `rho`.
pub fn random_instance(seed: u64, n: usize, m: usize, r: usize, lyapunov: bool, rho: f64) -> GeneralizedSylvesterProblem {
    let mut g = rng(seed);
    let a = tridiag_plus_random(&mut g, n);
    let b = (!lyapunov).then(|| tridiag_plus_random(&mut g, n));
    let ns: Vec<Mat> = (0..m).map(|_| coupled(&mut g, &a)).collect();
    let ms: Vec<Mat> = if lyapunov { ns.clone() } else { (0..m).map(|_| coupled(&mut g, b.as_ref().unwrap())).collect() };
    let c1 = random(&mut g, n, r);
    let c2 = random(&mut g, n, r);
    let raw = assemble(&a, b.as_ref(), &ns, &ms, c1.clone(), c2.clone(), 1.0);
    let rho0 = estimate_spectral_radius(&raw, 300, 1e-10).unwrap().rho;
    assemble(&a, b.as_ref(), &ns, &ms, c1, c2, (rho / rho0).sqrt())
}

/// Lyapunov-symmetric instance with symmetric, well-conditioned `A` and
/// symmetric `Nᵢ`, scaled so that `ρ(L⁻¹Π)` equals `rho` exactly.
pub fn symmetric_instance(seed: u64, n: usize, m: usize, rho: f64) -> GeneralizedSylvesterProblem {
    let mut g = rng(seed);
    let mut a = Mat::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = -g.random_range(4.0..5.0);
        if i + 1 < n {
            let o = g.random_range(-0.5..0.5);
            a[(i + 1, i)] = o;
            a[(i, i + 1)] = o;
        }
    }
    let ns: Vec<Mat> = (0..m)
        .map(|_| {
            let w = random(&mut g, n, 1);
            &a * g.random_range(-0.3..0.3) + Mat::identity(n, n) * g.random_range(-1.0..1.0) + &w * w.transpose()
        })
        .collect();
    let c = random(&mut g, n, 1);
    let raw = assemble(&a, None, &ns, &ns, c.clone(), c.clone(), 1.0);
    let rho0 = kron_spectral_radius(&raw.to_dense()).unwrap();
    assemble(&a, None, &ns, &ns, c.clone(), c, (rho / rho0).sqrt())
}

/// Largest sine of the principal angles of `span(x)` against the orthonormal `q`.
pub fn max_sine(x: &Mat, q: &Mat) -> f64 {
    let qx = gensylv::dense::orth::orth(x);
    let rest = &qx - q * q.tr_mul(&qx);
    gensylv::dense::jacobi_svd(&rest).s.first().copied().unwrap_or(0.0)
}

pub fn factor_pair(l: Mat, r: Mat) -> LowRankFactorPair {
    LowRankFactorPair::new(l, r)
}
