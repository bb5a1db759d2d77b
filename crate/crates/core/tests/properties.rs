mod common;

use gensylv::dense::{kron_dense_solve, orthonormalize_block, truncate_factors, DenseProblem, SylvesterSolver};
use gensylv::neumann::neumann_solve;
use gensylv::Mat;
use proptest::prelude::*;

fn mat(seed: u64, r: usize, c: usize) -> Mat {
    common::random(&mut common::rng(seed), r, c)
}

/// Shifted random matrix with spectrum well inside the left half-plane.
fn stable(seed: u64, n: usize) -> Mat {
    mat(seed, n, n) * (0.5 / (n as f64).sqrt()) - Mat::identity(n, n) * 2.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn orthonormalized_block_is_orthonormal_and_spans_input(
        seed in any::<u64>(), n in 8usize..40, p in 0usize..6, b in 1usize..6, dup in any::<bool>(),
    ) {
        let basis = (p > 0).then(|| gensylv::dense::orth::orth(&mat(seed ^ 1, n, p)));
        let mut v = mat(seed, n, b);
        if dup && b > 1 {
            let first = v.column(0).clone_owned();
            v.set_column(b - 1, &(first * 3.0));
        }
        let o = orthonormalize_block(&v, basis.as_ref());
        let k = o.width();
        prop_assert!((o.q.transpose() * &o.q - Mat::identity(k, k)).norm() < 1e-12);
        if let Some(basis) = &basis {
            prop_assert!((basis.transpose() * &o.q).norm() < 1e-12);
        }
        let all = match &basis {
            Some(basis) => gensylv::dense::hcat(&[basis, &o.q]),
            None => o.q.clone(),
        };
        let resid = &v - &all * (all.transpose() * &v);
        prop_assert!(resid.norm() <= 1e-9 * v.norm());
        if dup && b > 1 && p + b <= n {
            prop_assert!(k < b);
        }
    }

    #[test]
    fn truncation_meets_relative_tolerance(seed in any::<u64>(), n in 5usize..30, r in 1usize..8, e in 1i32..10) {
        let tol = 10f64.powi(-e);
        let decay = Mat::from_diagonal(&nalgebra::DVector::from_fn(r, |i, _| 0.3f64.powi(i as i32)));
        let l = mat(seed, n, r) * decay;
        let rr = mat(seed ^ 7, n, r);
        let full = &l * rr.transpose();
        let t = truncate_factors(&l, &rr, tol);
        prop_assert!(t.left.ncols() <= r);
        prop_assert!((t.densify() - &full).norm() <= tol * full.norm() * (1.0 + 1e-10));
        if t.left.ncols() > 0 {
            let shorter = truncate_factors(&l, &rr, tol * 10.0);
            prop_assert!(shorter.left.ncols() <= t.left.ncols());
        }
    }

    #[test]
    fn bartels_stewart_matches_kronecker(seed in any::<u64>(), p in 1usize..13, q in 1usize..13) {
        let a = stable(seed, p);
        let b = stable(seed ^ 3, q);
        let c = mat(seed ^ 5, p, q);
        let x = SylvesterSolver::new(&a, &b).unwrap().solve(&c).unwrap();
        let dp = DenseProblem { a, b, terms: vec![], c1: c.clone(), c2: Mat::identity(q, q) };
        let oracle = kron_dense_solve(&dp).unwrap();
        prop_assert!((&x - &oracle).norm() <= 1e-10 * oracle.norm().max(1.0));
    }

    #[test]
    fn neumann_matches_kronecker_when_contractive(seed in any::<u64>(), n in 4usize..16, m in 1usize..3) {
        let problem = common::random_instance(seed, n, m, 1, false, 0.5);
        let dp = problem.to_dense();
        let oracle = kron_dense_solve(&dp).unwrap();
        let sol = neumann_solve(&dp, 1e-13, 400).unwrap();
        prop_assert!((&sol.x - &oracle).norm() <= 1e-10 * oracle.norm());
    }
}
