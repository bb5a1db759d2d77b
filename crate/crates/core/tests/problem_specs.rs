use std::fs;

use gensylv::dense::kron_dense_solve;
use gensylv::krylov::{solve, SolveConfig};
use gensylv::operators::matrix_market::format_array;
use gensylv::problems::{ProblemSpec, TermFiles, DEFAULT_GAMMA};
use gensylv::{Error, Mat};

#[test]
fn json_round_trip_and_defaults() {
    let specs = [
        ProblemSpec::Mimo { n: 100, gamma: 0.2, seed: 4 },
        ProblemSpec::Lowrank { n: 50, seed: 1, scaled: true },
        ProblemSpec::Helmholtz { n: 64, shift: 2.5 },
        ProblemSpec::CustomFile {
            a: "a.mtx".into(),
            b: None,
            terms: vec![TermFiles { n: "n.mtx".into(), m: Some("m.mtx".into()) }],
            c1: "c.mtx".into(),
            c2: None,
        },
    ];
    for s in &specs {
        let text = serde_json::to_string(s).unwrap();
        assert_eq!(&serde_json::from_str::<ProblemSpec>(&text).unwrap(), s);
    }
    let mimo: ProblemSpec = serde_json::from_str(r#"{"family": "mimo", "n": 10}"#).unwrap();
    assert_eq!(mimo, ProblemSpec::Mimo { n: 10, gamma: DEFAULT_GAMMA, seed: 0 });
    let h: ProblemSpec = serde_json::from_str(r#"{"family": "helmholtz", "n": 12}"#).unwrap();
    assert_eq!(h, ProblemSpec::Helmholtz { n: 12, shift: 1.0 });
    assert!(serde_json::from_str::<ProblemSpec>(r#"{"family": "mimo", "n": 10, "extra": 1}"#).is_err());
    assert!(serde_json::from_str::<ProblemSpec>(r#"{"family": "unknown", "n": 10}"#).is_err());
}

#[test]
fn solve_config_round_trip() {
    let cfg: SolveConfig = serde_json::from_str(r#"{"tol": 1e-9, "blocks": {"mode": "commutator", "ell": 2}}"#).unwrap();
    assert_eq!(cfg.tol, 1e-9);
    assert_eq!(cfg.max_iters, SolveConfig::default().max_iters);
    let back: SolveConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
    assert_eq!(back, cfg);
}

fn tridiag(n: usize, sub: f64, diag: f64, sup: f64) -> Mat {
    Mat::from_fn(n, n, |i, j| {
        if i == j {
            diag
        } else if i == j + 1 {
            sub
        } else if j == i + 1 {
            sup
        } else {
            0.0
        }
    })
}

#[test]
fn custom_files_build_and_solve() {
    let n = 30;
    let dir = tempfile::tempdir().unwrap();
    let a = tridiag(n, 1.0, -4.0, 1.0);
    let nmat = Mat::from_fn(n, n, |i, j| if i == j && i < n / 2 { 0.3 } else { 0.0 });
    let c = Mat::from_fn(n, 1, |i, _| ((i + 1) as f64).sin());
    let write = |name: &str, m: &Mat| {
        let p = dir.path().join(name);
        fs::write(&p, format_array(m)).unwrap();
        p
    };
    let spec = ProblemSpec::CustomFile {
        a: write("a.mtx", &a),
        b: None,
        terms: vec![TermFiles { n: write("n.mtx", &nmat), m: None }],
        c1: write("c.mtx", &c),
        c2: None,
    };
    let problem = spec.build().unwrap();
    assert_eq!((problem.n(), problem.m(), problem.r()), (n, 1, 1));
    assert!(problem.has_commutator_factors());
    let (x, report) = solve(&problem, &SolveConfig { tol: 1e-10, ..SolveConfig::default() }).unwrap();
    assert!(report.converged);
    let oracle = kron_dense_solve(&problem.to_dense()).unwrap();
    assert!((x.densify() - &oracle).norm() <= 1e-8 * oracle.norm());
}

#[test]
fn custom_file_errors() {
    let dir = tempfile::tempdir().unwrap();
    let missing = ProblemSpec::CustomFile {
        a: dir.path().join("none.mtx"),
        b: None,
        terms: vec![],
        c1: dir.path().join("none.mtx"),
        c2: None,
    };
    assert!(matches!(missing.build(), Err(Error::Io(_))));
    let bad = dir.path().join("bad.mtx");
    fs::write(&bad, "%%MatrixMarket matrix array real general\n2 2\n1.0\n").unwrap();
    let short = ProblemSpec::CustomFile { a: bad.clone(), b: None, terms: vec![], c1: bad, c2: None };
    assert!(short.build().is_err());
}
