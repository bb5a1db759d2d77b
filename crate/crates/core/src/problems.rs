//! Benchmark problem generators and the operator shift transform.
//!
//! Pseudo-random data comes from `ChaCha8Rng::seed_from_u64(seed)`: standard
//! normal entries for the MIMO family, uniform entries on `[0, 1)` for the
//! low-rank family. "Normalized" means every column is scaled to unit
//! Euclidean norm.

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dense::{LowRankFactorPair, KRON_DENSE_LIMIT};
use crate::operators::matrix_market::read_matrix_market;
use crate::operators::{
    commutator_factor, commutator_factor_on_support, BandedOperator, DiagonalOperator,
    GeneralizedSylvesterProblem, LowRankOperator, Operator, PerturbationTerm, TridiagonalPlusLowRank,
};
use crate::{Error, Mat, Result};

/// Default scaling for the MIMO family.
pub const DEFAULT_GAMMA: f64 = 1.0 / 6.0;

/// Tolerance for numerically computed commutator factors.
const COMMUTATOR_TOL: f64 = 1e-12;

fn normalize_columns(mut m: Mat) -> Mat {
    for mut c in m.column_iter_mut() {
        let s = c.norm();
        if s > 0.0 {
            c /= s;
        }
    }
    m
}

fn normalized_random(rng: &mut ChaCha8Rng, n: usize, cols: usize) -> Mat {
    normalize_columns(Mat::from_fn(n, cols, |_, _| StandardNormal.sample(rng)))
}

fn normalized_uniform(rng: &mut ChaCha8Rng, n: usize, cols: usize) -> Mat {
    normalize_columns(Mat::from_fn(n, cols, |_, _| rng.random::<f64>()))
}

fn unit(n: usize, idx: &[usize]) -> Mat {
    let mut e = Mat::zeros(n, idx.len());
    for (c, &i) in idx.iter().enumerate() {
        e[(i, c)] = 1.0;
    }
    e
}

/// `A X + X Aᵀ + γ² Σ Nᵢ X Nᵢᵀ = CCᵀ` with `A = tridiag(2, −5, 2)`,
/// `N₁ = tridiag(3, 0, −3)`, `N₂ = I − N₁` (both scaled by γ) and a
/// normalized random `C ∈ ℝ^{n×2}`.
pub fn mimo_problem(n: usize, gamma: f64, seed: u64) -> Result<GeneralizedSylvesterProblem> {
    if n < 3 {
        return Err(Error::Domain(format!("MIMO problem needs n ≥ 3, got {n}")));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::Domain(format!("MIMO problem needs γ > 0, got {gamma}")));
    }
    let a = BandedOperator::toeplitz_tridiagonal(n, 2.0, -5.0, 2.0).shared();
    let n1 = BandedOperator::toeplitz_tridiagonal(n, 3.0 * gamma, 0.0, -3.0 * gamma).shared();
    let n2 = BandedOperator::toeplitz_tridiagonal(n, -3.0 * gamma, gamma, 3.0 * gamma).shared();
    let s = 2.0 * 3f64.sqrt();
    let u = unit(n, &[0, n - 1]) * s;
    let mut ut = u.clone();
    ut.column_mut(1).neg_mut();
    let f1 = LowRankFactorPair::new(&u * gamma, ut.clone());
    let f2 = LowRankFactorPair::new(&u * -gamma, ut);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = normalized_random(&mut rng, n, 2);
    let terms = vec![
        PerturbationTerm::new(n1.clone(), n1).with_commutators(f1.clone(), f1),
        PerturbationTerm::new(n2.clone(), n2).with_commutators(f2.clone(), f2),
    ];
    GeneralizedSylvesterProblem::new(a.clone(), a, terms, c.clone(), c)
}

/// `A X + X Aᵀ + N X Nᵀ = ccᵀ` with `A = n²·tridiag(1, −2, 1)` (or
/// `tridiag(1, −2, 1)` when `scaled`), `N = u vᵀ` and normalized uniform
/// random `c, u, v` drawn in that order.
pub fn lowrank_problem(n: usize, seed: u64, scaled: bool) -> Result<GeneralizedSylvesterProblem> {
    if n < 3 {
        return Err(Error::Domain(format!("low-rank problem needs n ≥ 3, got {n}")));
    }
    let s = if scaled { 1.0 } else { (n * n) as f64 };
    let a = BandedOperator::toeplitz_tridiagonal(n, s, -2.0 * s, s).shared();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = normalized_uniform(&mut rng, n, 1);
    let u = normalized_uniform(&mut rng, n, 1);
    let v = normalized_uniform(&mut rng, n, 1);
    let nn = LowRankOperator::new(u, v)?.shared();
    let term = PerturbationTerm::new(nn.clone(), nn);
    GeneralizedSylvesterProblem::new(a.clone(), a, vec![term], c.clone(), c)
}

/// Index range (0-based, inclusive) where the Helmholtz right-hand side is
/// nonzero.
fn helmholtz_source(n: usize) -> std::ops::RangeInclusive<usize> {
    (n / 4 - 1)..=(n / 2 - 1)
}

/// `A X + X Bᵀ + N X Nᵀ = ccᵀ` from a finite-difference Helmholtz
/// discretization: `B = −tridiag(1, −2, 1)/h²`, `A` the periodic version of
/// `B`, `N = diag(0, I)` with blocks of size n/2, and `c` equal to 10 on the
/// second quarter of the grid. `A` is singular; see
/// [`shift_operator_transform`].
pub fn helmholtz_problem(n: usize) -> Result<GeneralizedSylvesterProblem> {
    if n == 0 || n % 4 != 0 {
        return Err(Error::Domain(format!("Helmholtz problem needs n to be a positive multiple of 4, got {n}")));
    }
    let h = 1.0 / (n - 1) as f64;
    let s = 1.0 / (h * h);
    let band = BandedOperator::toeplitz_tridiagonal(n, -s, 2.0 * s, -s);
    let b = band.clone().shared();
    let corner = unit(n, &[0, n - 1]);
    let swapped = unit(n, &[n - 1, 0]) * -s;
    let a = TridiagonalPlusLowRank::new(band, corner, swapped)?.shared();
    let half = n / 2;
    let nn = DiagonalOperator::new((0..n).map(|i| if i < half { 0.0 } else { 1.0 }).collect()).shared();
    let fl = commutator_factor_on_support(a.as_ref(), nn.as_ref(), &[half - 1, half, 0, n - 1], COMMUTATOR_TOL)?;
    let fr = commutator_factor_on_support(b.as_ref(), nn.as_ref(), &[half - 1, half], COMMUTATOR_TOL)?;
    let mut c = Mat::zeros(n, 1);
    for i in helmholtz_source(n) {
        c[(i, 0)] = 10.0;
    }
    let term = PerturbationTerm::new(nn.clone(), nn).with_commutators(fl, fr);
    GeneralizedSylvesterProblem::new(a, b, vec![term], c.clone(), c)
}

fn check_nonsingular(op: &Operator) -> Result<()> {
    let n = op.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5b1f7);
    let z = normalized_random(&mut rng, n, 2);
    let x = op.inverse_apply(&z)?;
    let back = op.apply(&x);
    if !x.iter().all(|v| v.is_finite()) || (back - &z).norm() > 1e-8 * z.norm() {
        return Err(Error::Singular("shifted coefficient cannot be solved reliably".into()));
    }
    Ok(())
}

/// `(A + σI) X + X Bᵀ + Σ Nᵢ X Mᵢᵀ − σ X = C₁C₂ᵀ`: the same solution, with
/// `A` replaced by `A + σI` and a commuting term `(−σI, I)` appended.
/// `σ = 0` returns the problem unchanged.
pub fn shift_operator_transform(problem: &GeneralizedSylvesterProblem, sigma: f64) -> Result<GeneralizedSylvesterProblem> {
    if sigma == 0.0 {
        return Ok(problem.clone());
    }
    if !sigma.is_finite() {
        return Err(Error::Domain(format!("shift must be finite, got {sigma}")));
    }
    let (n, nr) = (problem.n(), problem.n_right());
    let a = problem.a.shifted(sigma)?;
    check_nonsingular(&a)?;
    let mut terms = problem.terms.clone();
    let extra = PerturbationTerm::new(
        DiagonalOperator::scaled_identity(n, -sigma).shared(),
        DiagonalOperator::identity(nr).shared(),
    )
    .with_commutators(LowRankFactorPair::zeros(n, n), LowRankFactorPair::zeros(nr, nr));
    terms.push(extra);
    GeneralizedSylvesterProblem::new(a, problem.b.clone(), terms, problem.c1.clone(), problem.c2.clone())
}

fn default_gamma() -> f64 {
    DEFAULT_GAMMA
}

fn default_shift() -> f64 {
    1.0
}

/// Matrix Market files for one term; `m` defaults to `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermFiles {
    pub n: PathBuf,
    #[serde(default)]
    pub m: Option<PathBuf>,
}

/// Serializable description of a problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemSpec {
    Mimo {
        n: usize,
        #[serde(default = "default_gamma")]
        gamma: f64,
        #[serde(default)]
        seed: u64,
    },
    Lowrank {
        n: usize,
        #[serde(default)]
        seed: u64,
        #[serde(default)]
        scaled: bool,
    },
    /// Built with [`helmholtz_problem`] and then shifted by `shift`.
    Helmholtz {
        n: usize,
        #[serde(default = "default_shift")]
        shift: f64,
    },
    /// Coefficients from Matrix Market files. `b` defaults to `a` and `c2`
    /// to `c1`; commutator factors are computed when the size allows.
    CustomFile {
        a: PathBuf,
        #[serde(default)]
        b: Option<PathBuf>,
        #[serde(default)]
        terms: Vec<TermFiles>,
        c1: PathBuf,
        #[serde(default)]
        c2: Option<PathBuf>,
    },
}

impl ProblemSpec {
    pub fn family(&self) -> &'static str {
        match self {
            ProblemSpec::Mimo { .. } => "mimo",
            ProblemSpec::Lowrank { .. } => "lowrank",
            ProblemSpec::Helmholtz { .. } => "helmholtz",
            ProblemSpec::CustomFile { .. } => "custom-file",
        }
    }

    pub fn n(&self) -> Option<usize> {
        match self {
            ProblemSpec::Mimo { n, .. } | ProblemSpec::Lowrank { n, .. } | ProblemSpec::Helmholtz { n, .. } => Some(*n),
            ProblemSpec::CustomFile { .. } => None,
        }
    }

    /// Checks the family-specific parameter constraints without building.
    pub fn validate(&self) -> Result<()> {
        match *self {
            ProblemSpec::Mimo { n, gamma, .. } => {
                if n < 3 || !(gamma > 0.0 && gamma.is_finite()) {
                    return Err(Error::Config(format!("mimo needs n ≥ 3 and γ > 0 (n = {n}, γ = {gamma})")));
                }
            }
            ProblemSpec::Lowrank { n, .. } => {
                if n < 3 {
                    return Err(Error::Config(format!("lowrank needs n ≥ 3, got {n}")));
                }
            }
            ProblemSpec::Helmholtz { n, shift } => {
                if n == 0 || n % 4 != 0 {
                    return Err(Error::Config(format!("helmholtz needs n to be a positive multiple of 4, got {n}")));
                }
                if !shift.is_finite() {
                    return Err(Error::Config(format!("helmholtz shift must be finite, got {shift}")));
                }
            }
            ProblemSpec::CustomFile { .. } => {}
        }
        Ok(())
    }

    pub fn build(&self) -> Result<GeneralizedSylvesterProblem> {
        self.validate()?;
        match self {
            ProblemSpec::Mimo { n, gamma, seed } => mimo_problem(*n, *gamma, *seed),
            ProblemSpec::Lowrank { n, seed, scaled } => lowrank_problem(*n, *seed, *scaled),
            ProblemSpec::Helmholtz { n, shift } => shift_operator_transform(&helmholtz_problem(*n)?, *shift),
            ProblemSpec::CustomFile { a, b, terms, c1, c2 } => build_custom(a, b.as_ref(), terms, c1, c2.as_ref()),
        }
    }
}

fn load_operator(path: &PathBuf) -> Result<Operator> {
    read_matrix_market(path)?.to_operator()
}

fn build_custom(
    a: &PathBuf,
    b: Option<&PathBuf>,
    terms: &[TermFiles],
    c1: &PathBuf,
    c2: Option<&PathBuf>,
) -> Result<GeneralizedSylvesterProblem> {
    let a_op = load_operator(a)?;
    let b_op = match b {
        Some(p) => load_operator(p)?,
        None => a_op.clone(),
    };
    let c1m = read_matrix_market(c1)?.to_dense();
    let c2m = match c2 {
        Some(p) => read_matrix_market(p)?.to_dense(),
        None => c1m.clone(),
    };
    let mut built = Vec::with_capacity(terms.len());
    for t in terms {
        let n_op = load_operator(&t.n)?;
        let m_op = match &t.m {
            Some(p) => load_operator(p)?,
            None => n_op.clone(),
        };
        let mut term = PerturbationTerm::new(n_op, m_op);
        if a_op.dim().max(b_op.dim()) <= KRON_DENSE_LIMIT {
            let left = commutator_factor(a_op.as_ref(), term.n.as_ref(), COMMUTATOR_TOL, None);
            let right = commutator_factor(b_op.as_ref(), term.m.as_ref(), COMMUTATOR_TOL, None);
            if let (Ok(l), Ok(r)) = (left, right) {
                term = term.with_commutators(l, r);
            }
        }
        built.push(term);
    }
    GeneralizedSylvesterProblem::new(a_op, b_op, built, c1m, c2m)
}
