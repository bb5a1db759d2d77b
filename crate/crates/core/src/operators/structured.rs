use std::sync::Arc;

use nalgebra::{Dyn, LU};

use super::{LinearMatrixOperator, Operator, Structure};
use crate::{Error, Mat, Result};

/// Pivot ratio below which an LU factorization is treated as singular.
const SINGULAR_PIVOT_RATIO: f64 = 1e-14;

fn check_block(n: usize, v: &Mat) {
    assert_eq!(v.nrows(), n, "block has {} rows, operator dimension is {n}", v.nrows());
}

fn lu_pivot_ratio(lu: &LU<f64, Dyn, Dyn>) -> f64 {
    let d = lu.u().diagonal();
    let max = d.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let min = d.iter().fold(f64::INFINITY, |m, x| m.min(x.abs()));
    if max == 0.0 {
        0.0
    } else {
        min / max
    }
}

fn singular(what: &str) -> Error {
    Error::Singular(format!("{what} is singular to working precision"))
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct DenseOperator {
    a: Mat,
    lu: Option<LU<f64, Dyn, Dyn>>,
    lu_t: Option<LU<f64, Dyn, Dyn>>,
}

impl DenseOperator {
    pub fn new(a: Mat) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Dimension(format!("dense operator {}×{}", a.nrows(), a.ncols())));
        }
        let lu = a.clone().lu();
        let (lu, lu_t) = if a.nrows() == 0 || lu_pivot_ratio(&lu) < SINGULAR_PIVOT_RATIO {
            (None, None)
        } else {
            (Some(lu), Some(a.transpose().lu()))
        };
        Ok(Self { a, lu, lu_t })
    }

    pub fn shared(a: Mat) -> Result<Operator> {
        Ok(Arc::new(Self::new(a)?))
    }

    pub fn matrix(&self) -> &Mat {
        &self.a
    }
}

impl LinearMatrixOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.a.nrows()
    }
    fn structure(&self) -> Structure {
        Structure::Dense
    }
    fn apply(&self, v: &Mat) -> Mat {
        check_block(self.dim(), v);
        &self.a * v
    }
    fn transpose_apply(&self, v: &Mat) -> Mat {
        check_block(self.dim(), v);
        self.a.tr_mul(v)
    }
    fn inverse_apply(&self, v: &Mat) -> Result<Mat> {
        check_block(self.dim(), v);
        let lu = self.lu.as_ref().ok_or_else(|| singular("dense operator"))?;
        lu.solve(v).ok_or_else(|| singular("dense operator"))
    }
    fn inverse_transpose_apply(&self, v: &Mat) -> Result<Mat> {
        check_block(self.dim(), v);
        let lu = self.lu_t.as_ref().ok_or_else(|| singular("dense operator"))?;
        lu.solve(v).ok_or_else(|| singular("dense operator"))
    }
    fn shifted(&self, sigma: f64) -> Result<Operator> {
        let n = self.dim();
        DenseOperator::shared(&self.a + Mat::identity(n, n) * sigma)
    }
    fn to_dense(&self) -> Mat {
        self.a.clone()
    }
}

// ---------------------------------------------------------------------------

/// Banded matrix with `kl` sub- and `ku` superdiagonals, factorized by band LU
/// with partial pivoting.
#[derive(Debug, Clone)]
pub struct BandedOperator {
    n: usize,
    kl: usize,
    ku: usize,
    /// Original entries, `band[(ku + i - j) + j·(kl+ku+1)] = A(i, j)`.
    band: Vec<f64>,
    /// LU factors with room for fill-in, `lu[(kv + i - j) + j·(2kl+ku+1)]`.
    lu: Vec<f64>,
    piv: Vec<usize>,
    singular: bool,
}

impl BandedOperator {
    /// Builds from a closure giving `A(i, j)` inside the band.
    pub fn from_fn(n: usize, kl: usize, ku: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let ld = kl + ku + 1;
        let mut band = vec![0.0; ld * n];
        for j in 0..n {
            for i in j.saturating_sub(ku)..=(j + kl).min(n.saturating_sub(1)) {
                band[(ku + i - j) + j * ld] = f(i, j);
            }
        }
        let mut op = Self { n, kl, ku, band, lu: Vec::new(), piv: Vec::new(), singular: false };
        op.factorize();
        op
    }

    /// Tridiagonal matrix from its three diagonals (`sub[i] = A(i+1, i)`,
    /// `sup[i] = A(i, i+1)`).
    pub fn tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64]) -> Self {
        let n = diag.len();
        assert!(sub.len() + 1 == n.max(1) && sup.len() + 1 == n.max(1), "diagonal lengths");
        Self::from_fn(n, 1, 1, |i, j| {
            if i == j {
                diag[i]
            } else if i == j + 1 {
                sub[j]
            } else {
                sup[i]
            }
        })
    }

    /// `tridiag(sub, diag, sup)` with constant diagonals.
    pub fn toeplitz_tridiagonal(n: usize, sub: f64, diag: f64, sup: f64) -> Self {
        Self::from_fn(n, 1, 1, |i, j| {
            if i == j {
                diag
            } else if i == j + 1 {
                sub
            } else {
                sup
            }
        })
    }

    pub fn shared(self) -> Operator {
        Arc::new(self)
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i > j + self.kl || j > i + self.ku {
            0.0
        } else {
            self.band[(self.ku + i - j) + j * (self.kl + self.ku + 1)]
        }
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    fn factorize(&mut self) {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let kv = kl + ku;
        let ld = 2 * kl + ku + 1;
        let mut lu = vec![0.0; ld * n];
        for j in 0..n {
            for i in j.saturating_sub(ku)..=(j + kl).min(n.saturating_sub(1)) {
                lu[(kv + i - j) + j * ld] = self.get(i, j);
            }
        }
        let at = |i: usize, j: usize| (kv + i - j) + j * ld;
        let mut piv = vec![0usize; n];
        let mut ju = 0usize;
        let mut max_pivot = 0.0f64;
        let mut min_pivot = f64::INFINITY;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let mut p = j;
            for i in (j + 1)..=(j + km) {
                if lu[at(i, j)].abs() > lu[at(p, j)].abs() {
                    p = i;
                }
            }
            piv[j] = p;
            let pv = lu[at(p, j)].abs();
            max_pivot = max_pivot.max(pv);
            min_pivot = min_pivot.min(pv);
            if pv == 0.0 {
                continue;
            }
            ju = ju.max((j + ku + p - j).min(n - 1));
            if p != j {
                for c in j..=ju {
                    lu.swap(at(j, c), at(p, c));
                }
            }
            let d = lu[at(j, j)];
            for i in (j + 1)..=(j + km) {
                lu[at(i, j)] /= d;
            }
            for c in (j + 1)..=ju {
                let ujc = lu[at(j, c)];
                if ujc != 0.0 {
                    for i in (j + 1)..=(j + km) {
                        lu[at(i, c)] -= lu[at(i, j)] * ujc;
                    }
                }
            }
        }
        self.singular = n > 0 && (max_pivot == 0.0 || min_pivot < SINGULAR_PIVOT_RATIO * max_pivot);
        self.lu = lu;
        self.piv = piv;
    }

    fn solve_in_place(&self, b: &mut [f64], transpose: bool) {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let kv = kl + ku;
        let ld = 2 * kl + ku + 1;
        let lu = &self.lu;
        let at = |i: usize, j: usize| (kv + i - j) + j * ld;
        if !transpose {
            for j in 0..n {
                let p = self.piv[j];
                if p != j {
                    b.swap(j, p);
                }
                let bj = b[j];
                if bj != 0.0 {
                    for i in (j + 1)..=(j + kl.min(n - 1 - j)) {
                        b[i] -= lu[at(i, j)] * bj;
                    }
                }
            }
            for j in (0..n).rev() {
                b[j] /= lu[at(j, j)];
                let bj = b[j];
                if bj != 0.0 {
                    for i in j.saturating_sub(kv)..j {
                        b[i] -= lu[at(i, j)] * bj;
                    }
                }
            }
        } else {
            for j in 0..n {
                let mut s = b[j];
                for i in j.saturating_sub(kv)..j {
                    s -= lu[at(i, j)] * b[i];
                }
                b[j] = s / lu[at(j, j)];
            }
            for j in (0..n).rev() {
                let mut s = b[j];
                for i in (j + 1)..=(j + kl.min(n - 1 - j)) {
                    s -= lu[at(i, j)] * b[i];
                }
                b[j] = s;
                let p = self.piv[j];
                if p != j {
                    b.swap(j, p);
                }
            }
        }
    }

    fn solve_block(&self, v: &Mat, transpose: bool) -> Result<Mat> {
        check_block(self.n, v);
        if self.singular {
            return Err(singular("banded operator"));
        }
        let mut out = v.clone();
        for mut col in out.column_iter_mut() {
            self.solve_in_place(col.as_mut_slice(), transpose);
        }
        Ok(out)
    }

    fn multiply(&self, v: &Mat, transpose: bool) -> Mat {
        check_block(self.n, v);
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let ld = kl + ku + 1;
        let mut out = Mat::zeros(n, v.ncols());
        for (c, x) in v.column_iter().enumerate() {
            let mut y = out.column_mut(c);
            for j in 0..n {
                let lo = j.saturating_sub(ku);
                let hi = (j + kl).min(n - 1);
                if !transpose {
                    let xj = x[j];
                    if xj != 0.0 {
                        for i in lo..=hi {
                            y[i] += self.band[(ku + i - j) + j * ld] * xj;
                        }
                    }
                } else {
                    let mut s = 0.0;
                    for i in lo..=hi {
                        s += self.band[(ku + i - j) + j * ld] * x[i];
                    }
                    y[j] = s;
                }
            }
        }
        out
    }
}

impl LinearMatrixOperator for BandedOperator {
    fn dim(&self) -> usize {
        self.n
    }
    fn structure(&self) -> Structure {
        if self.kl <= 1 && self.ku <= 1 {
            Structure::Tridiagonal
        } else {
            Structure::GeneralSparse
        }
    }
    fn apply(&self, v: &Mat) -> Mat {
        self.multiply(v, false)
    }
    fn transpose_apply(&self, v: &Mat) -> Mat {
        self.multiply(v, true)
    }
    fn inverse_apply(&self, v: &Mat) -> Result<Mat> {
        self.solve_block(v, false)
    }
    fn inverse_transpose_apply(&self, v: &Mat) -> Result<Mat> {
        self.solve_block(v, true)
    }
    fn shifted(&self, sigma: f64) -> Result<Operator> {
        Ok(Arc::new(BandedOperator::from_fn(self.n, self.kl, self.ku, |i, j| {
            self.get(i, j) + if i == j { sigma } else { 0.0 }
        })))
    }
}

// ---------------------------------------------------------------------------

/// `T + U Vᵀ` with banded `T`; solves use the Sherman–Morrison–Woodbury
/// formula around the band LU.
#[derive(Debug, Clone)]
pub struct TridiagonalPlusLowRank {
    t: BandedOperator,
    u: Mat,
    v: Mat,
    /// `T⁻¹U` and `T⁻ᵀV`.
    tinv_u: Option<Mat>,
    tinvt_v: Option<Mat>,
    /// LU of the capacitance matrices `I + Vᵀ T⁻¹ U` and its transpose.
    cap: Option<LU<f64, Dyn, Dyn>>,
    cap_t: Option<LU<f64, Dyn, Dyn>>,
}

impl TridiagonalPlusLowRank {
    pub fn new(t: BandedOperator, u: Mat, v: Mat) -> Result<Self> {
        let n = t.dim();
        if u.nrows() != n || v.nrows() != n || u.ncols() != v.ncols() {
            return Err(Error::Dimension("low-rank correction does not match the band part".into()));
        }
        let mut op = Self { t, u, v, tinv_u: None, tinvt_v: None, cap: None, cap_t: None };
        if let (Ok(tu), Ok(tv)) = (op.t.inverse_apply(&op.u), op.t.inverse_transpose_apply(&op.v)) {
            let s = op.u.ncols();
            let k = Mat::identity(s, s) + op.v.tr_mul(&tu);
            let lu = k.clone().lu();
            // The capacitance ratio alone misses cancellation in I + Vᵀ T⁻¹ U,
            // so its pivots are compared against the scale of the summands.
            let scale = 1.0 + op.v.norm() * tu.norm();
            let min_pivot = lu.u().diagonal().iter().fold(f64::INFINITY, |m, x| m.min(x.abs()));
            if s == 0 || min_pivot > 1e-13 * scale {
                op.cap_t = Some(k.transpose().lu());
                op.cap = Some(lu);
                op.tinv_u = Some(tu);
                op.tinvt_v = Some(tv);
            }
        }
        Ok(op)
    }

    pub fn shared(self) -> Operator {
        Arc::new(self)
    }

    pub fn band_part(&self) -> &BandedOperator {
        &self.t
    }

    pub fn correction(&self) -> (&Mat, &Mat) {
        (&self.u, &self.v)
    }
}

impl LinearMatrixOperator for TridiagonalPlusLowRank {
    fn dim(&self) -> usize {
        self.t.dim()
    }
    fn structure(&self) -> Structure {
        Structure::TridiagonalPlusLowRank
    }
    fn apply(&self, x: &Mat) -> Mat {
        self.t.apply(x) + &self.u * self.v.tr_mul(x)
    }
    fn transpose_apply(&self, x: &Mat) -> Mat {
        self.t.transpose_apply(x) + &self.v * self.u.tr_mul(x)
    }
    fn inverse_apply(&self, x: &Mat) -> Result<Mat> {
        let (Some(tu), Some(cap)) = (&self.tinv_u, &self.cap) else {
            return Err(singular("tridiagonal-plus-low-rank operator"));
        };
        let y = self.t.inverse_apply(x)?;
        let z = cap.solve(&self.v.tr_mul(&y)).ok_or_else(|| singular("capacitance matrix"))?;
        Ok(y - tu * z)
    }
    fn inverse_transpose_apply(&self, x: &Mat) -> Result<Mat> {
        let (Some(tv), Some(cap)) = (&self.tinvt_v, &self.cap_t) else {
            return Err(singular("tridiagonal-plus-low-rank operator"));
        };
        let y = self.t.inverse_transpose_apply(x)?;
        let z = cap.solve(&self.u.tr_mul(&y)).ok_or_else(|| singular("capacitance matrix"))?;
        Ok(y - tv * z)
    }
    fn shifted(&self, sigma: f64) -> Result<Operator> {
        let t = self.t.shifted_band(sigma);
        Ok(Arc::new(TridiagonalPlusLowRank::new(t, self.u.clone(), self.v.clone())?))
    }
}

impl BandedOperator {
    fn shifted_band(&self, sigma: f64) -> BandedOperator {
        BandedOperator::from_fn(self.n, self.kl, self.ku, |i, j| {
            self.get(i, j) + if i == j { sigma } else { 0.0 }
        })
    }
}

// ---------------------------------------------------------------------------

/// `U Vᵀ` of low rank; never invertible for rank below n.
#[derive(Debug, Clone)]
pub struct LowRankOperator {
    u: Mat,
    v: Mat,
}

impl LowRankOperator {
    pub fn new(u: Mat, v: Mat) -> Result<Self> {
        if u.nrows() != v.nrows() || u.ncols() != v.ncols() {
            return Err(Error::Dimension("low-rank operator factors differ in shape".into()));
        }
        Ok(Self { u, v })
    }

    pub fn shared(self) -> Operator {
        Arc::new(self)
    }
}

impl LinearMatrixOperator for LowRankOperator {
    fn dim(&self) -> usize {
        self.u.nrows()
    }
    fn structure(&self) -> Structure {
        Structure::LowRank
    }
    fn apply(&self, x: &Mat) -> Mat {
        check_block(self.dim(), x);
        &self.u * self.v.tr_mul(x)
    }
    fn transpose_apply(&self, x: &Mat) -> Mat {
        check_block(self.dim(), x);
        &self.v * self.u.tr_mul(x)
    }
    fn inverse_apply(&self, _: &Mat) -> Result<Mat> {
        Err(Error::Unsupported("low-rank operators have no inverse".into()))
    }
    fn inverse_transpose_apply(&self, _: &Mat) -> Result<Mat> {
        Err(Error::Unsupported("low-rank operators have no inverse".into()))
    }
    fn shifted(&self, sigma: f64) -> Result<Operator> {
        let n = self.dim();
        let t = BandedOperator::from_fn(n, 0, 0, |_, _| sigma);
        Ok(Arc::new(TridiagonalPlusLowRank::new(t, self.u.clone(), self.v.clone())?))
    }
    fn low_rank_factors(&self) -> Option<(Mat, Mat)> {
        Some((self.u.clone(), self.v.clone()))
    }
}

// ---------------------------------------------------------------------------

/// Diagonal matrix, e.g. a block-diagonal selector `diag(0, I)`.
#[derive(Debug, Clone)]
pub struct DiagonalOperator {
    d: Vec<f64>,
}

impl DiagonalOperator {
    pub fn new(d: Vec<f64>) -> Self {
        Self { d }
    }

    pub fn identity(n: usize) -> Self {
        Self { d: vec![1.0; n] }
    }

    pub fn scaled_identity(n: usize, s: f64) -> Self {
        Self { d: vec![s; n] }
    }

    pub fn shared(self) -> Operator {
        Arc::new(self)
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.d
    }

    fn scale(&self, x: &Mat, inverse: bool) -> Result<Mat> {
        check_block(self.dim(), x);
        if inverse && self.d.iter().any(|v| *v == 0.0) {
            return Err(singular("diagonal operator"));
        }
        let mut out = x.clone();
        for (i, di) in self.d.iter().enumerate() {
            let f = if inverse { 1.0 / di } else { *di };
            out.row_mut(i).scale_mut(f);
        }
        Ok(out)
    }
}

impl LinearMatrixOperator for DiagonalOperator {
    fn dim(&self) -> usize {
        self.d.len()
    }
    fn structure(&self) -> Structure {
        Structure::DiagonalBlock
    }
    fn apply(&self, x: &Mat) -> Mat {
        self.scale(x, false).expect("forward scaling cannot fail")
    }
    fn transpose_apply(&self, x: &Mat) -> Mat {
        self.apply(x)
    }
    fn inverse_apply(&self, x: &Mat) -> Result<Mat> {
        self.scale(x, true)
    }
    fn inverse_transpose_apply(&self, x: &Mat) -> Result<Mat> {
        self.scale(x, true)
    }
    fn shifted(&self, sigma: f64) -> Result<Operator> {
        Ok(Arc::new(DiagonalOperator::new(self.d.iter().map(|v| v + sigma).collect())))
    }
}

// ---------------------------------------------------------------------------

/// Largest bandwidth for which a sparse matrix is solved through band LU.
const SPARSE_BAND_LIMIT: usize = 64;
/// Largest dimension for which a sparse matrix falls back to dense LU.
const SPARSE_DENSE_LIMIT: usize = 2000;

/// Compressed-sparse-row matrix. Solves go through band LU for narrow
/// bandwidth and dense LU for moderate n.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
    solver: SparseSolver,
}

#[derive(Debug, Clone)]
enum SparseSolver {
    Banded(Box<BandedOperator>),
    Dense(Box<DenseOperator>),
    None,
}

impl SparseOperator {
    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut t: Vec<(usize, usize, f64)> = triplets.to_vec();
        if let Some(&(i, j, _)) = t.iter().find(|(i, j, _)| *i >= n || *j >= n) {
            return Err(Error::Dimension(format!("entry ({i}, {j}) outside a {n}×{n} matrix")));
        }
        t.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(t.len());
        let mut vals: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in t {
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
                continue;
            }
            col_idx.push(j);
            vals.push(v);
            row_ptr[i + 1] += 1;
            last = Some((i, j));
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let mut op = Self { n, row_ptr, col_idx, vals, solver: SparseSolver::None };
        op.solver = op.build_solver()?;
        Ok(op)
    }

    pub fn shared(self) -> Operator {
        Arc::new(self)
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out.push((i, self.col_idx[k], self.vals[k]));
            }
        }
        out
    }

    fn bandwidths(&self) -> (usize, usize) {
        let mut kl = 0;
        let mut ku = 0;
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                if i > j {
                    kl = kl.max(i - j);
                } else {
                    ku = ku.max(j - i);
                }
            }
        }
        (kl, ku)
    }

    fn build_solver(&self) -> Result<SparseSolver> {
        let (kl, ku) = self.bandwidths();
        if kl.max(ku) <= SPARSE_BAND_LIMIT {
            let mut dense_band = std::collections::HashMap::new();
            for (i, j, v) in self.triplets() {
                dense_band.insert((i, j), v);
            }
            let b = BandedOperator::from_fn(self.n, kl, ku, |i, j| {
                dense_band.get(&(i, j)).copied().unwrap_or(0.0)
            });
            return Ok(SparseSolver::Banded(Box::new(b)));
        }
        if self.n <= SPARSE_DENSE_LIMIT {
            return Ok(SparseSolver::Dense(Box::new(DenseOperator::new(self.densify())?)));
        }
        Ok(SparseSolver::None)
    }

    fn densify(&self) -> Mat {
        let mut a = Mat::zeros(self.n, self.n);
        for (i, j, v) in self.triplets() {
            a[(i, j)] += v;
        }
        a
    }

    fn solver(&self) -> Result<&dyn LinearMatrixOperator> {
        match &self.solver {
            SparseSolver::Banded(b) => Ok(b.as_ref()),
            SparseSolver::Dense(d) => Ok(d.as_ref()),
            SparseSolver::None => Err(Error::Unsupported(format!(
                "no direct solver for a sparse matrix of size {} with wide bandwidth",
                self.n
            ))),
        }
    }
}

impl LinearMatrixOperator for SparseOperator {
    fn dim(&self) -> usize {
        self.n
    }
    fn structure(&self) -> Structure {
        Structure::GeneralSparse
    }
    fn apply(&self, x: &Mat) -> Mat {
        check_block(self.n, x);
        let mut out = Mat::zeros(self.n, x.ncols());
        for c in 0..x.ncols() {
            for i in 0..self.n {
                let mut s = 0.0;
                for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                    s += self.vals[k] * x[(self.col_idx[k], c)];
                }
                out[(i, c)] = s;
            }
        }
        out
    }
    fn transpose_apply(&self, x: &Mat) -> Mat {
        check_block(self.n, x);
        let mut out = Mat::zeros(self.n, x.ncols());
        for c in 0..x.ncols() {
            for i in 0..self.n {
                let xi = x[(i, c)];
                for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                    out[(self.col_idx[k], c)] += self.vals[k] * xi;
                }
            }
        }
        out
    }
    fn inverse_apply(&self, x: &Mat) -> Result<Mat> {
        self.solver()?.inverse_apply(x)
    }
    fn inverse_transpose_apply(&self, x: &Mat) -> Result<Mat> {
        self.solver()?.inverse_transpose_apply(x)
    }
    fn shifted(&self, sigma: f64) -> Result<Operator> {
        let mut t = self.triplets();
        t.extend((0..self.n).map(|i| (i, i, sigma)));
        Ok(Arc::new(SparseOperator::from_triplets(self.n, &t)?))
    }
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

    fn operators(rng: &mut ChaCha8Rng, n: usize) -> Vec<Operator> {
        let mut ops: Vec<Operator> = Vec::new();
        let dense = Mat::from_fn(n, n, |i, j| if i == j { 4.0 } else { 0.0 }) + random(rng, n, n) * 0.5;
        ops.push(DenseOperator::shared(dense).unwrap());
        ops.push(BandedOperator::toeplitz_tridiagonal(n, 2.0, -5.0, 2.0).shared());
        let kl = 2.min(n - 1);
        let ku = 3.min(n - 1);
        let vals = random(rng, n, n);
        ops.push(
            BandedOperator::from_fn(n, kl, ku, |i, j| vals[(i, j)] + if i == j { 3.0 } else { 0.0 })
                .shared(),
        );
        let t = BandedOperator::toeplitz_tridiagonal(n, 1.0, -4.0, 1.0);
        ops.push(TridiagonalPlusLowRank::new(t, random(rng, n, 2), random(rng, n, 2) * 0.3).unwrap().shared());
        ops.push(DiagonalOperator::new((0..n).map(|i| 1.0 + i as f64).collect()).shared());
        let mut trip = Vec::new();
        for i in 0..n {
            trip.push((i, i, 5.0));
            trip.push((i, (i * 7 + 3) % n, rng.random_range(-1.0..1.0)));
        }
        ops.push(SparseOperator::from_triplets(n, &trip).unwrap().shared());
        ops
    }

    #[test]
    fn tridiagonal_matches_dense() {
        let op = BandedOperator::toeplitz_tridiagonal(6, 2.0, -5.0, 3.0);
        let d = op.to_dense();
        assert_eq!(d[(1, 0)], 2.0);
        assert_eq!(d[(0, 1)], 3.0);
        assert_eq!(d[(3, 3)], -5.0);
        assert_eq!(d[(0, 2)], 0.0);
        assert_eq!(op.structure(), Structure::Tridiagonal);
    }

    #[test]
    fn pivoting_needed_band() {
        // Zero leading diagonal forces row interchanges.
        let op = BandedOperator::from_fn(5, 1, 1, |i, j| if i == j { if i == 0 { 0.0 } else { 2.0 } } else { 1.0 });
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random(&mut rng, 5, 2);
        let d = op.to_dense();
        assert!((op.inverse_apply(&(&d * &x)).unwrap() - &x).norm() < 1e-13);
        assert!((op.inverse_transpose_apply(&(d.transpose() * &x)).unwrap() - &x).norm() < 1e-13);
    }

    #[test]
    fn singular_operators_report_errors() {
        let op = BandedOperator::toeplitz_tridiagonal(4, 0.0, 0.0, 0.0);
        assert!(matches!(op.inverse_apply(&Mat::zeros(4, 1)), Err(Error::Singular(_))));
        let lr = LowRankOperator::new(Mat::zeros(4, 1), Mat::zeros(4, 1)).unwrap();
        assert!(lr.inverse_apply(&Mat::zeros(4, 1)).is_err());
        let d = DiagonalOperator::new(vec![1.0, 0.0]);
        assert!(d.inverse_apply(&Mat::zeros(2, 1)).is_err());
        // Periodic Laplacian: tridiagonal plus corner correction, singular.
        let n = 8;
        let t = BandedOperator::toeplitz_tridiagonal(n, 1.0, -2.0, 1.0);
        let mut u = Mat::zeros(n, 2);
        let mut v = Mat::zeros(n, 2);
        u[(0, 0)] = 1.0;
        v[(n - 1, 0)] = 1.0;
        u[(n - 1, 1)] = 1.0;
        v[(0, 1)] = 1.0;
        let per = TridiagonalPlusLowRank::new(t, u, v).unwrap();
        assert!(per.inverse_apply(&Mat::zeros(n, 1)).is_err());
        let shifted = per.shifted(0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random(&mut rng, n, 2);
        assert!((shifted.inverse_apply(&shifted.apply(&x)).unwrap() - x).norm() < 1e-12);
    }

    #[test]
    fn shifted_adds_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for op in operators(&mut rng, 9) {
            let s = op.shifted(0.75).unwrap();
            let diff = s.to_dense() - op.to_dense() - Mat::identity(9, 9) * 0.75;
            assert!(diff.norm() < 1e-14, "{:?}", op.structure());
        }
        let lr = LowRankOperator::new(random(&mut rng, 6, 1), random(&mut rng, 6, 1)).unwrap();
        let s = lr.shifted(2.0).unwrap();
        assert!((s.to_dense() - lr.to_dense() - Mat::identity(6, 6) * 2.0).norm() < 1e-14);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn round_trip_and_adjoint(seed in any::<u64>(), n in 4usize..40, b in 1usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for op in operators(&mut rng, n) {
                let v = random(&mut rng, n, b);
                let w = random(&mut rng, n, b);
                let back = op.apply(&op.inverse_apply(&v).unwrap());
                prop_assert!((&back - &v).norm() <= 1e-12 * v.norm(), "{:?}", op.structure());
                let back_t = op.transpose_apply(&op.inverse_transpose_apply(&v).unwrap());
                prop_assert!((&back_t - &v).norm() <= 1e-12 * v.norm(), "{:?}", op.structure());
                let lhs = op.apply(&v).dot(&w);
                let rhs = v.dot(&op.transpose_apply(&w));
                prop_assert!((lhs - rhs).abs() <= 1e-12 * op.apply(&v).norm() * w.norm());
            }
            let lr = LowRankOperator::new(random(&mut rng, n, 2), random(&mut rng, n, 2)).unwrap();
            let v = random(&mut rng, n, b);
            let w = random(&mut rng, n, b);
            prop_assert!((lr.apply(&v).dot(&w) - v.dot(&lr.transpose_apply(&w))).abs() <= 1e-12 * (1.0 + lr.apply(&v).norm() * w.norm()));
        }
    }
}
