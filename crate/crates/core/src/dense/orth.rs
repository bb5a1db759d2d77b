//! Block Gram–Schmidt with reorthogonalization and rank deflation.

use nalgebra::DVector;

use crate::Mat;

/// Relative deflation tolerance: a column is dropped when its component
/// outside the current span falls below this fraction of its original norm.
pub const DEFLATION_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct OrthResult {
    /// Orthonormal columns, orthogonal to the basis (n×b').
    pub q: Mat,
    /// Coefficients against the basis (p×b).
    pub against_basis: Mat,
    /// Coefficients against `q` (b'×b), upper trapezoidal in the kept columns.
    pub within: Mat,
    /// Input columns that produced a new direction.
    pub kept: Vec<usize>,
}

impl OrthResult {
    pub fn width(&self) -> usize {
        self.q.ncols()
    }
}

/// Orthonormalizes `v_new` against an orthonormal `basis` and within itself.
/// `v_new ≈ basis·against_basis + q·within`, exact up to the deflated parts.
pub fn orthonormalize_block(v_new: &Mat, basis: Option<&Mat>) -> OrthResult {
    orthonormalize_block_tol(v_new, basis, DEFLATION_TOL)
}

pub fn orthonormalize_block_tol(v_new: &Mat, basis: Option<&Mat>, tol: f64) -> OrthResult {
    let n = v_new.nrows();
    let b = v_new.ncols();
    let p = basis.map_or(0, |m| m.ncols());
    let mut against = Mat::zeros(p, b);
    let mut qs: Vec<DVector<f64>> = Vec::new();
    let mut coeffs: Vec<Vec<f64>> = Vec::with_capacity(b);
    let mut kept = Vec::new();

    for j in 0..b {
        let mut w: DVector<f64> = v_new.column(j).clone_owned();
        let original = w.norm();
        let mut cw = vec![0.0; qs.len()];
        if original == 0.0 {
            coeffs.push(cw);
            continue;
        }
        let mut before = original;
        for pass in 0..3 {
            if let Some(basis) = basis {
                let c = basis.tr_mul(&w);
                w -= basis * &c;
                let mut col = against.column_mut(j);
                col += c;
            }
            for (k, qk) in qs.iter().enumerate() {
                let c = qk.dot(&w);
                w.axpy(-c, qk, 1.0);
                cw[k] += c;
            }
            let after = w.norm();
            // A third pass only when the second still removed a lot.
            if pass >= 1 && after > 0.7 * before {
                break;
            }
            before = after;
        }
        let nrm = w.norm();
        if nrm > tol * original && nrm > 0.0 {
            w /= nrm;
            qs.push(w);
            cw.push(nrm);
            kept.push(j);
        }
        coeffs.push(cw);
    }
    let bq = qs.len();
    let mut q = Mat::zeros(n, bq);
    for (k, qk) in qs.iter().enumerate() {
        q.set_column(k, qk);
    }
    let mut within = Mat::zeros(bq, b);
    for (j, cw) in coeffs.iter().enumerate() {
        for (k, c) in cw.iter().enumerate() {
            within[(k, j)] = *c;
        }
    }
    OrthResult { q, against_basis: against, within, kept }
}

/// Orthonormal basis of the column span (no reference basis).
pub fn orth(v: &Mat) -> Mat {
    orthonormalize_block(v, None).q
}
