//! Real Schur decomposition `A = Q U Qᵀ`.
//!
//! Householder reduction to Hessenberg form followed by the Francis
//! double-shift QR iteration (after the EISPACK `hqr2` procedure), with the
//! orthogonal factor accumulated. Converged 2×2 blocks with real eigenvalues
//! are split by a Givens rotation, so every remaining 2×2 diagonal block of
//! `U` carries a complex-conjugate pair.

use nalgebra::Complex;

use crate::{Error, Mat, Result};

/// Iterations allowed for a single eigenvalue (or pair) before giving up.
const MAX_ITERS_PER_EIGENVALUE: usize = 300;

#[derive(Debug, Clone)]
pub struct SchurForm {
    /// Orthogonal factor.
    pub q: Mat,
    /// Quasi-upper-triangular factor.
    pub u: Mat,
}

/// A 1×1 or 2×2 diagonal block of a quasi-triangular matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiagonalBlock {
    pub start: usize,
    pub size: usize,
}

impl DiagonalBlock {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.size
    }
}

impl SchurForm {
    pub fn dim(&self) -> usize {
        self.u.nrows()
    }

    pub fn blocks(&self) -> Vec<DiagonalBlock> {
        quasi_triangular_blocks(&self.u)
    }

    pub fn eigenvalues(&self) -> Vec<Complex<f64>> {
        self.blocks()
            .iter()
            .flat_map(|b| block_eigenvalues(&self.u, *b))
            .collect()
    }

    /// `Q U Qᵀ`.
    pub fn reconstruct(&self) -> Mat {
        &self.q * &self.u * self.q.transpose()
    }
}

/// Splits a quasi-upper-triangular matrix into its diagonal blocks. A block of
/// size two starts wherever the subdiagonal entry is nonzero.
pub fn quasi_triangular_blocks(u: &Mat) -> Vec<DiagonalBlock> {
    let n = u.nrows();
    let mut blocks = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        if i + 1 < n && u[(i + 1, i)] != 0.0 {
            blocks.push(DiagonalBlock { start: i, size: 2 });
            i += 2;
        } else {
            blocks.push(DiagonalBlock { start: i, size: 1 });
            i += 1;
        }
    }
    blocks
}

/// Eigenvalues of one diagonal block.
pub fn block_eigenvalues(u: &Mat, block: DiagonalBlock) -> Vec<Complex<f64>> {
    let i = block.start;
    if block.size == 1 {
        return vec![Complex::new(u[(i, i)], 0.0)];
    }
    let (a, b, c, d) = (u[(i, i)], u[(i, i + 1)], u[(i + 1, i)], u[(i + 1, i + 1)]);
    let (l1, l2) = eig2x2(a, b, c, d);
    vec![l1, l2]
}

fn eig2x2(a: f64, b: f64, c: f64, d: f64) -> (Complex<f64>, Complex<f64>) {
    let p = 0.5 * (a - d);
    let disc = p * p + b * c;
    let z = disc.abs().sqrt();
    if disc >= 0.0 {
        let z = if p >= 0.0 { p + z } else { p - z };
        let l1 = d + z;
        let l2 = if z != 0.0 { d - b * c / z } else { d + z };
        (Complex::new(l1, 0.0), Complex::new(l2, 0.0))
    } else {
        (Complex::new(d + p, z), Complex::new(d + p, -z))
    }
}

fn check_input(a: &Mat) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension(format!(
            "Schur decomposition needs a square matrix, got {}×{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("matrix has non-finite entries".into()));
    }
    Ok(())
}

/// Real Schur decomposition with accumulated orthogonal factor.
pub fn real_schur(a: &Mat) -> Result<SchurForm> {
    check_input(a)?;
    let n = a.nrows();
    let mut h = a.as_slice().to_vec();
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        q[i + i * n] = 1.0;
    }
    hessenberg(n, &mut h, Some(&mut q));
    francis(n, &mut h, Some(&mut q))?;
    for j in 0..n {
        for i in (j + 2)..n {
            h[i + j * n] = 0.0;
        }
    }
    Ok(SchurForm {
        q: Mat::from_vec(n, n, q),
        u: Mat::from_vec(n, n, h),
    })
}

/// Eigenvalues only; skips the accumulation of `Q` and restricts the QR sweeps
/// to the active window.
pub fn eigenvalues(a: &Mat) -> Result<Vec<Complex<f64>>> {
    check_input(a)?;
    let n = a.nrows();
    let mut h = a.as_slice().to_vec();
    hessenberg(n, &mut h, None);
    francis(n, &mut h, None)
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(a: &Mat) -> Result<f64> {
    Ok(eigenvalues(a)?
        .iter()
        .map(|l| l.norm())
        .fold(0.0, f64::max))
}

fn hessenberg(n: usize, h: &mut [f64], mut q: Option<&mut [f64]>) {
    if n < 3 {
        return;
    }
    let mut v = vec![0.0; n];
    let mut w = vec![0.0; n];
    for k in 0..n - 2 {
        let below: f64 = ((k + 2)..n).map(|i| h[i + k * n].powi(2)).sum();
        if below == 0.0 {
            continue;
        }
        let x0 = h[k + 1 + k * n];
        let alpha = (below + x0 * x0).sqrt();
        let sign = if x0 >= 0.0 { 1.0 } else { -1.0 };
        let len = n - k - 1;
        v[0] = x0 + sign * alpha;
        for i in 1..len {
            v[i] = h[k + 1 + i + k * n];
        }
        let vnorm2: f64 = v[..len].iter().map(|x| x * x).sum();
        let beta = 2.0 / vnorm2;

        // H ← P H on rows k+1.., columns k+1.. (column k is set explicitly below)
        for j in (k + 1)..n {
            let col = &mut h[j * n..(j + 1) * n];
            let dot: f64 = (0..len).map(|i| v[i] * col[k + 1 + i]).sum();
            let f = beta * dot;
            for i in 0..len {
                col[k + 1 + i] -= f * v[i];
            }
        }
        h[k + 1 + k * n] = -sign * alpha;
        for i in (k + 2)..n {
            h[i + k * n] = 0.0;
        }

        // H ← H P on all rows, columns k+1..
        apply_reflector_right(n, h, &v[..len], beta, k + 1, &mut w);
        if let Some(q) = q.as_deref_mut() {
            apply_reflector_right(n, q, &v[..len], beta, k + 1, &mut w);
        }
    }
}

/// `M[:, off..] ← M[:, off..] (I − β v vᵀ)` for a column-major n×n buffer.
fn apply_reflector_right(n: usize, m: &mut [f64], v: &[f64], beta: f64, off: usize, w: &mut [f64]) {
    w.iter_mut().for_each(|x| *x = 0.0);
    for (l, vl) in v.iter().enumerate() {
        let col = &m[(off + l) * n..(off + l + 1) * n];
        for i in 0..n {
            w[i] += vl * col[i];
        }
    }
    for (l, vl) in v.iter().enumerate() {
        let f = beta * vl;
        let col = &mut m[(off + l) * n..(off + l + 1) * n];
        for i in 0..n {
            col[i] -= f * w[i];
        }
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix. With `q` present the
/// full matrix is updated so that it ends in real Schur form; without it only
/// the active window is swept and just the eigenvalues are meaningful.
fn francis(n: usize, h: &mut [f64], mut q: Option<&mut [f64]>) -> Result<Vec<Complex<f64>>> {
    let mut eigs = vec![Complex::new(0.0, 0.0); n];
    if n == 0 {
        return Ok(eigs);
    }
    let full = q.is_some();
    let nn = n as isize;
    let at = |i: isize, j: isize| (i + j * nn) as usize;
    let eps = f64::EPSILON;

    let mut norm = 0.0;
    for i in 0..nn {
        for j in (i - 1).max(0)..nn {
            norm += h[at(i, j)].abs();
        }
    }

    let mut exshift = 0.0;
    let mut hi = nn - 1;
    let mut iter = 0usize;
    let (mut p, mut qq, mut r, mut x, mut y, mut z, mut w);

    while hi >= 0 {
        // Look for a single small subdiagonal element.
        let mut l = hi;
        while l > 0 {
            let mut s = h[at(l - 1, l - 1)].abs() + h[at(l, l)].abs();
            if s == 0.0 {
                s = norm;
            }
            if h[at(l, l - 1)].abs() <= eps * s {
                h[at(l, l - 1)] = 0.0;
                break;
            }
            l -= 1;
        }
        // Column range touched by row updates and row range by column updates.
        let (row_lo, col_hi) = if full { (0, nn - 1) } else { (l, hi) };

        if l == hi {
            h[at(hi, hi)] += exshift;
            eigs[hi as usize] = Complex::new(h[at(hi, hi)], 0.0);
            hi -= 1;
            iter = 0;
        } else if l == hi - 1 {
            w = h[at(hi, hi - 1)] * h[at(hi - 1, hi)];
            p = (h[at(hi - 1, hi - 1)] - h[at(hi, hi)]) / 2.0;
            qq = p * p + w;
            z = qq.abs().sqrt();
            h[at(hi, hi)] += exshift;
            h[at(hi - 1, hi - 1)] += exshift;
            x = h[at(hi, hi)];
            if qq >= 0.0 {
                z = if p >= 0.0 { p + z } else { p - z };
                let l1 = x + z;
                let l2 = if z != 0.0 { x - w / z } else { l1 };
                eigs[(hi - 1) as usize] = Complex::new(l1, 0.0);
                eigs[hi as usize] = Complex::new(l2, 0.0);
                if full {
                    let xs = h[at(hi, hi - 1)];
                    let s = xs.abs() + z.abs();
                    let mut pr = xs / s;
                    let mut qr = z / s;
                    let rr = pr.hypot(qr);
                    pr /= rr;
                    qr /= rr;
                    for j in (hi - 1)..nn {
                        let t = h[at(hi - 1, j)];
                        h[at(hi - 1, j)] = qr * t + pr * h[at(hi, j)];
                        h[at(hi, j)] = qr * h[at(hi, j)] - pr * t;
                    }
                    for i in 0..=hi {
                        let t = h[at(i, hi - 1)];
                        h[at(i, hi - 1)] = qr * t + pr * h[at(i, hi)];
                        h[at(i, hi)] = qr * h[at(i, hi)] - pr * t;
                    }
                    if let Some(qm) = q.as_deref_mut() {
                        for i in 0..nn {
                            let t = qm[at(i, hi - 1)];
                            qm[at(i, hi - 1)] = qr * t + pr * qm[at(i, hi)];
                            qm[at(i, hi)] = qr * qm[at(i, hi)] - pr * t;
                        }
                    }
                    h[at(hi, hi - 1)] = 0.0;
                }
            } else {
                eigs[(hi - 1) as usize] = Complex::new(x + p, z);
                eigs[hi as usize] = Complex::new(x + p, -z);
            }
            hi -= 2;
            iter = 0;
        } else {
            x = h[at(hi, hi)];
            y = h[at(hi - 1, hi - 1)];
            w = h[at(hi, hi - 1)] * h[at(hi - 1, hi)];

            if iter > 0 && iter % 10 == 0 && iter % 30 != 0 {
                // Wilkinson's ad hoc shift.
                exshift += x;
                for i in 0..=hi {
                    h[at(i, i)] -= x;
                }
                let s = h[at(hi, hi - 1)].abs() + h[at(hi - 1, hi - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            if iter > 0 && iter % 30 == 0 {
                let mut s = (y - x) / 2.0;
                s = s * s + w;
                if s > 0.0 {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / 2.0 + s);
                    for i in 0..=hi {
                        h[at(i, i)] -= s;
                    }
                    exshift += s;
                    x = 0.964;
                    y = x;
                    w = x;
                }
            }
            iter += 1;
            if iter > MAX_ITERS_PER_EIGENVALUE {
                return Err(Error::Factorization(format!(
                    "QR iteration did not converge for eigenvalue {hi} after {MAX_ITERS_PER_EIGENVALUE} sweeps"
                )));
            }

            // Look for two consecutive small subdiagonal elements.
            let mut m = hi - 2;
            loop {
                z = h[at(m, m)];
                r = x - z;
                let s = y - z;
                p = (r * s - w) / h[at(m + 1, m)] + h[at(m, m + 1)];
                qq = h[at(m + 1, m + 1)] - z - r - s;
                r = h[at(m + 2, m + 1)];
                let s = p.abs() + qq.abs() + r.abs();
                p /= s;
                qq /= s;
                r /= s;
                if m == l {
                    break;
                }
                if h[at(m, m - 1)].abs() * (qq.abs() + r.abs())
                    < eps * (p.abs() * (h[at(m - 1, m - 1)].abs() + z.abs() + h[at(m + 1, m + 1)].abs()))
                {
                    break;
                }
                m -= 1;
            }

            for i in (m + 2)..=hi {
                h[at(i, i - 2)] = 0.0;
                if i > m + 2 {
                    h[at(i, i - 3)] = 0.0;
                }
            }

            // Double QR step on rows l..=hi and columns m..=hi.
            for k in m..hi {
                let notlast = k != hi - 1;
                if k != m {
                    p = h[at(k, k - 1)];
                    qq = h[at(k + 1, k - 1)];
                    r = if notlast { h[at(k + 2, k - 1)] } else { 0.0 };
                    x = p.abs() + qq.abs() + r.abs();
                    if x == 0.0 {
                        continue;
                    }
                    p /= x;
                    qq /= x;
                    r /= x;
                }
                let mut s = (p * p + qq * qq + r * r).sqrt();
                if p < 0.0 {
                    s = -s;
                }
                if s != 0.0 {
                    if k != m {
                        h[at(k, k - 1)] = -s * x;
                    } else if l != m {
                        h[at(k, k - 1)] = -h[at(k, k - 1)];
                    }
                    p += s;
                    x = p / s;
                    y = qq / s;
                    z = r / s;
                    qq /= p;
                    r /= p;

                    for j in k..=col_hi {
                        let mut t = h[at(k, j)] + qq * h[at(k + 1, j)];
                        if notlast {
                            t += r * h[at(k + 2, j)];
                            h[at(k + 2, j)] -= t * z;
                        }
                        h[at(k, j)] -= t * x;
                        h[at(k + 1, j)] -= t * y;
                    }
                    for i in row_lo..=hi.min(k + 3) {
                        let mut t = x * h[at(i, k)] + y * h[at(i, k + 1)];
                        if notlast {
                            t += z * h[at(i, k + 2)];
                            h[at(i, k + 2)] -= t * r;
                        }
                        h[at(i, k)] -= t;
                        h[at(i, k + 1)] -= t * qq;
                    }
                    if let Some(qm) = q.as_deref_mut() {
                        for i in 0..nn {
                            let mut t = x * qm[at(i, k)] + y * qm[at(i, k + 1)];
                            if notlast {
                                t += z * qm[at(i, k + 2)];
                                qm[at(i, k + 2)] -= t * r;
                            }
                            qm[at(i, k)] -= t;
                            qm[at(i, k + 1)] -= t * qq;
                        }
                    }
                }
            }
        }
    }
    Ok(eigs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn check_schur(a: &Mat, s: &SchurForm) {
        let n = a.nrows();
        let eps = f64::EPSILON;
        let orth = (s.q.transpose() * &s.q - Mat::identity(n, n)).norm();
        assert!(orth <= 50.0 * n as f64 * eps, "orthogonality {orth:e}");
        let rec = (s.reconstruct() - a).norm();
        assert!(rec <= 200.0 * eps * a.norm().max(1e-300) * (n as f64).sqrt(), "reconstruction {rec:e}");
        for j in 0..n {
            for i in (j + 2)..n {
                assert_eq!(s.u[(i, j)], 0.0);
            }
        }
        // No two consecutive nonzero subdiagonal entries.
        for i in 1..n.saturating_sub(1) {
            assert!(s.u[(i, i - 1)] == 0.0 || s.u[(i + 1, i)] == 0.0);
        }
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
    fn identity_is_its_own_schur_form() {
        let a = Mat::identity(4, 4);
        let s = real_schur(&a).unwrap();
        assert_eq!(s.q, Mat::identity(4, 4));
        assert_eq!(s.u, Mat::identity(4, 4));
    }

    #[test]
    fn toeplitz_tridiagonal_closed_form_eigenvalues() {
        let n = 6;
        let a = tridiag(n, 2.0, -5.0, 2.0);
        let s = real_schur(&a).unwrap();
        check_schur(&a, &s);
        let mut got: Vec<f64> = (0..n).map(|i| s.u[(i, i)]).collect();
        got.sort_by(f64::total_cmp);
        let mut want: Vec<f64> = (1..=n)
            .map(|k| -5.0 + 4.0 * (k as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos())
            .collect();
        want.sort_by(f64::total_cmp);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-10, "{g} vs {w}");
        }
    }

    /// Roots of the characteristic polynomial of a symmetric 3×3 matrix by
    /// bisection on sign changes.
    fn charpoly_roots_3x3(a: &Mat) -> Vec<f64> {
        let det3 = |m: &Mat| {
            m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
                - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
                + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)])
        };
        let f = |t: f64| det3(&(a - Mat::identity(3, 3) * t));
        let bound = a.iter().map(|v| v.abs()).sum::<f64>() + 1.0;
        let steps = 20000;
        let mut roots = Vec::new();
        let mut prev = -bound;
        for k in 1..=steps {
            let t = -bound + 2.0 * bound * k as f64 / steps as f64;
            if f(prev) == 0.0 {
                roots.push(prev);
            } else if f(prev) * f(t) < 0.0 {
                let (mut lo, mut hi) = (prev, t);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if f(lo) * f(mid) <= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
            prev = t;
        }
        roots
    }

    #[test]
    fn symmetric_input_gives_diagonal_u() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = Mat::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0));
        let a = &b + b.transpose();
        let s = real_schur(&a).unwrap();
        check_schur(&a, &s);
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!(s.u[(i, j)].abs() < 1e-13, "offdiag {}", s.u[(i, j)]);
                }
            }
        }
        let mut got: Vec<f64> = (0..3).map(|i| s.u[(i, i)]).collect();
        got.sort_by(f64::total_cmp);
        let want = charpoly_roots_3x3(&a);
        assert_eq!(want.len(), 3);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-9, "{g} vs {w}");
        }
    }

    #[test]
    fn random_nonsymmetric_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [1usize, 2, 3, 5, 8, 17, 40] {
            let a = Mat::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            let s = real_schur(&a).unwrap();
            check_schur(&a, &s);
            let mut e1: Vec<_> = s.eigenvalues().iter().map(|z| (z.re, z.im)).collect();
            let mut e2: Vec<_> = eigenvalues(&a).unwrap().iter().map(|z| (z.re, z.im)).collect();
            e1.sort_by(|a, b| a.partial_cmp(b).unwrap());
            e2.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (x, y) in e1.iter().zip(&e2) {
                assert!((x.0 - y.0).abs() < 1e-9 && (x.1 - y.1).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rotation_has_complex_pair_block() {
        let a = Mat::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let s = real_schur(&a).unwrap();
        assert_eq!(s.blocks(), vec![DiagonalBlock { start: 0, size: 2 }]);
        let e = s.eigenvalues();
        assert!((e[0].im.abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn structured_matrices_converge() {
        // Permutation-like and defective inputs are classic stallers.
        let n = 12;
        let cyclic = Mat::from_fn(n, n, |i, j| if (i + 1) % n == j { 1.0 } else { 0.0 });
        check_schur(&cyclic, &real_schur(&cyclic).unwrap());
        let jordan = tridiag(n, 0.0, 2.0, 1.0);
        check_schur(&jordan, &real_schur(&jordan).unwrap());
        let skew = tridiag(n, 3.0, 0.0, -3.0);
        check_schur(&skew, &real_schur(&skew).unwrap());
        let zero = Mat::zeros(5, 5);
        check_schur(&zero, &real_schur(&zero).unwrap());
    }

    #[test]
    fn rejects_non_square_and_nan() {
        assert!(matches!(real_schur(&Mat::zeros(2, 3)), Err(Error::Dimension(_))));
        let mut a = Mat::identity(2, 2);
        a[(0, 1)] = f64::NAN;
        assert!(matches!(real_schur(&a), Err(Error::Domain(_))));
    }
}
