//! Dense kernels for verification: factorizations and symmetric eigensolvers.
//!
//! Everything here targets verification sizes (n <= 5000 or so) on a single
//! core. The main eigenvalue path is Householder tridiagonalization followed
//! by implicit-shift QL; a cyclic Jacobi solver (values and vectors) serves as
//! an independent oracle at small sizes.

use crate::{Error, Result};
use std::ops::{Index, IndexMut};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n_rows: usize,
    n_cols: usize,
    values: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            values: vec![0.0; n_rows * n_cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.len());
        let mut m = Self::zeros(n_rows, n_cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), n_cols);
            m.values[i * n_cols..(i + 1) * n_cols].copy_from_slice(r);
        }
        m
    }

    /// Materializes a linear operator by probing with unit vectors.
    pub fn from_operator<F: FnMut(&[f64]) -> Vec<f64>>(n: usize, mut apply: F) -> Self {
        let mut m = Self::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = apply(&e);
            assert_eq!(col.len(), n);
            for i in 0..n {
                m[(i, j)] = col[i];
            }
            e[j] = 0.0;
        }
        m
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cols);
        (0..self.n_rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.n_cols, other.n_rows);
        let (n, k, m) = (self.n_rows, self.n_cols, other.n_cols);
        let mut out = DenseMatrix::zeros(n, m);
        // ikj order keeps all three accesses row-contiguous.
        for i in 0..n {
            for p in 0..k {
                let a = self.values[i * k + p];
                if a == 0.0 {
                    continue;
                }
                let brow = &other.values[p * m..(p + 1) * m];
                let orow = &mut out.values[i * m..(i + 1) * m];
                for j in 0..m {
                    orow[j] += a * brow[j];
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.n_cols, self.n_rows);
        for i in 0..self.n_rows {
            for j in 0..self.n_cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn add_scaled(&mut self, s: f64, other: &DenseMatrix) {
        assert_eq!(self.values.len(), other.values.len());
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += s * b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.values {
            *v *= s;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// max |X - X^T|.
    pub fn asymmetry(&self) -> f64 {
        assert_eq!(self.n_rows, self.n_cols);
        let mut worst = 0.0f64;
        for i in 0..self.n_rows {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn lu(&self) -> Result<DenseLu> {
        DenseLu::factor(self)
    }

    pub fn cholesky(&self) -> Result<DenseCholesky> {
        DenseCholesky::factor(self)
    }

    /// All eigenvalues of a symmetric matrix, ascending.
    ///
    /// Householder tridiagonalization (lower triangle, no eigenvectors)
    /// followed by implicit-shift QL. Inputs must satisfy
    /// max|X - X^T| <= 1e-12 * max|X|.
    pub fn sym_eigenvalues(&self) -> Result<Vec<f64>> {
        assert_eq!(self.n_rows, self.n_cols);
        let scale = self.max_abs();
        if scale > 0.0 && self.asymmetry() > 1e-12 * scale {
            return Err(Error::InvalidStructure(
                "matrix is not symmetric to 1e-12 relative".into(),
            ));
        }
        let (mut d, mut e) = tridiagonalize(self);
        tql_eigenvalues(&mut d, &mut e)?;
        d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(d)
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.values[i * self.n_cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.values[i * self.n_cols + j]
    }
}

/// LU factorization with partial pivoting.
#[derive(Debug, Clone)]
pub struct DenseLu {
    n: usize,
    lu: Vec<f64>,
    pivots: Vec<usize>,
}

impl DenseLu {
    pub fn factor(a: &DenseMatrix) -> Result<Self> {
        assert_eq!(a.n_rows, a.n_cols);
        let n = a.n_rows;
        let mut lu = a.values.clone();
        let mut pivots = vec![0usize; n];
        for k in 0..n {
            let mut p = k;
            let mut best = lu[k * n + k].abs();
            for i in k + 1..n {
                let v = lu[i * n + k].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return Err(Error::Singular("LU factorization"));
            }
            pivots[k] = p;
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
            }
            let pivot = lu[k * n + k];
            for i in k + 1..n {
                let m = lu[i * n + k] / pivot;
                lu[i * n + k] = m;
                for j in k + 1..n {
                    lu[i * n + j] -= m * lu[k * n + j];
                }
            }
        }
        Ok(Self { n, lu, pivots })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let mut x = b.to_vec();
        // rows were swapped in full during factorization (multipliers
        // included), so the permutation must be applied before the forward
        // solve, not interleaved with it
        for k in 0..n {
            x.swap(k, self.pivots[k]);
        }
        for k in 0..n {
            for i in k + 1..n {
                x[i] -= self.lu[i * n + k] * x[k];
            }
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        x
    }

    /// Solves A^T x = b using the same factorization (PA = LU, so
    /// A^T = U^T L^T P).
    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = b.to_vec();
        // U^T y = b (forward)
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[j * n + i] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        // L^T z = y (backward, unit diagonal)
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[j * n + i] * x[j];
            }
            x[i] = s;
        }
        // x = P^T z
        for k in (0..n).rev() {
            x.swap(k, self.pivots[k]);
        }
        x
    }
}

/// Cholesky factorization A = L L^T of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct DenseCholesky {
    n: usize,
    l: Vec<f64>, // lower triangle, row-major full storage
}

impl DenseCholesky {
    pub fn factor(a: &DenseMatrix) -> Result<Self> {
        assert_eq!(a.n_rows, a.n_cols);
        let n = a.n_rows;
        let mut l = vec![0.0f64; n * n];
        for i in 0..n {
            for j in 0..=i {
                // dot of two already-computed rows; contiguous
                let mut s = a.values[i * n + j];
                let (ri, rj) = (&l[i * n..i * n + j], &l[j * n..j * n + j]);
                for k in 0..j {
                    s -= ri[k] * rj[k];
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(Error::NotPositiveDefinite { index: i, pivot: s });
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Ok(Self { n, l })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Solves A x = b via the two triangular solves.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_lower_inplace(&mut x);
        self.solve_lower_transpose_inplace(&mut x);
        x
    }

    pub fn solve_lower_inplace(&self, x: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let mut s = x[i];
            let row = &self.l[i * n..i * n + i];
            for k in 0..i {
                s -= row[k] * x[k];
            }
            x[i] = s / self.l[i * n + i];
        }
    }

    pub fn solve_lower_transpose_inplace(&self, x: &mut [f64]) {
        let n = self.n;
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * x[k];
            }
            x[i] = s / self.l[i * n + i];
        }
    }

    /// Solves L Y = B for a block of right-hand sides held column-major.
    /// Columns are processed eight at a time so each L row is streamed once
    /// per group (the solve is bandwidth-bound on large matrices).
    fn trsm_lower_colmajor(&self, b: &mut [f64], ncols: usize) {
        let n = self.n;
        assert_eq!(b.len(), n * ncols);
        let mut j = 0;
        while j + 8 <= ncols {
            let (c0, rest) = b[j * n..].split_at_mut(n);
            let (c1, rest) = rest.split_at_mut(n);
            let (c2, rest) = rest.split_at_mut(n);
            let (c3, rest) = rest.split_at_mut(n);
            let (c4, rest) = rest.split_at_mut(n);
            let (c5, rest) = rest.split_at_mut(n);
            let (c6, rest) = rest.split_at_mut(n);
            let c7 = &mut rest[..n];
            for i in 0..n {
                let row = &self.l[i * n..i * n + i];
                let mut s = [c0[i], c1[i], c2[i], c3[i], c4[i], c5[i], c6[i], c7[i]];
                for k in 0..i {
                    let lik = row[k];
                    s[0] -= lik * c0[k];
                    s[1] -= lik * c1[k];
                    s[2] -= lik * c2[k];
                    s[3] -= lik * c3[k];
                    s[4] -= lik * c4[k];
                    s[5] -= lik * c5[k];
                    s[6] -= lik * c6[k];
                    s[7] -= lik * c7[k];
                }
                let inv = 1.0 / self.l[i * n + i];
                c0[i] = s[0] * inv;
                c1[i] = s[1] * inv;
                c2[i] = s[2] * inv;
                c3[i] = s[3] * inv;
                c4[i] = s[4] * inv;
                c5[i] = s[5] * inv;
                c6[i] = s[6] * inv;
                c7[i] = s[7] * inv;
            }
            j += 8;
        }
        while j < ncols {
            let col = &mut b[j * n..(j + 1) * n];
            for i in 0..n {
                let mut s = col[i];
                let row = &self.l[i * n..i * n + i];
                for k in 0..i {
                    s -= row[k] * col[k];
                }
                col[i] = s / self.l[i * n + i];
            }
            j += 1;
        }
    }

    /// Solves L^T Y = B for a block of right-hand sides held column-major.
    fn trsm_lower_transpose_colmajor(&self, b: &mut [f64], ncols: usize) {
        let n = self.n;
        assert_eq!(b.len(), n * ncols);
        for j in 0..ncols {
            let col = &mut b[j * n..(j + 1) * n];
            for i in (0..n).rev() {
                let mut s = col[i];
                for k in i + 1..n {
                    s -= self.l[k * n + i] * col[k];
                }
                col[i] = s / self.l[i * n + i];
            }
        }
    }

    /// X = A^{-1} B by the two triangular multi-RHS solves.
    pub fn solve_matrix(&self, b: &DenseMatrix) -> DenseMatrix {
        let n = self.n;
        assert_eq!(b.n_rows, n);
        let m = b.n_cols;
        let mut cols = vec![0.0f64; n * m];
        for j in 0..m {
            for i in 0..n {
                cols[j * n + i] = b.values[i * m + j];
            }
        }
        self.trsm_lower_colmajor(&mut cols, m);
        self.trsm_lower_transpose_colmajor(&mut cols, m);
        let mut out = DenseMatrix::zeros(n, m);
        for j in 0..m {
            for i in 0..n {
                out.values[i * m + j] = cols[j * n + i];
            }
        }
        out
    }

    /// Congruence reduction L^{-1} A L^{-T} of a symmetric matrix.
    pub fn congruence_reduce(&self, a: &DenseMatrix) -> DenseMatrix {
        let n = self.n;
        assert_eq!(a.n_rows, n);
        assert_eq!(a.n_cols, n);
        // X = L^{-1} A: columns of A are rows of A by symmetry.
        let mut x = vec![0.0f64; n * n]; // column-major
        for j in 0..n {
            for i in 0..n {
                x[j * n + i] = a.values[i * n + j];
            }
        }
        self.trsm_lower_colmajor(&mut x, n);
        // C = X L^{-T} <=> C^T = L^{-1} X^T; X is col-major so X^T columns
        // are X rows.
        let mut ct = vec![0.0f64; n * n]; // column-major C^T
        for j in 0..n {
            for i in 0..n {
                ct[j * n + i] = x[i * n + j];
            }
        }
        self.trsm_lower_colmajor(&mut ct, n);
        // C^T column-major == C row-major; symmetrize against roundoff.
        let mut c = DenseMatrix {
            n_rows: n,
            n_cols: n,
            values: ct,
        };
        for i in 0..n {
            for j in 0..i {
                let avg = 0.5 * (c[(i, j)] + c[(j, i)]);
                c[(i, j)] = avg;
                c[(j, i)] = avg;
            }
        }
        c
    }
}

/// Householder reduction of a symmetric matrix to tridiagonal form,
/// returning (diagonal, subdiagonal). Only the lower triangle is read; no
/// eigenvector accumulation. Row-oriented throughout, including the
/// symmetric matvec.
fn tridiagonalize(a: &DenseMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = a.n_rows;
    let mut m = a.values.clone();
    let mut d = vec![0.0f64; n];
    let mut e = vec![0.0f64; n];
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0f64;
        if l > 0 {
            let mut scale = 0.0f64;
            for k in 0..=l {
                scale += m[i * n + k].abs();
            }
            if scale == 0.0 {
                e[i] = m[i * n + l];
            } else {
                for k in 0..=l {
                    m[i * n + k] /= scale;
                    h += m[i * n + k] * m[i * n + k];
                }
                let f = m[i * n + l];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                m[i * n + l] = f - g;
                // p = A u over the leading (l+1) block, rows only
                for k in 0..=l {
                    e[k] = 0.0;
                }
                for j in 0..=l {
                    let uj = m[i * n + j];
                    let row_start = j * n;
                    let mut s = 0.0;
                    for k in 0..j {
                        let ajk = m[row_start + k];
                        s += ajk * m[i * n + k];
                        e[k] += ajk * uj;
                    }
                    e[j] += s + m[row_start + j] * uj;
                }
                // q = p/h, K = u^T p / (2h)
                let mut f_acc = 0.0;
                for j in 0..=l {
                    e[j] /= h;
                    f_acc += e[j] * m[i * n + j];
                }
                let hh = f_acc / (h + h);
                for j in 0..=l {
                    e[j] -= hh * m[i * n + j];
                }
                // rank-2 update of the lower triangle
                for j in 0..=l {
                    let fj = m[i * n + j];
                    let gj = e[j];
                    let urow = &m[i * n..i * n + j + 1];
                    // split borrows: copy the short u/q prefixes is avoided by
                    // indexing; rows are disjoint from row i for j < i
                    let _ = urow;
                    for k in 0..=j {
                        m[j * n + k] -= fj * e[k] + gj * m[i * n + k];
                    }
                }
            }
        } else {
            e[i] = m[i * n + l];
        }
        d[i] = h;
    }
    for i in 0..n {
        d[i] = m[i * n + i];
    }
    if n > 0 {
        e[0] = 0.0;
    }
    (d, e)
}

/// Implicit-shift QL iteration on a symmetric tridiagonal matrix; eigenvalues
/// overwrite `d`. `e` holds subdiagonal entries in positions 1..n on input.
fn tql_eigenvalues(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd + f64::MIN_POSITIVE {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::EigNoConvergence(60));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            let sign_r = if g >= 0.0 { r.abs() } else { -r.abs() };
            g = d[m] - d[l] + e[l] / (g + sign_r);
            let (mut s, mut c) = (1.0f64, 1.0f64);
            let mut p = 0.0f64;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                f = 0.0;
                let _ = f;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Cyclic Jacobi eigensolver for symmetric matrices: returns eigenvalues
/// (ascending) and the matching orthonormal eigenvectors as matrix columns.
/// Quadratic per sweep; intended as an independent oracle at small sizes.
pub fn sym_eig_jacobi(a: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    assert_eq!(a.n_rows, a.n_cols);
    let n = a.n_rows;
    let mut m = a.clone();
    let mut v = DenseMatrix::identity(n);
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in 0..i {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        if off.sqrt() <= 1e-14 * (1.0 + m.max_abs()) {
            let mut pairs: Vec<(f64, usize)> = (0..n).map(|i| (m[(i, i)], i)).collect();
            pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
            let vals: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let mut vecs = DenseMatrix::zeros(n, n);
            for (new_col, &(_, old_col)) in pairs.iter().enumerate() {
                for r in 0..n {
                    vecs[(r, new_col)] = v[(r, old_col)];
                }
            }
            return Ok((vals, vecs));
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[(k, p)], m[(k, q)]);
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[(p, k)], m[(q, k)]);
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    Err(Error::EigNoConvergence(60))
}

/// Generalized symmetric eigenvalues of S x = lambda T x with T positive
/// definite, ascending, via congruence reduction with the Cholesky factor
/// of T.
pub fn sym_gen_eig(s: &DenseMatrix, t: &DenseMatrix) -> Result<Vec<f64>> {
    if s.n_rows != t.n_rows || s.n_cols != t.n_cols || s.n_rows != s.n_cols {
        return Err(Error::DimensionMismatch {
            expected: t.n_rows,
            got: s.n_rows,
        });
    }
    let scale = s.max_abs();
    if scale > 0.0 && s.asymmetry() > 1e-12 * scale {
        return Err(Error::InvalidStructure("S is not symmetric".into()));
    }
    let chol = t.cholesky()?;
    let c = chol.congruence_reduce(s);
    c.sym_eigenvalues()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(seed: u64, n: usize) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = rng.gen_range(-1.0..1.0);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    fn random_spd(seed: u64, n: usize) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut b = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                b[(i, j)] = rng.gen_range(-1.0..1.0);
            }
        }
        let mut m = b.matmul(&b.transpose());
        for i in 0..n {
            m[(i, i)] += n as f64;
        }
        m
    }

    #[test]
    fn lu_solves_and_transposes() {
        let a = DenseMatrix::from_rows(&[&[2.0, 1.0, 0.0], &[1.0, 3.0, 1.0], &[0.0, 1.0, 2.5]]);
        let lu = a.lu().unwrap();
        let b = vec![1.0, 2.0, 3.0];
        let x = lu.solve(&b);
        let r = a.matvec(&x);
        for i in 0..3 {
            assert!((r[i] - b[i]).abs() < 1e-12);
        }
        let xt = lu.solve_transpose(&b);
        let rt = a.transpose().matvec(&xt);
        for i in 0..3 {
            assert!((rt[i] - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn lu_handles_pivoting_on_random_systems() {
        // regression: solve once interleaved the permutation with the
        // forward sweep, which is wrong for full-row pivoted storage
        for n in [8usize, 20, 72, 100] {
            let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
            let mut a = DenseMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    a[(i, j)] = rng.gen_range(-1.0..1.0);
                }
            }
            let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
            let lu = a.lu().unwrap();
            let x = lu.solve(&b);
            let r: Vec<f64> = a.matvec(&x).iter().zip(&b).map(|(p, q)| p - q).collect();
            assert!(r.iter().all(|v| v.abs() < 1e-9), "n={n}");
            let xt = lu.solve_transpose(&b);
            let rt: Vec<f64> = a
                .transpose()
                .matvec(&xt)
                .iter()
                .zip(&b)
                .map(|(p, q)| p - q)
                .collect();
            assert!(rt.iter().all(|v| v.abs() < 1e-9), "n={n} transpose");
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = DenseMatrix::from_rows(&[&[1.0, 2.0], &[2.0, 1.0]]);
        assert!(matches!(
            a.cholesky(),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn eigenvalues_of_known_matrix() {
        // diag(1,2) in a rotated basis still has eigenvalues {1, 2}
        let a = DenseMatrix::from_rows(&[&[1.5, 0.5], &[0.5, 1.5]]);
        let ev = a.sym_eigenvalues().unwrap();
        assert!((ev[0] - 1.0).abs() < 1e-13);
        assert!((ev[1] - 2.0).abs() < 1e-13);
    }

    #[test]
    fn ql_matches_jacobi_oracle() {
        for seed in 0..5u64 {
            let a = random_sym(seed, 24);
            let ev = a.sym_eigenvalues().unwrap();
            let (jv, _) = sym_eig_jacobi(&a).unwrap();
            for (x, y) in ev.iter().zip(&jv) {
                assert!((x - y).abs() < 1e-10, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn jacobi_residuals_are_small() {
        let a = random_sym(9, 16);
        let (vals, vecs) = sym_eig_jacobi(&a).unwrap();
        for (j, &lam) in vals.iter().enumerate() {
            let x: Vec<f64> = (0..16).map(|i| vecs[(i, j)]).collect();
            let ax = a.matvec(&x);
            for i in 0..16 {
                assert!((ax[i] - lam * x[i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn gen_eig_trivial_cases() {
        let t = random_spd(1, 10);
        let ev = sym_gen_eig(&t, &t).unwrap();
        for v in ev {
            assert!((v - 1.0).abs() < 1e-10);
        }
        let s = DenseMatrix::from_rows(&[&[1.0, 0.0], &[0.0, 2.0]]);
        let t = DenseMatrix::from_rows(&[&[2.0, 0.0], &[0.0, 1.0]]);
        let ev = sym_gen_eig(&s, &t).unwrap();
        assert!((ev[0] - 0.5).abs() < 1e-14);
        assert!((ev[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gen_eig_residual_oracle() {
        // Check values via back-transformed Jacobi eigenvectors of the
        // reduced matrix: ||S x - lambda T x|| <= 1e-10 ||S||.
        let n = 14;
        let s = random_spd(21, n);
        let t = random_spd(22, n);
        let vals = sym_gen_eig(&s, &t).unwrap();
        let chol = t.cholesky().unwrap();
        let c = chol.congruence_reduce(&s);
        let (jvals, jvecs) = sym_eig_jacobi(&c).unwrap();
        let snorm = s.max_abs() * n as f64;
        for (j, &lam) in jvals.iter().enumerate() {
            assert!((lam - vals[j]).abs() < 1e-9 * (1.0 + lam.abs()));
            let mut x: Vec<f64> = (0..n).map(|i| jvecs[(i, j)]).collect();
            chol.solve_lower_transpose_inplace(&mut x);
            let sx = s.matvec(&x);
            let tx = t.matvec(&x);
            for i in 0..n {
                assert!((sx[i] - lam * tx[i]).abs() <= 1e-10 * snorm);
            }
        }
    }

    #[test]
    fn gen_eig_congruence_invariance() {
        let n = 9;
        let s = random_spd(31, n);
        let t = random_spd(32, n);
        let base = sym_gen_eig(&s, &t).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut x = DenseMatrix::identity(n);
        for i in 0..n {
            for j in 0..n {
                x[(i, j)] += 0.3 * rng.gen_range(-1.0..1.0);
            }
        }
        let xt = x.transpose();
        let s2 = xt.matmul(&s.matmul(&x));
        let t2 = xt.matmul(&t.matmul(&x));
        let moved = sym_gen_eig(&s2, &t2).unwrap();
        for (a, b) in base.iter().zip(&moved) {
            assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn gen_eig_requires_spd_second_argument() {
        let s = random_sym(5, 6);
        let t = DenseMatrix::from_rows(&[
            &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            &[0.0, -1.0, 0.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
            &[0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
        ]);
        assert!(matches!(
            sym_gen_eig(&s, &t),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn from_operator_probes_columns() {
        let a = DenseMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let m = DenseMatrix::from_operator(2, |x| a.matvec(x));
        assert_eq!(m, a);
    }
}
