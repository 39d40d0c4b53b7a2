//! Sparse and block linear-algebra kernels underlying every other module.
//!
//! A single sparse format (CSR over `f64`) carries every space-discretization
//! matrix; block-banded compositions of those matrices form the all-at-once
//! operators; a small dense toolbox backs verification at modest sizes.

mod block;
mod dense;
pub mod vecops;

pub use block::{Band, BlockBandedOperator, Correction, SweepDirection};
pub use dense::{sym_eig_jacobi, sym_gen_eig, DenseCholesky, DenseLu, DenseMatrix};

use crate::{Error, Result};
use std::io::Write;

/// Compressed sparse row matrix over 64-bit reals.
///
/// Invariants: `row_offsets` is non-decreasing with length `n_rows + 1`;
/// within each row the column indices are strictly increasing (which also
/// rules out duplicate entries). Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a CSR matrix from unordered (row, col, value) triplets.
    /// Duplicate coordinates are summed in insertion order, so the result is
    /// deterministic for a fixed triplet sequence.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        for &(r, c, _) in triplets {
            if r >= n_rows || c >= n_cols {
                return Err(Error::InvalidStructure(format!(
                    "triplet ({r}, {c}) outside {n_rows}x{n_cols}"
                )));
            }
        }
        // Counting sort by row keeps insertion order within a row, so the
        // per-entry summation order below is reproducible.
        let mut row_counts = vec![0usize; n_rows + 1];
        for &(r, _, _) in triplets {
            row_counts[r + 1] += 1;
        }
        for i in 0..n_rows {
            row_counts[i + 1] += row_counts[i];
        }
        let mut order = vec![0usize; triplets.len()];
        {
            let mut next = row_counts.clone();
            for (k, &(r, _, _)) in triplets.iter().enumerate() {
                order[next[r]] = k;
                next[r] += 1;
            }
        }
        let mut row_offsets = Vec::with_capacity(n_rows + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for r in 0..n_rows {
            scratch.clear();
            for &k in &order[row_counts[r]..row_counts[r + 1]] {
                let (_, c, v) = triplets[k];
                scratch.push((c, v));
            }
            scratch.sort_by_key(|&(c, _)| c); // stable: preserves insertion order per column
            let mut i = 0;
            while i < scratch.len() {
                let c = scratch[i].0;
                let mut v = scratch[i].1;
                i += 1;
                while i < scratch.len() && scratch[i].0 == c {
                    v += scratch[i].1;
                    i += 1;
                }
                col_indices.push(c);
                values.push(v);
            }
            row_offsets.push(col_indices.len());
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Builds directly from raw CSR arrays, validating the invariants.
    pub fn from_csr(
        n_rows: usize,
        n_cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_offsets.len() != n_rows + 1
            || row_offsets[0] != 0
            || *row_offsets.last().unwrap() != col_indices.len()
            || col_indices.len() != values.len()
        {
            return Err(Error::InvalidStructure("bad CSR arrays".into()));
        }
        for r in 0..n_rows {
            let (lo, hi) = (row_offsets[r], row_offsets[r + 1]);
            if lo > hi {
                return Err(Error::InvalidStructure("row_offsets not monotone".into()));
            }
            for k in lo..hi {
                if col_indices[k] >= n_cols {
                    return Err(Error::InvalidStructure("column index out of range".into()));
                }
                if k > lo && col_indices[k] <= col_indices[k - 1] {
                    return Err(Error::InvalidStructure(
                        "column indices not strictly increasing within a row".into(),
                    ));
                }
            }
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// All-zero matrix (no stored entries).
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            row_offsets: vec![0; n_rows + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// 1x1 matrix, used by scalar surrogate tests.
    pub fn scalar(v: f64) -> Self {
        Self::from_triplets(1, 1, &[(0, 0, v)]).unwrap()
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates stored entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows).flat_map(move |r| {
            (self.row_offsets[r]..self.row_offsets[r + 1])
                .map(move |k| (r, self.col_indices[k], self.values[k]))
        })
    }

    /// y = A x, with a fixed left-to-right summation order per row so two
    /// calls on identical inputs are bitwise equal.
    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_cols);
        debug_assert_eq!(y.len(), self.n_rows);
        for r in 0..self.n_rows {
            let mut acc = 0.0;
            for k in self.row_offsets[r]..self.row_offsets[r + 1] {
                acc += self.values[k] * x[self.col_indices[k]];
            }
            y[r] = acc;
        }
    }

    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_cols {
            return Err(Error::DimensionMismatch {
                expected: self.n_cols,
                got: x.len(),
            });
        }
        let mut y = vec![0.0; self.n_rows];
        self.spmv_into(x, &mut y);
        Ok(y)
    }

    /// y += s * A x (same per-row order as `spmv_into`).
    pub fn spmv_add_scaled(&self, s: f64, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_cols);
        debug_assert_eq!(y.len(), self.n_rows);
        for r in 0..self.n_rows {
            let mut acc = 0.0;
            for k in self.row_offsets[r]..self.row_offsets[r + 1] {
                acc += self.values[k] * x[self.col_indices[k]];
            }
            y[r] += s * acc;
        }
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &c in &self.col_indices {
            counts[c + 1] += 1;
        }
        for i in 0..self.n_cols {
            counts[i + 1] += counts[i];
        }
        let mut row_offsets = counts.clone();
        let mut col_indices = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        let mut next = counts;
        for r in 0..self.n_rows {
            for k in self.row_offsets[r]..self.row_offsets[r + 1] {
                let c = self.col_indices[k];
                col_indices[next[c]] = r;
                values[next[c]] = self.values[k];
                next[c] += 1;
            }
        }
        row_offsets.truncate(self.n_cols + 1);
        Self {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_offsets,
            col_indices,
            values,
        }
    }

    /// Sum of scaled matrices sharing one shape, merged by sorted columns.
    pub fn linear_comb(terms: &[(f64, &SparseMatrix)]) -> Result<Self> {
        let (n_rows, n_cols) = match terms.first() {
            Some((_, a)) => (a.n_rows, a.n_cols),
            None => return Err(Error::InvalidParameter("empty linear combination".into())),
        };
        for (_, a) in terms {
            if a.n_rows != n_rows || a.n_cols != n_cols {
                return Err(Error::DimensionMismatch {
                    expected: n_rows,
                    got: a.n_rows,
                });
            }
        }
        let mut row_offsets = Vec::with_capacity(n_rows + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        let mut cursors = vec![0usize; terms.len()];
        for r in 0..n_rows {
            for (t, (_, a)) in terms.iter().enumerate() {
                cursors[t] = a.row_offsets[r];
            }
            loop {
                let mut c_min = usize::MAX;
                for (t, (_, a)) in terms.iter().enumerate() {
                    if cursors[t] < a.row_offsets[r + 1] {
                        c_min = c_min.min(a.col_indices[cursors[t]]);
                    }
                }
                if c_min == usize::MAX {
                    break;
                }
                let mut v = 0.0;
                for (t, (s, a)) in terms.iter().enumerate() {
                    if cursors[t] < a.row_offsets[r + 1] && a.col_indices[cursors[t]] == c_min {
                        v += s * a.values[cursors[t]];
                        cursors[t] += 1;
                    }
                }
                col_indices.push(c_min);
                values.push(v);
            }
            row_offsets.push(col_indices.len());
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= s;
        }
        out
    }

    /// Skew part (A - A^T)/2; used to enforce exact skew-symmetry of the
    /// assembled convection matrix.
    pub fn skew_part(&self) -> Result<Self> {
        let at = self.transpose();
        Self::linear_comb(&[(0.5, self), (-0.5, &at)])
    }

    /// max |A_ij - A_ji| over stored entries of A and A^T.
    pub fn asymmetry(&self) -> f64 {
        let diff = Self::linear_comb(&[(1.0, self), (-1.0, &self.transpose())]).unwrap();
        diff.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// max |A_ij + A_ji|; zero iff the matrix is exactly skew-symmetric.
    pub fn skew_defect(&self) -> f64 {
        let sum = Self::linear_comb(&[(1.0, self), (1.0, &self.transpose())]).unwrap();
        sum.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n_rows.min(self.n_cols)];
        for r in 0..d.len() {
            for k in self.row_offsets[r]..self.row_offsets[r + 1] {
                if self.col_indices[k] == r {
                    d[r] = self.values[k];
                }
            }
        }
        d
    }

    /// x^T A y without forming intermediates beyond one accumulator.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.n_rows);
        debug_assert_eq!(y.len(), self.n_cols);
        let mut total = 0.0;
        for r in 0..self.n_rows {
            let mut acc = 0.0;
            for k in self.row_offsets[r]..self.row_offsets[r + 1] {
                acc += self.values[k] * y[self.col_indices[k]];
            }
            total += x[r] * acc;
        }
        total
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.n_rows, self.n_cols);
        for (r, c, v) in self.iter() {
            d[(r, c)] = v;
        }
        d
    }

    /// Writes MatrixMarket coordinate format (1-based indices).
    pub fn write_matrix_market<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", self.n_rows, self.n_cols, self.nnz())?;
        for (r, c, v) in self.iter() {
            writeln!(w, "{} {} {:.16e}", r + 1, c + 1, v)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn spmv_identity_and_permutation() {
        let id = SparseMatrix::identity(2);
        assert_eq!(id.spmv(&[3.0, -1.0]).unwrap(), vec![3.0, -1.0]);
        let p = SparseMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        assert_eq!(p.spmv(&[2.5, 7.0]).unwrap(), vec![7.0, 2.5]);
    }

    #[test]
    fn spmv_dimension_mismatch() {
        let id = SparseMatrix::identity(3);
        assert!(matches!(
            id.spmv(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn duplicate_triplets_are_summed() {
        let a =
            SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 0, 2.0), (1, 1, 4.0)]).unwrap();
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.spmv(&[1.0, 1.0]).unwrap(), vec![3.0, 4.0]);
    }

    fn random_csr(seed: u64, n: usize, fill: f64) -> SparseMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut trips = Vec::new();
        for r in 0..n {
            for c in 0..n {
                if rng.gen::<f64>() < fill {
                    trips.push((r, c, rng.gen_range(-1.0..1.0)));
                }
            }
        }
        SparseMatrix::from_triplets(n, n, &trips).unwrap()
    }

    #[test]
    fn spmv_matches_dense_oracle() {
        // Dense brute force: y_i = sum_j A_ij x_j with independent storage.
        let a = random_csr(42, 10, 0.4);
        let d = a.to_dense();
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let x: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y = a.spmv(&x).unwrap();
        for i in 0..10 {
            let mut acc = 0.0;
            for j in 0..10 {
                acc += d[(i, j)] * x[j];
            }
            assert!((y[i] - acc).abs() <= 1e-14);
        }
    }

    #[test]
    fn spmv_is_bitwise_deterministic() {
        let a = random_csr(3, 20, 0.3);
        let x: Vec<f64> = (0..20).map(|i| (i as f64).sin()).collect();
        let y1 = a.spmv(&x).unwrap();
        let y2 = a.spmv(&x).unwrap();
        assert_eq!(y1, y2);
        for (u, v) in y1.iter().zip(&y2) {
            assert_eq!(u.to_bits(), v.to_bits());
        }
    }

    #[test]
    fn transpose_roundtrip_and_linear_comb() {
        let a = random_csr(11, 8, 0.5);
        let att = a.transpose().transpose();
        assert_eq!(a, att);
        let skew = a.skew_part().unwrap();
        assert_eq!(skew.skew_defect(), 0.0);
        let sym = SparseMatrix::linear_comb(&[(1.0, &a), (-1.0, &skew)]).unwrap();
        assert!(sym.asymmetry() <= 1e-15);
    }

    #[test]
    fn matrix_market_output_format() {
        let a = SparseMatrix::from_triplets(2, 3, &[(0, 0, 1.5), (1, 2, -2.0)]).unwrap();
        let mut buf = Vec::new();
        a.write_matrix_market(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let mut lines = s.lines();
        assert_eq!(
            lines.next().unwrap(),
            "%%MatrixMarket matrix coordinate real general"
        );
        assert_eq!(lines.next().unwrap(), "2 3 2");
        assert!(lines.next().unwrap().starts_with("1 1 1.5"));
        assert!(lines.next().unwrap().starts_with("2 3 -2.0"));
    }

    proptest! {
        #[test]
        fn prop_spmv_agrees_with_dense(seed in 0u64..200, n in 1usize..12) {
            let a = random_csr(seed, n, 0.35);
            let d = a.to_dense();
            let x: Vec<f64> = (0..n).map(|i| ((seed as f64) + i as f64).cos()).collect();
            let y = a.spmv(&x).unwrap();
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..n {
                    acc += d[(i, j)] * x[j];
                }
                prop_assert!((y[i] - acc).abs() <= 1e-13);
            }
        }

        #[test]
        fn prop_transpose_flips_entries(seed in 0u64..100, n in 1usize..10) {
            let a = random_csr(seed, n, 0.4);
            let at = a.transpose();
            let (da, dat) = (a.to_dense(), at.to_dense());
            for i in 0..n {
                for j in 0..n {
                    prop_assert_eq!(da[(i, j)].to_bits(), dat[(j, i)].to_bits());
                }
            }
        }
    }
}
