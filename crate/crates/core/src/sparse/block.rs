//! Block-banded all-at-once operators.
//!
//! The time-coupled systems are block matrices whose blocks are drawn from a
//! handful of distinct sparse space matrices. Instead of storing `n_t` copies
//! we store bands (a shared block plus a scale, repeated along a block
//! diagonal) and sparse position-dependent corrections.

use super::{DenseMatrix, SparseMatrix};
use crate::{Error, Result};
use std::sync::Arc;

/// One repeated band: the block appears at block positions (i, i + offset).
#[derive(Clone)]
pub struct Band {
    pub offset: isize,
    pub block: Arc<SparseMatrix>,
    pub scale: f64,
}

/// A single position-dependent block added on top of the bands.
#[derive(Clone)]
pub struct Correction {
    pub block_row: usize,
    pub block_col: usize,
    pub block: Arc<SparseMatrix>,
    pub scale: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SweepDirection {
    Lower,
    Upper,
}

#[derive(Clone)]
pub struct BlockBandedOperator {
    n_blocks: usize,
    block_size: usize,
    bands: Vec<Band>,
    corrections: Vec<Correction>,
}

impl BlockBandedOperator {
    pub fn new(n_blocks: usize, block_size: usize) -> Self {
        Self {
            n_blocks,
            block_size,
            bands: Vec::new(),
            corrections: Vec::new(),
        }
    }

    pub fn with_band(mut self, offset: isize, block: Arc<SparseMatrix>, scale: f64) -> Self {
        assert_eq!(block.n_rows(), self.block_size);
        assert_eq!(block.n_cols(), self.block_size);
        self.bands.push(Band {
            offset,
            block,
            scale,
        });
        self
    }

    pub fn with_correction(
        mut self,
        block_row: usize,
        block_col: usize,
        block: Arc<SparseMatrix>,
        scale: f64,
    ) -> Self {
        assert_eq!(block.n_rows(), self.block_size);
        assert_eq!(block.n_cols(), self.block_size);
        assert!(block_row < self.n_blocks && block_col < self.n_blocks);
        self.corrections.push(Correction {
            block_row,
            block_col,
            block,
            scale,
        });
        self
    }

    pub fn n_blocks(&self) -> usize {
        self.n_blocks
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn dim(&self) -> usize {
        self.n_blocks * self.block_size
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let mut y = vec![0.0; self.dim()];
        self.apply_into(x, &mut y);
        Ok(y)
    }

    /// y = Op x. Bands are accumulated in stored order, then corrections, so
    /// the result is deterministic.
    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let nb = self.block_size;
        y.fill(0.0);
        for band in &self.bands {
            for i in 0..self.n_blocks {
                let j = i as isize + band.offset;
                if j < 0 || j >= self.n_blocks as isize {
                    continue;
                }
                let j = j as usize;
                band.block.spmv_add_scaled(
                    band.scale,
                    &x[j * nb..(j + 1) * nb],
                    &mut y[i * nb..(i + 1) * nb],
                );
            }
        }
        for corr in &self.corrections {
            let (i, j) = (corr.block_row, corr.block_col);
            corr.block.spmv_add_scaled(
                corr.scale,
                &x[j * nb..(j + 1) * nb],
                &mut y[i * nb..(i + 1) * nb],
            );
        }
    }

    /// The transposed operator, with block transposes taken once up front.
    pub fn transposed(&self) -> Self {
        let bands = self
            .bands
            .iter()
            .map(|b| Band {
                offset: -b.offset,
                block: Arc::new(b.block.transpose()),
                scale: b.scale,
            })
            .collect();
        let corrections = self
            .corrections
            .iter()
            .map(|c| Correction {
                block_row: c.block_col,
                block_col: c.block_row,
                block: Arc::new(c.block.transpose()),
                scale: c.scale,
            })
            .collect();
        Self {
            n_blocks: self.n_blocks,
            block_size: self.block_size,
            bands,
            corrections,
        }
    }

    /// Block forward (lower) or backward (upper) substitution where the
    /// action of each diagonal-block inverse is delegated to `block_solver`
    /// (called with the block row index and the partially reduced residual).
    /// Diagonal bands and diagonal corrections are skipped here: they belong
    /// to the solver. If the solver is exact, `Op x = b` holds exactly.
    pub fn block_tri_solve<F>(
        &self,
        b: &[f64],
        mut block_solver: F,
        direction: SweepDirection,
    ) -> Result<Vec<f64>>
    where
        F: FnMut(usize, &[f64]) -> Vec<f64>,
    {
        if b.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: b.len(),
            });
        }
        for band in &self.bands {
            let bad = match direction {
                SweepDirection::Lower => band.offset > 0,
                SweepDirection::Upper => band.offset < 0,
            };
            if bad {
                return Err(Error::NotTriangular {
                    expected: match direction {
                        SweepDirection::Lower => "lower",
                        SweepDirection::Upper => "upper",
                    },
                });
            }
        }
        for corr in &self.corrections {
            let bad = match direction {
                SweepDirection::Lower => corr.block_col > corr.block_row,
                SweepDirection::Upper => corr.block_col < corr.block_row,
            };
            if bad {
                return Err(Error::NotTriangular {
                    expected: match direction {
                        SweepDirection::Lower => "lower",
                        SweepDirection::Upper => "upper",
                    },
                });
            }
        }
        let nb = self.block_size;
        let mut x = vec![0.0; self.dim()];
        let order: Vec<usize> = match direction {
            SweepDirection::Lower => (0..self.n_blocks).collect(),
            SweepDirection::Upper => (0..self.n_blocks).rev().collect(),
        };
        let mut r = vec![0.0; nb];
        for &i in &order {
            r.copy_from_slice(&b[i * nb..(i + 1) * nb]);
            for band in &self.bands {
                if band.offset == 0 {
                    continue;
                }
                let j = i as isize + band.offset;
                if j < 0 || j >= self.n_blocks as isize {
                    continue;
                }
                let j = j as usize;
                band.block
                    .spmv_add_scaled(-band.scale, &x[j * nb..(j + 1) * nb], &mut r);
            }
            for corr in &self.corrections {
                if corr.block_row != i || corr.block_col == i {
                    continue;
                }
                let j = corr.block_col;
                corr.block
                    .spmv_add_scaled(-corr.scale, &x[j * nb..(j + 1) * nb], &mut r);
            }
            let xi = block_solver(i, &r);
            assert_eq!(xi.len(), nb);
            x[i * nb..(i + 1) * nb].copy_from_slice(&xi);
        }
        Ok(x)
    }

    /// Dense equivalent, guarded to verification sizes.
    pub fn materialize(&self) -> Result<DenseMatrix> {
        const LIMIT: usize = 5000;
        if self.dim() > LIMIT {
            return Err(Error::SizeGuard {
                size: self.dim(),
                limit: LIMIT,
            });
        }
        let nb = self.block_size;
        let mut d = DenseMatrix::zeros(self.dim(), self.dim());
        let mut add_block = |bi: usize, bj: usize, block: &SparseMatrix, scale: f64| {
            for (r, c, v) in block.iter() {
                d[(bi * nb + r, bj * nb + c)] += scale * v;
            }
        };
        for band in &self.bands {
            for i in 0..self.n_blocks {
                let j = i as isize + band.offset;
                if j < 0 || j >= self.n_blocks as isize {
                    continue;
                }
                add_block(i, j as usize, &band.block, band.scale);
            }
        }
        for corr in &self.corrections {
            add_block(corr.block_row, corr.block_col, &corr.block, corr.scale);
        }
        Ok(d)
    }
}
