//! Geometric multigrid for the shifted convection--diffusion blocks.
//!
//! V-cycles over the nested uniform grids (levels 2..l) with damped Jacobi
//! smoothing (omega = 0.7, three sweeps each side: robust up to the
//! strongest benchmark convection), bilinear interpolation, full-weighting
//! restriction (its scaled adjoint), re-discretized coarse operators, and a
//! dense direct solve on the coarsest level. Equal pre- and post-smoothing together with R = P^T / 4
//! makes the V-cycle for G^T the exact transpose of the V-cycle for G, which
//! the Schur sweeps rely on for preconditioner symmetry.

use crate::fem::{Grid2D, SpaceHierarchy};
use crate::sparse::{DenseLu, SparseMatrix};
use crate::Result;
use std::sync::Arc;

#[derive(Debug, Clone, Copy)]
pub struct MgConfig {
    pub cycles: usize,
    pub pre_sweeps: usize,
    pub post_sweeps: usize,
    pub damping: f64,
}

impl Default for MgConfig {
    fn default() -> Self {
        Self {
            cycles: 3,
            pre_sweeps: 3,
            post_sweeps: 3,
            damping: 0.7,
        }
    }
}

struct MgLevel {
    grid: Arc<Grid2D>,
    op: SparseMatrix,
    op_t: SparseMatrix,
    inv_diag: Vec<f64>,
}

/// Fixed-cycle V-cycle solver for G = l_coef * L + m_coef * M, re-assembled
/// on every level of the hierarchy.
pub struct MultigridSolver {
    levels: Vec<MgLevel>, // [0] = coarsest
    coarse_lu: DenseLu,
    config: MgConfig,
}

impl MultigridSolver {
    pub fn new(
        hierarchy: &SpaceHierarchy,
        l_coef: f64,
        m_coef: f64,
        config: MgConfig,
    ) -> Result<Self> {
        let mut levels = Vec::new();
        for ops in hierarchy.levels() {
            let op = SparseMatrix::linear_comb(&[(l_coef, &ops.l_op), (m_coef, &ops.mass)])?;
            let op_t = op.transpose();
            let inv_diag: Vec<f64> = op.diagonal().iter().map(|d| 1.0 / d).collect();
            levels.push(MgLevel {
                grid: ops.grid.clone(),
                op,
                op_t,
                inv_diag,
            });
        }
        let coarse_lu = levels[0].op.to_dense().lu()?;
        Ok(Self {
            levels,
            coarse_lu,
            config,
        })
    }

    pub fn finest_dim(&self) -> usize {
        self.levels.last().unwrap().grid.n_interior()
    }

    pub fn config(&self) -> MgConfig {
        self.config
    }

    /// Fixed number of V-cycles from a zero initial guess; the induced map
    /// is linear in b.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; b.len()];
        for _ in 0..self.config.cycles {
            self.cycle(self.levels.len() - 1, b, &mut x, false);
        }
        x
    }

    /// Same fixed-cycle solve for G^T.
    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; b.len()];
        for _ in 0..self.config.cycles {
            self.cycle(self.levels.len() - 1, b, &mut x, true);
        }
        x
    }

    /// One V-cycle on the finest level starting from `x0`.
    pub fn vcycle(&self, b: &[f64], x0: &[f64]) -> Vec<f64> {
        let mut x = x0.to_vec();
        self.cycle(self.levels.len() - 1, b, &mut x, false);
        x
    }

    pub fn apply_fine(&self, x: &[f64]) -> Vec<f64> {
        self.levels.last().unwrap().op.spmv(x).unwrap()
    }

    fn smooth(&self, level: &MgLevel, transpose: bool, b: &[f64], x: &mut [f64], sweeps: usize) {
        let op = if transpose { &level.op_t } else { &level.op };
        let n = x.len();
        let mut r = vec![0.0; n];
        for _ in 0..sweeps {
            op.spmv_into(x, &mut r);
            for i in 0..n {
                x[i] += self.config.damping * level.inv_diag[i] * (b[i] - r[i]);
            }
        }
    }

    fn cycle(&self, idx: usize, b: &[f64], x: &mut [f64], transpose: bool) {
        if idx == 0 {
            let sol = if transpose {
                self.coarse_lu.solve_transpose(b)
            } else {
                self.coarse_lu.solve(b)
            };
            x.copy_from_slice(&sol);
            return;
        }
        let level = &self.levels[idx];
        self.smooth(level, transpose, b, x, self.config.pre_sweeps);
        // coarse-grid correction
        let op = if transpose { &level.op_t } else { &level.op };
        let mut r = op.spmv(x).unwrap();
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let coarse_grid = &self.levels[idx - 1].grid;
        let rc = restrict(&level.grid, coarse_grid, &r);
        let mut ec = vec![0.0; rc.len()];
        self.cycle(idx - 1, &rc, &mut ec, transpose);
        let ef = prolong(coarse_grid, &level.grid, &ec);
        for (xi, ei) in x.iter_mut().zip(&ef) {
            *xi += ei;
        }
        self.smooth(level, transpose, b, x, self.config.post_sweeps);
    }
}

/// Bilinear interpolation of interior coarse values to the fine grid;
/// Dirichlet boundary values are zero.
pub fn prolong(coarse: &Grid2D, fine: &Grid2D, xc: &[f64]) -> Vec<f64> {
    assert_eq!(xc.len(), coarse.n_interior());
    let mut xf = vec![0.0; fine.n_interior()];
    let cval = |ix: isize, iy: isize| -> f64 {
        if ix < 0 || iy < 0 {
            return 0.0;
        }
        match coarse.interior_dof(ix as usize, iy as usize) {
            Some(dof) => xc[dof],
            None => 0.0,
        }
    };
    for (dof, &(ix, iy)) in fine.interior_coords().iter().enumerate() {
        let (cx, cy) = ((ix / 2) as isize, (iy / 2) as isize);
        xf[dof] = match (ix % 2, iy % 2) {
            (0, 0) => cval(cx, cy),
            (1, 0) => 0.5 * (cval(cx, cy) + cval(cx + 1, cy)),
            (0, 1) => 0.5 * (cval(cx, cy) + cval(cx, cy + 1)),
            _ => 0.25 * (cval(cx, cy) + cval(cx + 1, cy) + cval(cx, cy + 1) + cval(cx + 1, cy + 1)),
        };
    }
    xf
}

/// Full-weighting restriction, the adjoint of `prolong` scaled by 1/4.
pub fn restrict(fine: &Grid2D, coarse: &Grid2D, rf: &[f64]) -> Vec<f64> {
    assert_eq!(rf.len(), fine.n_interior());
    let fval = |ix: usize, iy: usize| -> f64 {
        match fine.interior_dof(ix, iy) {
            Some(dof) => rf[dof],
            None => 0.0,
        }
    };
    let mut rc = vec![0.0; coarse.n_interior()];
    for (dof, &(cx, cy)) in coarse.interior_coords().iter().enumerate() {
        let (fx, fy) = (2 * cx, 2 * cy);
        let center = fval(fx, fy);
        let edges = fval(fx - 1, fy) + fval(fx + 1, fy) + fval(fx, fy - 1) + fval(fx, fy + 1);
        let corners = fval(fx - 1, fy - 1)
            + fval(fx + 1, fy - 1)
            + fval(fx - 1, fy + 1)
            + fval(fx + 1, fy + 1);
        rc[dof] = 0.25 * center + 0.125 * edges + 0.0625 * corners;
    }
    rc
}
