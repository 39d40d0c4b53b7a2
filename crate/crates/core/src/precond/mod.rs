//! Block-diagonal preconditioners for the all-at-once saddle systems.
//!
//! The (1,1)-block approximation inverts `T1 A_D T1^T` with block
//! substitutions for the transforms and Chebyshev semi-iteration for the mass
//! blocks. The Schur complement approximation follows the matching strategy:
//! `S_hat = (Lambda21 + M_hat) A_D^{-1} (Lambda21 + M_hat)^T`, applied by
//! block-forward/backward substitution whose diagonal blocks
//! `G = L+ + (tau / (2 sqrt(beta))) M` are approximated by a fixed number of
//! multigrid V-cycles (or exact factorizations on small verification
//! instances). The backward Euler baseline uses the xi-perturbed variant.

mod chebyshev;
mod multigrid;

pub use chebyshev::{ChebyshevMassSolver, Q1_MASS_EIG_BOUNDS};
pub use multigrid::{prolong, restrict, MgConfig, MultigridSolver};

use crate::fem::{SpaceHierarchy, SpaceOperators};
use crate::minres::LinOp;
use crate::sparse::{DenseLu, SparseMatrix};
use crate::timesys::{apply_transform, SaddleSystem, Scheme, Transform};
use crate::{Error, Result};
use std::sync::Arc;

/// Tuning knobs exposed by the CLI.
#[derive(Debug, Clone, Copy)]
pub struct PrecondConfig {
    pub cheb_steps: usize,
    pub mg_cycles: usize,
    pub mg_smoother_sweeps: usize,
    pub mg_damping: f64,
    /// Perturbation of the singular (1,1)-block in the backward Euler
    /// preconditioner.
    pub xi: f64,
}

impl Default for PrecondConfig {
    fn default() -> Self {
        Self {
            cheb_steps: 20,
            mg_cycles: 3,
            mg_smoother_sweeps: 3,
            mg_damping: 0.7,
            xi: 1e-3,
        }
    }
}

impl PrecondConfig {
    fn mg_config(&self) -> MgConfig {
        MgConfig {
            cycles: self.mg_cycles,
            pre_sweeps: self.mg_smoother_sweeps,
            post_sweeps: self.mg_smoother_sweeps,
            damping: self.mg_damping,
        }
    }
}

/// Approximate action of a diagonal Schur block inverse (and its transpose).
enum BlockSolve {
    Multigrid(MultigridSolver),
    Exact(DenseLu),
}

impl BlockSolve {
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        match self {
            BlockSolve::Multigrid(mg) => mg.solve(b),
            BlockSolve::Exact(lu) => lu.solve(b),
        }
    }

    fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        match self {
            BlockSolve::Multigrid(mg) => mg.solve_transpose(b),
            BlockSolve::Exact(lu) => lu.solve_transpose(b),
        }
    }
}

/// Block-diagonal preconditioner for the symmetrized Crank--Nicolson system.
pub struct CnPreconditioner {
    n_t: usize,
    n_x: usize,
    tau: f64,
    cheb: ChebyshevMassSolver,
    mass: Arc<SparseMatrix>,
    /// Diagonal Schur block G = L+ + (tau/(2 sqrt(beta))) M.
    schur_diag: BlockSolve,
    /// Subdiagonal Schur band H = L- + (tau/(2 sqrt(beta))) M.
    off_band: SparseMatrix,
    off_band_t: SparseMatrix,
}

fn cn_schur_bands(
    ops: &SpaceOperators,
    tau: f64,
    beta: f64,
) -> Result<(SparseMatrix, SparseMatrix)> {
    let shift = 0.5 * tau / beta.sqrt();
    // G = (tau/2) L + (1 + shift) M, H = (tau/2) L - (1 - shift) M
    let g = SparseMatrix::linear_comb(&[(0.5 * tau, &ops.l_op), (1.0 + shift, &ops.mass)])?;
    let h = SparseMatrix::linear_comb(&[(0.5 * tau, &ops.l_op), (shift - 1.0, &ops.mass)])?;
    Ok((g, h))
}

impl CnPreconditioner {
    /// Production setup: multigrid V-cycles for the Schur diagonal blocks.
    pub fn new(
        hierarchy: &SpaceHierarchy,
        tau: f64,
        beta: f64,
        n_t: usize,
        config: &PrecondConfig,
    ) -> Result<Self> {
        let ops = hierarchy.finest();
        let shift = 0.5 * tau / beta.sqrt();
        let mg = MultigridSolver::new(hierarchy, 0.5 * tau, 1.0 + shift, config.mg_config())?;
        Self::build(ops, tau, beta, n_t, config, BlockSolve::Multigrid(mg))
    }

    /// Verification setup: exact dense factorizations of the Schur diagonal
    /// blocks in place of V-cycles.
    pub fn with_exact_blocks(
        ops: &SpaceOperators,
        tau: f64,
        beta: f64,
        n_t: usize,
        config: &PrecondConfig,
    ) -> Result<Self> {
        let (g, _) = cn_schur_bands(ops, tau, beta)?;
        let lu = g.to_dense().lu()?;
        Self::build(ops, tau, beta, n_t, config, BlockSolve::Exact(lu))
    }

    fn build(
        ops: &SpaceOperators,
        tau: f64,
        beta: f64,
        n_t: usize,
        config: &PrecondConfig,
        schur_diag: BlockSolve,
    ) -> Result<Self> {
        if n_t == 0 {
            return Err(Error::InvalidParameter("n_t must be >= 1".into()));
        }
        let (_, h) = cn_schur_bands(ops, tau, beta)?;
        let cheb =
            ChebyshevMassSolver::new(ops.mass.clone(), config.cheb_steps, Q1_MASS_EIG_BOUNDS)?;
        Ok(Self {
            n_t,
            n_x: ops.mass.n_rows(),
            tau,
            cheb,
            mass: ops.mass.clone(),
            schur_diag,
            off_band_t: h.transpose(),
            off_band: h,
        })
    }

    fn half(&self) -> usize {
        self.n_t * self.n_x
    }

    /// A_hat^{-1} = T1^{-T} A_D_hat^{-1} T1^{-1} with Chebyshev mass solves
    /// scaled by 2/tau.
    pub fn apply_ahat_inv(&self, r: &[f64]) -> Result<Vec<f64>> {
        if r.len() != self.half() {
            return Err(Error::DimensionMismatch {
                expected: self.half(),
                got: r.len(),
            });
        }
        let w = apply_transform(Transform::T1Inv, self.n_x, r)?;
        let mut z = vec![0.0; w.len()];
        let scale = 2.0 / self.tau;
        for i in 0..self.n_t {
            let xi = self.cheb.apply(&w[i * self.n_x..(i + 1) * self.n_x]);
            for (k, v) in xi.into_iter().enumerate() {
                z[i * self.n_x + k] = scale * v;
            }
        }
        // T1^{-T} = T2^{-1}
        apply_transform(Transform::T2Inv, self.n_x, &z)
    }

    /// S_hat^{-1} = (Lambda21 + M_hat)^{-T} A_D (Lambda21 + M_hat)^{-1}:
    /// block-forward substitution, exact block-diagonal mass scaling, then
    /// block-backward substitution on the transpose.
    pub fn apply_shat_inv(&self, r: &[f64]) -> Result<Vec<f64>> {
        if r.len() != self.half() {
            return Err(Error::DimensionMismatch {
                expected: self.half(),
                got: r.len(),
            });
        }
        let (n_t, n_x) = (self.n_t, self.n_x);
        let mut fwd = vec![0.0; r.len()];
        let mut buf = vec![0.0; n_x];
        for i in 0..n_t {
            buf.copy_from_slice(&r[i * n_x..(i + 1) * n_x]);
            if i > 0 {
                self.off_band
                    .spmv_add_scaled(-1.0, &fwd[(i - 1) * n_x..i * n_x], &mut buf);
            }
            let xi = self.schur_diag.solve(&buf);
            fwd[i * n_x..(i + 1) * n_x].copy_from_slice(&xi);
        }
        // A_D = (tau/2) blkdiag(M), applied exactly
        let mut mid = vec![0.0; r.len()];
        for i in 0..n_t {
            self.mass.spmv_add_scaled(
                0.5 * self.tau,
                &fwd[i * n_x..(i + 1) * n_x],
                &mut mid[i * n_x..(i + 1) * n_x],
            );
        }
        let mut out = vec![0.0; r.len()];
        for i in (0..n_t).rev() {
            buf.copy_from_slice(&mid[i * n_x..(i + 1) * n_x]);
            if i + 1 < n_t {
                self.off_band_t
                    .spmv_add_scaled(-1.0, &out[(i + 1) * n_x..(i + 2) * n_x], &mut buf);
            }
            let yi = self.schur_diag.solve_transpose(&buf);
            out[i * n_x..(i + 1) * n_x].copy_from_slice(&yi);
        }
        Ok(out)
    }
}

impl LinOp for CnPreconditioner {
    fn dim(&self) -> usize {
        2 * self.half()
    }

    fn apply(&self, r: &[f64]) -> Vec<f64> {
        let h = self.half();
        let mut out = self.apply_ahat_inv(&r[..h]).unwrap();
        out.extend(self.apply_shat_inv(&r[h..]).unwrap());
        out
    }
}

/// Block-diagonal preconditioner for the backward Euler baseline, with the
/// singular (1,1)-block perturbed by xi and the matching
/// S_hat^E = (B^E + M_hat^E) (A_hat^E)^{-1} (B^E + M_hat^E)^T.
pub struct BePreconditioner {
    n_blocks: usize, // n_t + 1
    n_x: usize,
    tau: f64,
    xi: f64,
    cheb: ChebyshevMassSolver,
    mass: Arc<SparseMatrix>,
    /// G^E = L^E + (tau/sqrt(beta)) M for blocks 0..n_t.
    schur_diag_main: BlockSolve,
    /// Last block: L^E + sqrt(xi) (tau/sqrt(beta)) M.
    schur_diag_last: BlockSolve,
}

impl BePreconditioner {
    pub fn new(
        hierarchy: &SpaceHierarchy,
        tau: f64,
        beta: f64,
        n_t: usize,
        config: &PrecondConfig,
    ) -> Result<Self> {
        if n_t == 0 {
            return Err(Error::InvalidParameter("n_t must be >= 1".into()));
        }
        if config.xi <= 0.0 || config.xi > 1.0 {
            return Err(Error::InvalidParameter("xi must be in (0, 1]".into()));
        }
        let ops = hierarchy.finest();
        let shift = tau / beta.sqrt();
        let mg_main = MultigridSolver::new(hierarchy, tau, 1.0 + shift, config.mg_config())?;
        let mg_last = MultigridSolver::new(
            hierarchy,
            tau,
            1.0 + config.xi.sqrt() * shift,
            config.mg_config(),
        )?;
        let cheb =
            ChebyshevMassSolver::new(ops.mass.clone(), config.cheb_steps, Q1_MASS_EIG_BOUNDS)?;
        Ok(Self {
            n_blocks: n_t + 1,
            n_x: ops.mass.n_rows(),
            tau,
            xi: config.xi,
            cheb,
            mass: ops.mass.clone(),
            schur_diag_main: BlockSolve::Multigrid(mg_main),
            schur_diag_last: BlockSolve::Multigrid(mg_last),
        })
    }

    fn half(&self) -> usize {
        self.n_blocks * self.n_x
    }

    /// (A_hat^E)^{-1}: Chebyshev on tau M blocks, last block xi tau M.
    pub fn apply_ahat_inv(&self, r: &[f64]) -> Result<Vec<f64>> {
        if r.len() != self.half() {
            return Err(Error::DimensionMismatch {
                expected: self.half(),
                got: r.len(),
            });
        }
        let mut out = vec![0.0; r.len()];
        for i in 0..self.n_blocks {
            let scale = if i + 1 == self.n_blocks {
                1.0 / (self.xi * self.tau)
            } else {
                1.0 / self.tau
            };
            let xi = self.cheb.apply(&r[i * self.n_x..(i + 1) * self.n_x]);
            for (k, v) in xi.into_iter().enumerate() {
                out[i * self.n_x + k] = scale * v;
            }
        }
        Ok(out)
    }

    fn diag_solve(&self, i: usize, b: &[f64], transpose: bool) -> Vec<f64> {
        let solver = if i + 1 == self.n_blocks {
            &self.schur_diag_last
        } else {
            &self.schur_diag_main
        };
        if transpose {
            solver.solve_transpose(b)
        } else {
            solver.solve(b)
        }
    }

    /// (S_hat^E)^{-1} by sweeps over B^E + M_hat^E (subdiagonal -M).
    pub fn apply_shat_inv(&self, r: &[f64]) -> Result<Vec<f64>> {
        if r.len() != self.half() {
            return Err(Error::DimensionMismatch {
                expected: self.half(),
                got: r.len(),
            });
        }
        let (nb, n_x) = (self.n_blocks, self.n_x);
        let mut fwd = vec![0.0; r.len()];
        let mut buf = vec![0.0; n_x];
        for i in 0..nb {
            buf.copy_from_slice(&r[i * n_x..(i + 1) * n_x]);
            if i > 0 {
                // subdiagonal band is -M
                self.mass
                    .spmv_add_scaled(1.0, &fwd[(i - 1) * n_x..i * n_x], &mut buf);
            }
            let xi = self.diag_solve(i, &buf, false);
            fwd[i * n_x..(i + 1) * n_x].copy_from_slice(&xi);
        }
        let mut mid = vec![0.0; r.len()];
        for i in 0..nb {
            let scale = if i + 1 == nb {
                self.xi * self.tau
            } else {
                self.tau
            };
            self.mass.spmv_add_scaled(
                scale,
                &fwd[i * n_x..(i + 1) * n_x],
                &mut mid[i * n_x..(i + 1) * n_x],
            );
        }
        let mut out = vec![0.0; r.len()];
        for i in (0..nb).rev() {
            buf.copy_from_slice(&mid[i * n_x..(i + 1) * n_x]);
            if i + 1 < nb {
                self.mass
                    .spmv_add_scaled(1.0, &out[(i + 1) * n_x..(i + 2) * n_x], &mut buf);
            }
            let yi = self.diag_solve(i, &buf, true);
            out[i * n_x..(i + 1) * n_x].copy_from_slice(&yi);
        }
        Ok(out)
    }
}

impl LinOp for BePreconditioner {
    fn dim(&self) -> usize {
        2 * self.half()
    }

    fn apply(&self, r: &[f64]) -> Vec<f64> {
        let h = self.half();
        let mut out = self.apply_ahat_inv(&r[..h]).unwrap();
        out.extend(self.apply_shat_inv(&r[h..]).unwrap());
        out
    }
}

/// Builds the preconditioner matching the system's scheme.
pub fn build_preconditioner(
    sys: &SaddleSystem,
    hierarchy: &SpaceHierarchy,
    config: &PrecondConfig,
) -> Result<Box<dyn LinOp>> {
    match sys.scheme {
        Scheme::CrankNicolson => Ok(Box::new(CnPreconditioner::new(
            hierarchy,
            sys.time.tau(),
            sys.beta,
            sys.time.n_t(),
            config,
        )?)),
        Scheme::BackwardEuler => Ok(Box::new(BePreconditioner::new(
            hierarchy,
            sys.time.tau(),
            sys.beta,
            sys.time.n_t(),
            config,
        )?)),
    }
}
