//! Dense brute-force verification of the preconditioning theory.
//!
//! Materializes the interior Schur complement `S_int = C_D + B_D A_D^{-1}
//! B_D^T` and its matched approximation `S_tilde_int`, checks the proved
//! eigenvalue bounds lambda in [1/2, 1] for the pencils (S_int, S_tilde_int)
//! and (S, S_hat), and verifies the mass-block containment bound for the
//! Chebyshev-approximated (1,1)-block. Everything here is dense and guarded
//! to modest sizes; it exists to certify the production solver, not to run
//! inside it.

use crate::fem::SpaceOperators;
use crate::precond::ChebyshevMassSolver;
use crate::sparse::{sym_gen_eig, DenseCholesky, DenseMatrix};
use crate::timesys::{CnBlocks, TimeGrid};
use crate::{Error, Result};
use std::io::Write;

const SIZE_GUARD: usize = 5000;

fn guard(n: usize) -> Result<()> {
    if n > SIZE_GUARD {
        return Err(Error::SizeGuard {
            size: n,
            limit: SIZE_GUARD,
        });
    }
    Ok(())
}

/// Dense interior Schur pencil.
pub struct SchurPair {
    pub s_int: DenseMatrix,
    pub s_tilde_int: DenseMatrix,
    pub n_t: usize,
    pub n_x: usize,
}

fn set_block(dst: &mut DenseMatrix, n_x: usize, bi: usize, bj: usize, blk: &DenseMatrix, s: f64) {
    for r in 0..n_x {
        for c in 0..n_x {
            dst[(bi * n_x + r, bj * n_x + c)] += s * blk[(r, c)];
        }
    }
}

/// X D^{-1} X^T for the block-lower-Toeplitz X whose first column is
/// [first, -2M, +2M, -2M, ...] and D = (tau/2) blkdiag(M). Both the Schur
/// complement factor B_D = Lambda21 T2^{-1} and the matched factor
/// (Lambda21 + M_hat) T2^{-1} have exactly this shape.
fn alternating_toeplitz_normal(
    first: &DenseMatrix,
    mass: &DenseMatrix,
    mass_chol: &DenseCholesky,
    n_t: usize,
    tau: f64,
) -> DenseMatrix {
    let n_x = mass.n_rows();
    let two_m = {
        let mut m2 = mass.clone();
        m2.scale(2.0);
        m2
    };
    // basis id 0 = `first`, id 1 = 2M; column k has sign (-1)^k for k >= 1
    let col_of = |k: usize| -> (f64, usize) {
        if k == 0 {
            (1.0, 0)
        } else if k % 2 == 1 {
            (-1.0, 1)
        } else {
            (1.0, 1)
        }
    };
    let basis = [first, &two_m];
    let ad_inv_scale = 2.0 / tau;
    // P_core[a][b] = basis_a M^{-1} basis_b^T * (2/tau)
    let mut p_core = Vec::new();
    for a in 0..2 {
        let mut row = Vec::new();
        for b in 0..2 {
            let minv_bt = mass_chol.solve_matrix(&basis[b].transpose());
            let mut p = basis[a].matmul(&minv_bt);
            p.scale(ad_inv_scale);
            row.push(p);
        }
        p_core.push(row);
    }
    let mut out = DenseMatrix::zeros(n_t * n_x, n_t * n_x);
    for i in 0..n_t {
        for j in 0..=i {
            let mut acc = DenseMatrix::zeros(n_x, n_x);
            for m in 0..=j {
                let (sa, ia) = col_of(i - m);
                let (sb, ib) = col_of(j - m);
                acc.add_scaled(sa * sb, &p_core[ia][ib]);
            }
            set_block(&mut out, n_x, i, j, &acc, 1.0);
            if i != j {
                let acc_t = acc.transpose();
                set_block(&mut out, n_x, j, i, &acc_t, 1.0);
            }
        }
    }
    out
}

/// Dense B_D = Lambda21 T2^{-1} (first column L+, then alternating -2M/+2M).
fn materialize_b_d(l_plus: &DenseMatrix, mass: &DenseMatrix, n_t: usize) -> DenseMatrix {
    let n_x = mass.n_rows();
    let mut out = DenseMatrix::zeros(n_t * n_x, n_t * n_x);
    for i in 0..n_t {
        for j in 0..=i {
            match i - j {
                0 => set_block(&mut out, n_x, i, j, l_plus, 1.0),
                k if k % 2 == 1 => set_block(&mut out, n_x, i, j, mass, -2.0),
                _ => set_block(&mut out, n_x, i, j, mass, 2.0),
            }
        }
    }
    out
}

/// Materializes S_int and S_tilde_int and validates the algebraic identity
/// S_tilde_int = S_int + (1/sqrt(beta)) (B_D + B_D^T) to 1e-11 relative
/// (two independent construction routes).
pub fn build_s_int(ops: &SpaceOperators, tg: &TimeGrid, beta: f64) -> Result<SchurPair> {
    let n_x = ops.mass.n_rows();
    let n_t = tg.n_t();
    guard(n_t * n_x)?;
    let tau = tg.tau();
    let blocks = CnBlocks::new(ops.mass.clone(), &ops.l_op, tau, beta)?;
    let mass = ops.mass.to_dense();
    let mass_chol = mass.cholesky()?;
    let l_plus = blocks.l_plus.to_dense();

    // S_int = C_D + B_D A_D^{-1} B_D^T
    let mut s_int = alternating_toeplitz_normal(&l_plus, &mass, &mass_chol, n_t, tau);
    let c_d_scale = 0.5 * tau / beta;
    for i in 0..n_t {
        set_block(&mut s_int, n_x, i, i, &mass, c_d_scale);
    }

    // S_tilde_int = (Lambda21 + M_hat) A^{-1} (Lambda21 + M_hat)^T, which in
    // Toeplitz form shares the alternating tail with first block
    // G = L+ + (tau/(2 sqrt(beta))) M
    let shift = 0.5 * tau / beta.sqrt();
    let mut g0 = l_plus.clone();
    g0.add_scaled(shift, &mass);
    let s_tilde_int = alternating_toeplitz_normal(&g0, &mass, &mass_chol, n_t, tau);

    // identity route: S_tilde = S_int + (1/sqrt(beta)) (B_D + B_D^T)
    let b_d = materialize_b_d(&l_plus, &mass, n_t);
    let mut candidate = s_int.clone();
    let inv_sqrt_beta = 1.0 / beta.sqrt();
    candidate.add_scaled(inv_sqrt_beta, &b_d);
    let bdt = b_d.transpose();
    candidate.add_scaled(inv_sqrt_beta, &bdt);
    candidate.add_scaled(-1.0, &s_tilde_int);
    let scale = s_tilde_int.max_abs().max(1.0);
    if candidate.max_abs() > 1e-11 * scale {
        return Err(Error::InvalidStructure(format!(
            "matched Schur identity violated: {:.3e} relative",
            candidate.max_abs() / scale
        )));
    }
    Ok(SchurPair {
        s_int,
        s_tilde_int,
        n_t,
        n_x,
    })
}

/// Result of one eigenvalue-bound check.
#[derive(Debug, Clone)]
pub struct BoundCheck {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub pass: bool,
    pub eigenvalues: Vec<f64>,
}

pub const BOUND_SLACK: f64 = 1e-10;

fn bound_check(eigenvalues: Vec<f64>) -> BoundCheck {
    let lambda_min = *eigenvalues.first().unwrap();
    let lambda_max = *eigenvalues.last().unwrap();
    BoundCheck {
        lambda_min,
        lambda_max,
        pass: lambda_min >= 0.5 - BOUND_SLACK && lambda_max <= 1.0 + BOUND_SLACK,
        eigenvalues,
    }
}

/// Generalized eigenvalues of (S_int, S_tilde_int) and the proved bound
/// lambda in [1/2, 1]. A non-positive-definite S_tilde_int surfaces as an
/// error (it would signal an assembly bug, not a theory failure).
pub fn check_schur_bounds(ops: &SpaceOperators, tg: &TimeGrid, beta: f64) -> Result<BoundCheck> {
    let pair = build_s_int(ops, tg, beta)?;
    let eig = sym_gen_eig(&pair.s_int, &pair.s_tilde_int)?;
    Ok(bound_check(eig))
}

/// Transfer to the transformed pencil: spectra of (S, S_hat) with
/// S = C + B A^{-1} B^T agree with those of (S_int, S_tilde_int), and obey
/// the same bound.
pub struct TransferCheck {
    pub bound: BoundCheck,
    pub max_spectrum_gap: f64,
    pub spectra_agree: bool,
}

pub fn check_transformed_schur_bounds(
    ops: &SpaceOperators,
    tg: &TimeGrid,
    beta: f64,
) -> Result<TransferCheck> {
    let n_x = ops.mass.n_rows();
    let n_t = tg.n_t();
    guard(n_t * n_x)?;
    let tau = tg.tau();
    let blocks = CnBlocks::new(ops.mass.clone(), &ops.l_op, tau, beta)?;

    // S = C + B A^{-1} B^T from the transformed operators
    let a = blocks.operator_a(n_t).materialize()?;
    let b = blocks.operator_b(n_t).materialize()?;
    let c = blocks.operator_c(n_t).materialize()?;
    let a_chol = a.cholesky()?;
    let bt = b.transpose();
    let ainv_bt = a_chol.solve_matrix(&bt);
    let mut s = b.matmul(&ainv_bt);
    s.add_scaled(1.0, &c);
    // symmetrize the product roundoff
    let st = s.transpose();
    s.add_scaled(1.0, &st);
    s.scale(0.5);

    // S_hat = (Lambda21 + M_hat) A_D^{-1} (Lambda21 + M_hat)^T, block
    // bidiagonal times block diagonal times its transpose
    let mass = ops.mass.to_dense();
    let mass_chol = mass.cholesky()?;
    let shift = 0.5 * tau / beta.sqrt();
    let l_plus = blocks.l_plus.to_dense();
    let l_minus = blocks.l_minus.to_dense();
    let mut g0 = l_plus;
    g0.add_scaled(shift, &mass);
    let mut h0 = l_minus;
    h0.add_scaled(shift, &mass);
    let scale = 2.0 / tau;
    let minv_g0t = mass_chol.solve_matrix(&g0.transpose());
    let minv_h0t = mass_chol.solve_matrix(&h0.transpose());
    let mut gg = g0.matmul(&minv_g0t);
    gg.scale(scale);
    let mut hh = h0.matmul(&minv_h0t);
    hh.scale(scale);
    let mut hg = h0.matmul(&minv_g0t);
    hg.scale(scale);
    let mut s_hat = DenseMatrix::zeros(n_t * n_x, n_t * n_x);
    for i in 0..n_t {
        set_block(&mut s_hat, n_x, i, i, &gg, 1.0);
        if i > 0 {
            set_block(&mut s_hat, n_x, i, i, &hh, 1.0);
            set_block(&mut s_hat, n_x, i, i - 1, &hg, 1.0);
            let gh = hg.transpose();
            set_block(&mut s_hat, n_x, i - 1, i, &gh, 1.0);
        }
    }

    let eig_transformed = sym_gen_eig(&s, &s_hat)?;
    let pair = build_s_int(ops, tg, beta)?;
    let eig_interior = sym_gen_eig(&pair.s_int, &pair.s_tilde_int)?;
    let max_spectrum_gap = eig_transformed
        .iter()
        .zip(&eig_interior)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0f64, f64::max);
    Ok(TransferCheck {
        bound: bound_check(eig_transformed),
        spectra_agree: max_spectrum_gap <= 1e-9,
        max_spectrum_gap,
    })
}

/// Containment of the preconditioned (1,1)-block spectrum in the Chebyshev
/// mass-block spectrum: lambda(A_hat^{-1} A) inside
/// [min lambda(M_c^{-1} M), max lambda(M_c^{-1} M)] with slack.
pub struct ContainmentCheck {
    pub block_range: (f64, f64),
    pub full_range: (f64, f64),
    pub pass: bool,
}

pub const CONTAINMENT_SLACK: f64 = 1e-9;

pub fn check_mass_block_containment(
    ops: &SpaceOperators,
    tg: &TimeGrid,
    cheb_steps: usize,
) -> Result<ContainmentCheck> {
    let n_x = ops.mass.n_rows();
    let n_t = tg.n_t();
    guard(n_t * n_x)?;
    let tau = tg.tau();
    let cheb = ChebyshevMassSolver::new(
        ops.mass.clone(),
        cheb_steps,
        crate::precond::Q1_MASS_EIG_BOUNDS,
    )?;
    // M_c^{-1} by column probing, then lambda(M_c^{-1} M) = gen-eig(M, M_c)
    let mc_inv = DenseMatrix::from_operator(n_x, |v| cheb.apply(v));
    let mc = mc_inv.cholesky()?.solve_matrix(&DenseMatrix::identity(n_x));
    let mass = ops.mass.to_dense();
    let block_eigs = sym_gen_eig(&mass, &symmetrized(mc))?;
    let block_range = (block_eigs[0], *block_eigs.last().unwrap());

    // A_hat^{-1} probed through the preconditioner path, A materialized
    let blocks = CnBlocks::new(ops.mass.clone(), &ops.l_op, tau, 1.0)?;
    let a = blocks.operator_a(n_t).materialize()?;
    let pre = crate::precond::CnPreconditioner::with_exact_blocks(
        ops,
        tau,
        1.0,
        n_t,
        &crate::precond::PrecondConfig {
            cheb_steps,
            ..Default::default()
        },
    )?;
    let ahat_inv = DenseMatrix::from_operator(n_t * n_x, |v| pre.apply_ahat_inv(v).unwrap());
    let ahat = ahat_inv
        .cholesky()?
        .solve_matrix(&DenseMatrix::identity(n_t * n_x));
    let full_eigs = sym_gen_eig(&a, &symmetrized(ahat))?;
    let full_range = (full_eigs[0], *full_eigs.last().unwrap());
    Ok(ContainmentCheck {
        block_range,
        full_range,
        pass: full_range.0 >= block_range.0 - CONTAINMENT_SLACK
            && full_range.1 <= block_range.1 + CONTAINMENT_SLACK,
    })
}

fn symmetrized(m: DenseMatrix) -> DenseMatrix {
    let mt = m.transpose();
    let mut out = m;
    out.add_scaled(1.0, &mt);
    out.scale(0.5);
    out
}

/// Writes the eigenvalue scatter as CSV with columns (beta, index,
/// eigenvalue); deterministic output.
pub fn emit_eig_scatter<W: Write>(results: &[(f64, Vec<f64>)], w: &mut W) -> Result<()> {
    writeln!(w, "beta,index,eigenvalue")?;
    for (beta, eigs) in results {
        for (idx, ev) in eigs.iter().enumerate() {
            writeln!(w, "{beta:e},{idx},{ev:.16e}")?;
        }
    }
    Ok(())
}
