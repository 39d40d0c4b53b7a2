//! Preconditioned MINRES for symmetric indefinite systems.
//!
//! Standard two-term Lanczos recurrence with Givens rotations; the
//! preconditioner must be symmetric positive definite. The iteration stops on
//! the relative preconditioned residual norm, which the recurrence tracks for
//! free as |eta|.

use crate::sparse::vecops::{axpy, dot};
use crate::{Error, Result};
use std::time::Instant;

/// Abstract linear operator used for both the system and the preconditioner.
pub trait LinOp {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64]) -> Vec<f64>;
}

/// The identity preconditioner.
pub struct IdentityOp(pub usize);

impl LinOp for IdentityOp {
    fn dim(&self) -> usize {
        self.0
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }
}

impl<F: Fn(&[f64]) -> Vec<f64>> LinOp for (usize, F) {
    fn dim(&self) -> usize {
        self.0
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        (self.1)(x)
    }
}

/// Per-solve record: preconditioned residual history (starting with the
/// initial norm), convergence flag, and wall time of the iteration loop.
#[derive(Debug, Clone)]
pub struct IterationLog {
    pub residuals: Vec<f64>,
    pub converged: bool,
    pub wall_seconds: f64,
}

impl IterationLog {
    pub fn iterations(&self) -> usize {
        self.residuals.len().saturating_sub(1)
    }
}

/// Solves A x = b with MINRES under the SPD preconditioner whose inverse
/// action is `apply_pinv`. Starts from x = 0 and stops when the
/// preconditioned residual norm drops below `rtol` times its initial value,
/// or after `maxit` iterations (returning the best iterate with
/// `converged = false`).
pub fn minres_solve(
    apply_a: &dyn LinOp,
    apply_pinv: &dyn LinOp,
    b: &[f64],
    rtol: f64,
    maxit: usize,
) -> Result<(Vec<f64>, IterationLog)> {
    let n = apply_a.dim();
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.len(),
        });
    }
    if !(0.0..1.0).contains(&rtol) || rtol == 0.0 {
        return Err(Error::InvalidParameter("rtol must be in (0, 1)".into()));
    }
    let start = Instant::now();
    let mut x = vec![0.0; n];

    let mut v = b.to_vec(); // v_1 = b - A x_0
    let mut v_prev = vec![0.0; n];
    let mut z = apply_pinv.apply(&v);
    let gamma_sq = dot(&z, &v);
    if gamma_sq < 0.0 {
        return Err(Error::Breakdown(format!(
            "preconditioner is not positive definite: z^T v = {gamma_sq:e}"
        )));
    }
    let mut gamma = gamma_sq.sqrt();
    let res0 = gamma;
    if res0 == 0.0 {
        return Ok((
            x,
            IterationLog {
                residuals: vec![0.0],
                converged: true,
                wall_seconds: start.elapsed().as_secs_f64(),
            },
        ));
    }
    let mut gamma_prev = 1.0f64;
    let mut eta = gamma;
    let (mut s_prev, mut s_cur) = (0.0f64, 0.0f64);
    let (mut c_prev, mut c_cur) = (1.0f64, 1.0f64);
    let mut w = vec![0.0; n];
    let mut w_prev = vec![0.0; n];
    let mut residuals = vec![res0];
    let mut converged = false;

    for _ in 0..maxit {
        // z holds P^{-1} v for the current Lanczos vector; normalize
        let inv_gamma = 1.0 / gamma;
        for zi in z.iter_mut() {
            *zi *= inv_gamma;
        }
        let az = apply_a.apply(&z);
        let delta = dot(&z, &az);
        // v_{j+1} = A z - (delta/gamma) v - (gamma/gamma_prev) v_prev
        let mut v_next = az;
        axpy(-delta * inv_gamma, &v, &mut v_next);
        axpy(-gamma / gamma_prev, &v_prev, &mut v_next);
        let z_next = apply_pinv.apply(&v_next);
        let gamma_next_sq = dot(&z_next, &v_next);
        if gamma_next_sq < -1e-14 * res0 * res0 {
            return Err(Error::Breakdown(format!(
                "preconditioner produced negative inner product {gamma_next_sq:e}"
            )));
        }
        let gamma_next = gamma_next_sq.max(0.0).sqrt();

        let alpha0 = c_cur * delta - c_prev * s_cur * gamma;
        let alpha1 = (alpha0 * alpha0 + gamma_next * gamma_next).sqrt();
        let alpha2 = s_cur * delta + c_prev * c_cur * gamma;
        let alpha3 = s_prev * gamma;
        if alpha1 == 0.0 {
            return Err(Error::Breakdown(
                "Lanczos breakdown with nonzero residual".into(),
            ));
        }
        c_prev = c_cur;
        s_prev = s_cur;
        c_cur = alpha0 / alpha1;
        s_cur = gamma_next / alpha1;
        // w_{j+1} = (z - alpha3 w_{j-1} - alpha2 w_j) / alpha1
        let mut w_next = z.clone();
        axpy(-alpha3, &w_prev, &mut w_next);
        axpy(-alpha2, &w, &mut w_next);
        for wi in w_next.iter_mut() {
            *wi /= alpha1;
        }
        axpy(c_cur * eta, &w_next, &mut x);
        eta = -s_cur * eta;
        residuals.push(eta.abs());

        w_prev = std::mem::replace(&mut w, w_next);
        v_prev = std::mem::replace(&mut v, v_next);
        z = z_next;
        gamma_prev = std::mem::replace(&mut gamma, gamma_next);

        if eta.abs() <= rtol * res0 {
            converged = true;
            break;
        }
        if gamma == 0.0 {
            // Krylov space exhausted: the residual should be zero
            converged = eta.abs() <= rtol * res0;
            if !converged {
                return Err(Error::Breakdown(
                    "Lanczos space exhausted with nonzero residual".into(),
                ));
            }
            break;
        }
    }
    Ok((
        x,
        IterationLog {
            residuals,
            converged,
            wall_seconds: start.elapsed().as_secs_f64(),
        },
    ))
}
