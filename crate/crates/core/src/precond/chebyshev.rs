//! Chebyshev semi-iteration for mass-matrix solves.
//!
//! A fixed number of steps of Chebyshev acceleration on the diagonally
//! scaled system gives a linear, symmetric positive definite approximation
//! of M^{-1} that is cheap to apply and needs no inner products.

use crate::sparse::SparseMatrix;
use crate::{Error, Result};
use std::sync::Arc;

/// Classical eigenvalue bounds of diag(M)^{-1} M for bilinear quadrilateral
/// mass matrices.
pub const Q1_MASS_EIG_BOUNDS: (f64, f64) = (0.25, 2.25);

pub struct ChebyshevMassSolver {
    mass: Arc<SparseMatrix>,
    inv_diag: Vec<f64>,
    steps: usize,
    theta: f64,
    half_width: f64,
}

impl ChebyshevMassSolver {
    pub fn new(mass: Arc<SparseMatrix>, steps: usize, eig_bounds: (f64, f64)) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidParameter(
                "chebyshev steps must be >= 1".into(),
            ));
        }
        let (lo, hi) = eig_bounds;
        if !(0.0 < lo && lo < hi) {
            return Err(Error::InvalidParameter(format!(
                "invalid eigenvalue bounds ({lo}, {hi})"
            )));
        }
        let diag = mass.diagonal();
        if diag.iter().any(|&d| d <= 0.0) {
            return Err(Error::InvalidParameter(
                "mass matrix has a nonpositive diagonal entry".into(),
            ));
        }
        Ok(Self {
            inv_diag: diag.iter().map(|d| 1.0 / d).collect(),
            mass,
            steps,
            theta: 0.5 * (hi + lo),
            half_width: 0.5 * (hi - lo),
        })
    }

    /// 20 steps on the classical Q1 bounds.
    pub fn with_defaults(mass: Arc<SparseMatrix>) -> Result<Self> {
        Self::new(mass, 20, Q1_MASS_EIG_BOUNDS)
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn n(&self) -> usize {
        self.inv_diag.len()
    }

    /// x ~= M^{-1} b after the fixed number of steps, starting from x = 0.
    /// The map b -> x is linear and symmetric positive definite.
    pub fn apply(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n());
        let n = self.n();
        let scaled_apply = |v: &[f64], out: &mut Vec<f64>| {
            self.mass.spmv_into(v, out);
            for (o, id) in out.iter_mut().zip(&self.inv_diag) {
                *o *= id;
            }
        };
        let mut x = vec![0.0; n];
        // r = D^{-1} b - (D^{-1} M) x with x = 0
        let mut r: Vec<f64> = b
            .iter()
            .zip(&self.inv_diag)
            .map(|(bi, id)| bi * id)
            .collect();
        let sigma1 = self.theta / self.half_width;
        let mut rho = 1.0 / sigma1;
        let mut d: Vec<f64> = r.iter().map(|ri| ri / self.theta).collect();
        let mut ad = vec![0.0; n];
        for k in 0..self.steps {
            for (xi, di) in x.iter_mut().zip(&d) {
                *xi += di;
            }
            if k + 1 == self.steps {
                break;
            }
            scaled_apply(&d, &mut ad);
            for (ri, adi) in r.iter_mut().zip(&ad) {
                *ri -= adi;
            }
            let rho_next = 1.0 / (2.0 * sigma1 - rho);
            let coeff_d = rho_next * rho;
            let coeff_r = 2.0 * rho_next / self.half_width;
            for i in 0..n {
                d[i] = coeff_d * d[i] + coeff_r * r[i];
            }
            rho = rho_next;
        }
        x
    }
}
