//! All-at-once solution of time-dependent PDE-constrained optimal control
//! problems (heat control and convection--diffusion control) on the square
//! domain (-1,1)^2.
//!
//! The state/adjoint optimality system is discretized with Q1 finite elements
//! in space and either Crank--Nicolson or backward Euler in time, assembled as
//! one coupled saddle-point system over all time steps, symmetrized by a cheap
//! block transformation, and solved with MINRES under a block-diagonal
//! preconditioner built from Chebyshev semi-iteration (mass blocks) and
//! geometric multigrid (shifted convection--diffusion blocks) around a matched
//! Schur-complement approximation.
//!
//! Module map:
//! - [`sparse`]: CSR matrices, block-banded operators, dense verification
//!   kernels (factorizations, symmetric eigensolvers).
//! - [`fem`]: uniform Q1 grids, mass/stiffness/convection/LPS assembly,
//!   Dirichlet elimination.
//! - [`timesys`]: the all-at-once systems for both time discretizations and
//!   the symmetrizing transform.
//! - [`precond`]: Chebyshev mass solver, geometric multigrid, and the
//!   block-diagonal preconditioners.
//! - [`minres`]: preconditioned MINRES.
//! - [`verify`]: dense spectral verification of the Schur-complement
//!   approximation bounds.
//! - [`bench`]: benchmark problems, experiment driver, report emission.

pub mod bench;
pub mod error;
pub mod fem;
pub mod minres;
pub mod precond;
pub mod sparse;
pub mod timesys;
pub mod verify;

pub use error::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
