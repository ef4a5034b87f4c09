//! Solver for the time-fractional Black–Scholes equation on nonuniform time meshes.
//!
//! The Caputo derivative is discretised with the nonuniform Alikhanov formula at the
//! off-set points `t_{n-θ}`, `θ = α/2`, and its history part is accelerated with a
//! sum-of-exponentials (SOE) approximation of the kernel `ω_{1-α}`. In space a compact
//! three-point scheme reaches fourth order by applying the averaging operator `H` to
//! the non-spatial terms. Each time level costs one tridiagonal solve.
//!
//! Module map:
//!
//! - [`soe`]: SOE construction, evaluation and certification.
//! - [`mesh`]: graded / user-supplied temporal meshes and the uniform spatial grid.
//! - [`caputo`]: local and history coefficients, kernel rows, the fast history
//!   recursion and complementary kernels.
//! - [`spatial`]: tridiagonal matrices and the compact operator.
//! - [`problem`]: the three formulation levels and built-in presets.
//! - [`stepper`]: the fully discrete time loop.
//! - [`analysis`]: error norms, convergence studies and property sweeps.
//! - [`cli`]: the `tfbs` command-line front end.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod caputo;
pub mod cli;
mod error;
pub mod mesh;
pub mod problem;
pub mod quadrature;
pub mod soe;
pub mod spatial;
pub mod special;
pub mod stepper;

pub use error::{Error, Result};
