//! Inexact proximal gradient methods for composite problems `f(x) = g(x) + h(x)`
//! where `g` is smooth (possibly non-convex) and `h` is non-smooth (possibly
//! non-convex).
//!
//! The crate is organised bottom-up:
//!
//! - [`numerics`]: dense vectors and matrices, Jacobi and power-iteration SVD.
//! - [`objectives`]: smooth terms (correntropy, masked logistic, square loss).
//! - [`regularizers`]: non-smooth terms (L1, OSCAR, trace Lasso, rank constraint)
//!   with subgradient oracles and an epsilon-subgradient membership check.
//! - [`prox`]: exact and inexact proximal operators. Every inexact result carries a
//!   certified bound on its suboptimality in the proximal subproblem.
//! - [`solvers`]: IPG, AIPG and nmAIPG (and their exact counterparts PG, APG and
//!   nmAPG), producing a full [`solvers::IterationTrace`].

pub mod error;
pub mod numerics;
pub mod objectives;
pub mod prox;
pub mod regularizers;
pub mod solvers;

pub use error::{Error, Result};
pub use numerics::{DenseMatrix, DenseVector, SvdFactors};
