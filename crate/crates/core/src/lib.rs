//! First Dirichlet eigenvalues of one-dimensional Sturm-Liouville operators
//! and optimal spectral partitions of the unit interval.

// `!(a < b)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod coefficients;
pub mod error;
pub mod experiments;
pub mod expr;
pub mod gamma;
pub mod optimizer;
pub mod output;
pub mod partition;
pub mod phi;
pub mod quadrature;
pub mod sl_solver;

pub use error::{Error, Result};
