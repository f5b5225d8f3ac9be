//! Generalized weak Galerkin discretization of `-div(a grad u) = f` on the
//! unit square with Dirichlet data, plus the error norms and convergence
//! studies used to validate it.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod assembly;
pub mod error;
pub mod field;
pub mod mesh;
pub mod polybasis;
pub mod verify;
pub mod weakspace;

pub use error::{Error, Result};
