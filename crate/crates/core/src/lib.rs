//! Reflected forward-backward splitting for monotone inclusions
//! `0 ∈ Σ A_i(x) + Σ B_i(x) + Σ C_i(x)`.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Index loops mirror the matrix formulas they implement.
#![allow(clippy::needless_range_loop)]

pub mod blockspace;
pub mod error;
pub mod experiment;
pub mod framework;
pub mod operators;
pub mod presets;
pub mod problems;
pub mod selection;
pub mod structure;

pub use blockspace::{BlockVector, DenseMatrix};
pub use error::{Error, Result};
