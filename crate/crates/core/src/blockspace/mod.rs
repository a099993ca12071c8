//! Block vectors in `(R^dim)^n` and the small dense linear algebra that acts
//! on them.
//!
//! A scalar matrix `P` acts on a block vector as `P ⊗ Id` without ever
//! materializing the Kronecker product.

mod block;
mod eigen;
mod matrix;

pub use block::{block_apply, weighted_norm_sq, BlockVector};
pub(crate) use block::{block_apply_into, block_apply_transpose_into};
pub use eigen::{
    cholesky, generalized_min_eigenvalue, min_eigenvalue, psd_check, singular_values, spectral_norm, sum_zero_basis,
    symmetric_eigen, top_singular_triple, SingularTriple, SymmetricEigen,
};
pub use matrix::DenseMatrix;
