//! Sparse symmetric linear algebra: CSC matrices, Kronecker products, and a
//! simplicial Cholesky factorization with fill-reducing ordering.

mod cholesky;
mod matrix;

pub use cholesky::{cholesky, factor_with, CholeskyFactor, SymbolicFactor};
pub use matrix::{kron, SparseMatrix};
