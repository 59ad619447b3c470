//! Dense and sparse kernels: thin SVD, orthonormalization, SPD solves, matrix text I/O.

pub mod dense;
pub mod io;
pub mod solver;
pub mod sparse;
pub mod svd;

pub use dense::{axpy, dot, norm2, DenseCholesky, DenseMatrix};
pub use io::{read_matrix, write_matrix};
pub use solver::{spd_solve, SpdSolver, DEFAULT_REL_TOL};
pub use sparse::{CsrMatrix, SparseSpdMatrix};
pub use svd::{orthonormalize, truncated_svd, Svd, Truncation};
