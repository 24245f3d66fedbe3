//! Dense double-precision kernels: Householder QR least squares, Cholesky,
//! SVD, pseudoinverse and Gram products.
//!
//! QR, Cholesky and the one-sided Jacobi SVD are implemented here on
//! row-major storage. The symmetric eigensolver delegates to `nalgebra`.

mod cholesky;
mod decomp;
mod dense;
mod jacobi;
mod qr;

pub use cholesky::{cholesky_solve_spd, Cholesky};
pub use decomp::{
    default_rank_tol, min_nonzero_singular_value, pseudoinverse_apply, qr_lstsq,
    qr_lstsq_with_tol, singular_values, svd, sym_eigen, SvdResult, SymEigen,
};
pub(crate) use decomp::{numerical_rank, thin_svd};
pub use dense::{axpy, dot, DenseMatrix, DenseVector};
pub use qr::HouseholderQr;
