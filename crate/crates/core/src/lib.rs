//! Randomized block row-access solvers for inconsistent least-squares
//! problems: randomized block Kaczmarz (RBK), its Tikhonov-regularized
//! variant ReBlocK and minibatch SGD, unified through the mass-matrix
//! iteration `x' = x + A_S^T M(A_S) (b_S - A_S x)`, together with exact and
//! Monte Carlo oracles for the limits and rates these iterations obey.

pub mod error;
pub mod linalg;
pub mod oracle;
pub mod problem;
pub mod rng;
pub mod samplers;
pub mod solvers;

pub use error::{Error, Result};
pub use linalg::{DenseMatrix, DenseVector};
