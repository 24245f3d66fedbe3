use crate::error::{Error, Result};
use crate::linalg::{default_rank_tol, qr_lstsq, singular_values, sym_eigen, DenseMatrix, DenseVector};
use crate::problem::LeastSquaresProblem;

/// Minimal-norm minimizer of `||W̄^{1/2} (A x - b)||` and its residual
/// `b - A x`, through QR on `W̄^{1/2} A`. Negative eigenvalues of `W̄`
/// (roundoff only) are clamped to zero.
pub fn weighted_solution(problem: &LeastSquaresProblem, w_bar: &DenseMatrix) -> Result<(DenseVector, DenseVector)> {
    let m = problem.m();
    if w_bar.shape() != (m, m) {
        return Err(Error::dims(
            "weighted_solution",
            format!("W̄ is {}x{}, expected {m}x{m}", w_bar.rows(), w_bar.cols()),
        ));
    }
    let root = sym_eigen(w_bar)?.reconstruct_with(|v| v.max(0.0).sqrt());
    let wa = root.matmul(&problem.a)?;
    let wb = root.mul_vec(&problem.b);
    let x = qr_lstsq(&wa, &wb)?;
    let r = problem.a.residual(&x, &problem.b);
    Ok((x, r))
}

/// Numerical rank of `A` under the default truncation rule.
pub fn matrix_rank(a: &DenseMatrix) -> Result<usize> {
    let s = singular_values(a)?;
    Ok(crate::linalg::numerical_rank(&s, default_rank_tol(a.rows(), a.cols())))
}

/// `P̄^+ ḡ` truncated to the leading `rank` eigenpairs of `P̄`.
///
/// Since `P̄ = A^T W̄ A` and `ḡ = A^T W̄ b`, this solves the weighted normal
/// equations while never forming `W̄^{1/2}`, which keeps full accuracy when
/// `W̄` is badly conditioned.
pub fn limit_solution(p_bar: &DenseMatrix, g_bar: &DenseVector, rank: usize) -> Result<DenseVector> {
    let n = p_bar.rows();
    if g_bar.len() != n {
        return Err(Error::dims("limit_solution", "ḡ length differs from P̄ size"));
    }
    let eig = sym_eigen(p_bar)?;
    let mut x = DenseVector::zeros(n);
    for l in 0..rank.min(n) {
        let lam = eig.values[l];
        if lam <= 0.0 {
            break;
        }
        let v = DenseVector::from_vec((0..n).map(|i| eig.vectors[(i, l)]).collect());
        x.axpy(v.dot(g_bar) / lam, &v);
    }
    Ok(x)
}

/// `sigma_min^+(P̄)` with the rank taken from `A`, so roundoff-level
/// eigenvalues outside `range(A^T)` are never mistaken for the minimum.
pub fn convergence_alpha(p_bar: &DenseMatrix, rank: usize) -> Result<f64> {
    if rank == 0 {
        return Ok(0.0);
    }
    let eig = sym_eigen(p_bar)?;
    Ok(eig.values[rank.min(eig.values.len()) - 1])
}

/// `lambda_max / lambda_min` of a symmetric PSD matrix; infinite when it is
/// numerically singular.
pub fn condition_number_psd(w: &DenseMatrix) -> Result<f64> {
    let eig = sym_eigen(w)?;
    let max = eig.values.first().copied().unwrap_or(0.0);
    let min = eig.values.last().copied().unwrap_or(0.0);
    if max <= 0.0 || min <= max * f64::EPSILON * w.rows() as f64 {
        return Ok(f64::INFINITY);
    }
    Ok(max / min)
}
