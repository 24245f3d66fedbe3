use nalgebra::SymmetricEigen;

use super::dense::{DenseMatrix, DenseVector};
use super::jacobi::jacobi_svd;
use super::qr::HouseholderQr;
use crate::error::{Error, Result};

const EIGEN_MAX_ITERS: usize = 10_000;

/// Relative truncation factor used when callers do not supply one:
/// singular values at or below `1e-12 * max(rows, cols) * sigma_max` are zero.
pub fn default_rank_tol(rows: usize, cols: usize) -> f64 {
    1e-12 * rows.max(cols).max(1) as f64
}

/// Full singular value decomposition `M = U diag(s) V^T`.
#[derive(Clone, Debug)]
pub struct SvdResult {
    /// `m x m`, orthonormal columns.
    pub u: DenseMatrix,
    /// Non-increasing, length `min(m, n)`.
    pub singular_values: DenseVector,
    /// `n x n`, orthonormal rows.
    pub vt: DenseMatrix,
}

impl SvdResult {
    pub fn sigma_max(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    /// Number of singular values above `rank_tol * sigma_max`.
    pub fn rank(&self, rank_tol: f64) -> usize {
        numerical_rank(&self.singular_values, rank_tol)
    }
}

pub(crate) fn numerical_rank(sorted_desc: &[f64], rank_tol: f64) -> usize {
    let smax = sorted_desc.first().copied().unwrap_or(0.0);
    if smax <= 0.0 {
        return 0;
    }
    sorted_desc.iter().take_while(|&&s| s > rank_tol * smax).count()
}

/// Thin SVD: `u` is `m x r`, `vt` is `r x n` with `r = min(m, n)`, sorted.
pub(crate) fn thin_svd(m: &DenseMatrix) -> Result<(DenseMatrix, Vec<f64>, DenseMatrix)> {
    if m.is_empty() {
        return Err(Error::dims("svd", "empty matrix"));
    }
    jacobi_svd(m)
}

/// Extends `p x r` orthonormal columns to a `p x p` orthogonal matrix.
fn complete_basis(basis: &DenseMatrix) -> DenseMatrix {
    let (p, r) = basis.shape();
    if r == p {
        return basis.clone();
    }
    let mut full = HouseholderQr::factor_tall(basis).full_q();
    for i in 0..p {
        for j in 0..r {
            full[(i, j)] = basis[(i, j)];
        }
    }
    full
}

pub fn svd(m: &DenseMatrix) -> Result<SvdResult> {
    let (u, sigma, vt) = thin_svd(m)?;
    let u = complete_basis(&u);
    let vt = complete_basis(&vt.transpose()).transpose();
    Ok(SvdResult {
        u,
        singular_values: DenseVector::from_vec(sigma),
        vt,
    })
}

/// `M^+ y`, truncating singular values at or below `rank_tol * sigma_max`.
pub fn pseudoinverse_apply(m: &DenseMatrix, y: &DenseVector, rank_tol: f64) -> Result<DenseVector> {
    if y.len() != m.rows() {
        return Err(Error::dims(
            "pseudoinverse_apply",
            format!("{}x{} matrix, rhs length {}", m.rows(), m.cols(), y.len()),
        ));
    }
    if rank_tol < 0.0 {
        return Err(Error::param("rank_tol must be non-negative"));
    }
    let (u, s, vt) = thin_svd(m)?;
    let rank = numerical_rank(&s, rank_tol);
    let mut x = vec![0.0; m.cols()];
    for j in 0..rank {
        let coef = (0..m.rows()).map(|i| u[(i, j)] * y[i]).sum::<f64>() / s[j];
        super::dense::axpy(coef, vt.row(j), &mut x);
    }
    Ok(DenseVector::from_vec(x))
}

/// Smallest singular value above `rank_tol * sigma_max`; zero for a zero matrix.
pub fn min_nonzero_singular_value(m: &DenseMatrix, rank_tol: f64) -> Result<f64> {
    if !(rank_tol > 0.0 && rank_tol < 1.0) {
        return Err(Error::param("rank_tol must lie in (0, 1)"));
    }
    let (_, s, _) = thin_svd(m)?;
    let rank = numerical_rank(&s, rank_tol);
    Ok(if rank == 0 { 0.0 } else { s[rank - 1] })
}

pub fn singular_values(m: &DenseMatrix) -> Result<Vec<f64>> {
    Ok(thin_svd(m)?.1)
}

/// Minimal-norm least-squares solution `M^+ y` through Householder QR.
///
/// Falls back to a truncated SVD when the triangular factor is numerically
/// singular.
pub fn qr_lstsq(m: &DenseMatrix, y: &DenseVector) -> Result<DenseVector> {
    qr_lstsq_with_tol(m, y, default_rank_tol(m.rows(), m.cols()))
}

pub fn qr_lstsq_with_tol(m: &DenseMatrix, y: &DenseVector, rank_tol: f64) -> Result<DenseVector> {
    let (k, n) = m.shape();
    if m.is_empty() {
        return Err(Error::dims("qr_lstsq", "empty matrix"));
    }
    if y.len() != k {
        return Err(Error::dims(
            "qr_lstsq",
            format!("{k}x{n} matrix, rhs length {}", y.len()),
        ));
    }
    if k <= n {
        // M^T = QR, so M = R^T Q^T and the minimal-norm solution is Q R^{-T} y.
        let qr = HouseholderQr::factor_transpose(m);
        if qr.is_rank_deficient(rank_tol) {
            return pseudoinverse_apply(m, y, rank_tol);
        }
        let z = qr.solve_rt(y);
        Ok(DenseVector::from_vec(qr.apply_q(&z)))
    } else {
        let qr = HouseholderQr::factor_tall(m);
        if qr.is_rank_deficient(rank_tol) {
            return pseudoinverse_apply(m, y, rank_tol);
        }
        let c = qr.apply_qt(y);
        Ok(DenseVector::from_vec(qr.solve_r(&c[..n])))
    }
}

/// Eigendecomposition of a symmetric matrix, eigenvalues non-increasing.
#[derive(Clone, Debug)]
pub struct SymEigen {
    pub values: Vec<f64>,
    /// Column `j` is the eigenvector of `values[j]`.
    pub vectors: DenseMatrix,
}

pub fn sym_eigen(m: &DenseMatrix) -> Result<SymEigen> {
    let (n, c) = m.shape();
    if n != c {
        return Err(Error::dims("sym_eigen", format!("{n}x{c} is not square")));
    }
    if n == 0 {
        return Ok(SymEigen {
            values: vec![],
            vectors: DenseMatrix::zeros(0, 0),
        });
    }
    let mut sym = m.clone();
    sym.symmetrize();
    let eig = SymmetricEigen::try_new(sym.to_nalgebra(), f64::EPSILON, EIGEN_MAX_ITERS)
        .ok_or_else(|| Error::Numeric("symmetric eigendecomposition did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DenseMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(SymEigen { values, vectors })
}

impl SymEigen {
    /// `V f(diag) V^T`
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> DenseMatrix {
        let n = self.values.len();
        let fv: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        let mut out = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let mut s = 0.0;
                for (l, fl) in fv.iter().enumerate() {
                    s += self.vectors[(i, l)] * fl * self.vectors[(j, l)];
                }
                out[(i, j)] = s;
                out[(j, i)] = s;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> DenseVector {
        DenseVector::from_vec(xs.to_vec())
    }

    #[test]
    fn lstsq_identity() {
        let x = qr_lstsq(&DenseMatrix::identity(3), &v(&[1.0, 2.0, 3.0])).unwrap();
        assert!(x.distance(&v(&[1.0, 2.0, 3.0])) < 1e-15);
    }

    #[test]
    fn lstsq_rank_deficient_is_minimal_norm() {
        let m = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]);
        let x = qr_lstsq(&m, &v(&[5.0, 7.0])).unwrap();
        assert!(x.distance(&v(&[5.0, 0.0])) < 1e-14);
    }

    #[test]
    fn lstsq_dimension_mismatch() {
        let err = qr_lstsq(&DenseMatrix::identity(2), &v(&[1.0])).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn svd_of_diagonal() {
        let r = svd(&DenseMatrix::from_diag(&[3.0, 1.0])).unwrap();
        assert!((r.singular_values[0] - 3.0).abs() < 1e-14);
        assert!((r.singular_values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn svd_rank_one_outer_product() {
        let u = [1.0, -2.0, 0.5, 3.0];
        let w = [2.0, 1.0, -1.0];
        let m = DenseMatrix::from_fn(4, 3, |i, j| u[i] * w[j]);
        let r = svd(&m).unwrap();
        let above = r.singular_values.iter().filter(|&&s| s > 1e-12).count();
        assert_eq!(above, 1);
        assert_eq!(r.u.shape(), (4, 4));
        assert_eq!(r.vt.shape(), (3, 3));
    }

    #[test]
    fn pinv_single_equation() {
        let m = DenseMatrix::from_rows(&[vec![1.0, 1.0]]);
        let x = pseudoinverse_apply(&m, &v(&[2.0]), 1e-12).unwrap();
        assert!(x.distance(&v(&[1.0, 1.0])) < 1e-14);
    }

    #[test]
    fn pinv_of_zero_and_identity() {
        let z = DenseMatrix::zeros(3, 2);
        let x = pseudoinverse_apply(&z, &v(&[1.0, -4.0, 2.0]), 1e-12).unwrap();
        assert_eq!(x.as_slice(), &[0.0, 0.0]);
        let y = v(&[0.3, -1.0, 8.0]);
        let x = pseudoinverse_apply(&DenseMatrix::identity(3), &y, 1e-12).unwrap();
        assert!(x.distance(&y) < 1e-14);
    }

    #[test]
    fn min_nonzero_sv_examples() {
        let d = DenseMatrix::from_diag(&[3.0, 1.0, 0.0]);
        assert!((min_nonzero_singular_value(&d, 1e-12).unwrap() - 1.0).abs() < 1e-14);
        let i5 = DenseMatrix::identity(5).scaled(1.0 / 5.0);
        assert!((min_nonzero_singular_value(&i5, 1e-12).unwrap() - 0.2).abs() < 1e-14);
        assert_eq!(min_nonzero_singular_value(&DenseMatrix::zeros(2, 2), 1e-12).unwrap(), 0.0);
        assert!(min_nonzero_singular_value(&d, 0.0).is_err());
    }

    #[test]
    fn sym_eigen_sorted_descending() {
        let m = DenseMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let e = sym_eigen(&m).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-14 && (e.values[1] - 1.0).abs() < 1e-14);
        assert!(e.reconstruct_with(|x| x).sub(&m).max_abs() < 1e-14);
    }
}
