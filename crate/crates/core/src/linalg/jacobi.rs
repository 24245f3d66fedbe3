//! One-sided Jacobi SVD. Tall inputs are first reduced to their triangular
//! QR factor, so the rotations act on a `q x q` matrix.

use super::dense::DenseMatrix;
use super::qr::HouseholderQr;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// `(u, sigma, vt)` with `u` `m x r`, `vt` `r x n`, `r = min(m, n)` and
/// `sigma` non-increasing.
pub(crate) fn jacobi_svd(m: &DenseMatrix) -> Result<(DenseMatrix, Vec<f64>, DenseMatrix)> {
    if m.rows() >= m.cols() {
        tall_svd(m)
    } else {
        // M^T = U S V^T  =>  M = V S U^T
        let (u, s, vt) = tall_svd(&m.transpose())?;
        Ok((vt.transpose(), s, u.transpose()))
    }
}

fn tall_svd(m: &DenseMatrix) -> Result<(DenseMatrix, Vec<f64>, DenseMatrix)> {
    let (p, q) = m.shape();
    if p == q {
        return square_svd(m);
    }
    let qr = HouseholderQr::factor_tall(m);
    let (ur, s, vt) = square_svd(&qr.r_matrix())?;
    Ok((qr.thin_q().matmul(&ur)?, s, vt))
}

/// Rotates pairs of columns until all are mutually orthogonal to working
/// precision; the column norms are then the singular values. Columns below
/// `n * eps * ||M||_F` are roundoff and are left alone.
fn square_svd(m: &DenseMatrix) -> Result<(DenseMatrix, Vec<f64>, DenseMatrix)> {
    let n = m.rows();
    let mut g: Vec<Vec<f64>> = (0..n).map(|j| m.column(j).into_vec()).collect();
    let mut v: Vec<Vec<f64>> = (0..n).map(|j| unit(n, j)).collect();
    let tol = f64::EPSILON * n as f64;
    let negligible = (tol * m.frobenius_norm()).powi(2);
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let alpha = dot(&g[i], &g[i]);
                let beta = dot(&g[j], &g[j]);
                let gamma = dot(&g[i], &g[j]);
                if alpha <= negligible || beta <= negligible || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut g, i, j, c, s);
                rotate(&mut v, i, j, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numeric(format!("Jacobi SVD did not converge in {MAX_SWEEPS} sweeps")));
    }

    let norms: Vec<f64> = g.iter().map(|c| dot(c, c).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));
    let sigma: Vec<f64> = order.iter().map(|&j| norms[j]).collect();

    let floor = negligible.sqrt();
    let nonzero = sigma.iter().take_while(|&&s| s > floor && s.is_normal()).count();
    let mut u = DenseMatrix::zeros(n, nonzero);
    for (col, &j) in order.iter().take(nonzero).enumerate() {
        for i in 0..n {
            u[(i, col)] = g[j][i] / norms[j];
        }
    }
    let u = complete_columns(&u, n);
    let vt = DenseMatrix::from_fn(n, n, |r, c| v[order[r]][c]);
    Ok((u, sigma, vt))
}

/// Extends orthonormal columns to `target` columns.
fn complete_columns(basis: &DenseMatrix, target: usize) -> DenseMatrix {
    let (p, r) = basis.shape();
    if r == target {
        return basis.clone();
    }
    let full = if r == 0 {
        DenseMatrix::identity(p)
    } else {
        HouseholderQr::factor_tall(basis).full_q()
    };
    DenseMatrix::from_fn(p, target, |i, j| if j < r { basis[(i, j)] } else { full[(i, j)] })
}

fn unit(n: usize, j: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[j] = 1.0;
    e
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    super::dense::dot(a, b)
}

fn rotate(cols: &mut [Vec<f64>], i: usize, j: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(j);
    for (a, b) in lo[i].iter_mut().zip(hi[0].iter_mut()) {
        let (x, y) = (*a, *b);
        *a = c * x - s * y;
        *b = s * x + c * y;
    }
}
