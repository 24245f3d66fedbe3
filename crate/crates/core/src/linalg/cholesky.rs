use super::dense::{dot, DenseMatrix, DenseVector};
use crate::error::{Error, Result};

/// Lower-triangular Cholesky factor `G = L L^T`.
#[derive(Clone, Debug)]
pub struct Cholesky {
    l: DenseMatrix,
}

impl Cholesky {
    /// Reads only the lower triangle of `g`.
    pub fn factor(g: &DenseMatrix) -> Result<Self> {
        let (n, c) = g.shape();
        if n != c {
            return Err(Error::dims("cholesky", format!("{n}x{c} is not square")));
        }
        let mut l = DenseMatrix::zeros(n, n);
        for j in 0..n {
            let d = g[(j, j)] - dot(&l.row(j)[..j], &l.row(j)[..j]);
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { pivot: j, value: d });
            }
            let ljj = d.sqrt();
            l[(j, j)] = ljj;
            for i in j + 1..n {
                let s = g[(i, j)] - dot(&l.row(i)[..j], &l.row(j)[..j]);
                l[(i, j)] = s / ljj;
            }
        }
        Ok(Cholesky { l })
    }

    pub fn factor_matrix(&self) -> &DenseMatrix {
        &self.l
    }

    pub fn into_factor(self) -> DenseMatrix {
        self.l
    }

    pub fn solve(&self, y: &[f64]) -> DenseVector {
        let n = self.l.rows();
        let mut z = vec![0.0; n];
        for i in 0..n {
            let row = self.l.row(i);
            z[i] = (y[i] - dot(&row[..i], &z[..i])) / row[i];
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for j in i + 1..n {
                s -= self.l[(j, i)] * z[j];
            }
            z[i] = s / self.l[(i, i)];
        }
        DenseVector::from_vec(z)
    }

    /// `G^{-1}` column by column.
    pub fn inverse(&self) -> DenseMatrix {
        let n = self.l.rows();
        let mut inv = DenseMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let col = self.solve(&e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        inv.symmetrize();
        inv
    }

    pub fn log_det(&self) -> f64 {
        (0..self.l.rows()).map(|i| 2.0 * self.l[(i, i)].ln()).sum()
    }
}

/// Solves `G x = y` for symmetric positive definite `G`.
pub fn cholesky_solve_spd(g: &DenseMatrix, y: &DenseVector) -> Result<DenseVector> {
    let (n, c) = g.shape();
    if n != c || y.len() != n {
        return Err(Error::dims(
            "cholesky_solve_spd",
            format!("G is {n}x{c}, y has length {}", y.len()),
        ));
    }
    let scale = g.max_abs();
    if g.asymmetry() > 1e-12 * scale {
        return Err(Error::param("cholesky_solve_spd: G is not symmetric"));
    }
    Ok(Cholesky::factor(g)?.solve(y))
}
