use super::dense::{axpy, dot, DenseMatrix};

/// Householder QR of a tall `p x q` matrix (`p >= q`) supplied as `q`
/// contiguous columns of length `p`.
///
/// Rows of a row-major block are exactly the columns of its transpose, so a
/// wide block `A_S` is factored as `A_S^T = QR` without copying strided data.
#[derive(Clone, Debug)]
pub struct HouseholderQr {
    p: usize,
    q: usize,
    /// Transformed columns; entries `0..=j` of column `j` hold column `j` of R.
    cols: Vec<f64>,
    /// Reflector `j` acts on entries `j..p`; stored with its scale `tau`.
    vs: Vec<Vec<f64>>,
    taus: Vec<f64>,
}

impl HouseholderQr {
    /// `cols` is column-major: column `j` occupies `cols[j*p..(j+1)*p]`.
    pub fn factor_columns(mut cols: Vec<f64>, p: usize, q: usize) -> Self {
        assert_eq!(cols.len(), p * q);
        assert!(p >= q, "HouseholderQr requires p >= q");
        let mut vs = Vec::with_capacity(q);
        let mut taus = Vec::with_capacity(q);
        for j in 0..q {
            let (head, rest) = cols.split_at_mut((j + 1) * p);
            let x = &mut head[j * p + j..(j + 1) * p];
            let norm = dot(x, x).sqrt();
            if norm == 0.0 {
                vs.push(vec![0.0; p - j]);
                taus.push(0.0);
                continue;
            }
            let alpha = if x[0] >= 0.0 { -norm } else { norm };
            let mut v = x.to_vec();
            v[0] -= alpha;
            let beta = dot(&v, &v);
            let tau = if beta > 0.0 { 2.0 / beta } else { 0.0 };
            x[0] = alpha;
            for e in x[1..].iter_mut() {
                *e = 0.0;
            }
            if tau != 0.0 {
                for c in rest.chunks_exact_mut(p) {
                    let seg = &mut c[j..];
                    let s = tau * dot(&v, seg);
                    if s != 0.0 {
                        axpy(-s, &v, seg);
                    }
                }
            }
            vs.push(v);
            taus.push(tau);
        }
        HouseholderQr {
            p,
            q,
            cols,
            vs,
            taus,
        }
    }

    /// Factors a tall row-major matrix by copying out its columns.
    pub fn factor_tall(m: &DenseMatrix) -> Self {
        let (p, q) = m.shape();
        let t = m.transpose();
        Self::factor_columns(t.as_slice().to_vec(), p, q)
    }

    /// Factors the transpose of a wide (or square) row-major matrix.
    pub fn factor_transpose(m: &DenseMatrix) -> Self {
        let (q, p) = m.shape();
        Self::factor_columns(m.as_slice().to_vec(), p, q)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Entry `R[i][j]` for `i <= j`.
    #[inline]
    pub fn r(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i <= j);
        self.cols[j * self.p + i]
    }

    pub fn r_diag(&self) -> Vec<f64> {
        (0..self.q).map(|j| self.r(j, j)).collect()
    }

    /// True when some `|R_jj|` falls at or below `rel_tol * max |R_ii|`.
    pub fn is_rank_deficient(&self, rel_tol: f64) -> bool {
        let d = self.r_diag();
        let max = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        max == 0.0 || d.iter().any(|v| v.abs() <= rel_tol * max)
    }

    /// `Q [z; 0]` for `z` of length `q`.
    pub fn apply_q(&self, z: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.p];
        y[..self.q].copy_from_slice(z);
        self.reflect_rev(&mut y);
        y
    }

    /// `Q^T y`; the first `q` entries are the thin-Q coefficients.
    pub fn apply_qt(&self, y: &[f64]) -> Vec<f64> {
        let mut y = y.to_vec();
        for j in 0..self.q {
            let tau = self.taus[j];
            if tau == 0.0 {
                continue;
            }
            let seg = &mut y[j..];
            let s = tau * dot(&self.vs[j], seg);
            axpy(-s, &self.vs[j], seg);
        }
        y
    }

    fn reflect_rev(&self, y: &mut [f64]) {
        for j in (0..self.q).rev() {
            let tau = self.taus[j];
            if tau == 0.0 {
                continue;
            }
            let seg = &mut y[j..];
            let s = tau * dot(&self.vs[j], seg);
            axpy(-s, &self.vs[j], seg);
        }
    }

    /// Solves `R^T z = y` by forward substitution.
    pub fn solve_rt(&self, y: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; self.q];
        for j in 0..self.q {
            let col = &self.cols[j * self.p..j * self.p + j];
            let s = dot(col, &z[..j]);
            z[j] = (y[j] - s) / self.r(j, j);
        }
        z
    }

    /// Solves `R x = c` by back substitution.
    pub fn solve_r(&self, c: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.q];
        for j in (0..self.q).rev() {
            let mut s = c[j];
            for i in j + 1..self.q {
                s -= self.r(j, i) * x[i];
            }
            x[j] = s / self.r(j, j);
        }
        x
    }

    /// Explicit thin `Q` (`p x q`).
    pub fn thin_q(&self) -> DenseMatrix {
        let mut qm = DenseMatrix::zeros(self.p, self.q);
        for j in 0..self.q {
            let mut e = vec![0.0; self.q];
            e[j] = 1.0;
            let col = self.apply_q(&e);
            for i in 0..self.p {
                qm[(i, j)] = col[i];
            }
        }
        qm
    }

    /// Explicit full `Q` (`p x p`).
    pub fn full_q(&self) -> DenseMatrix {
        let mut qm = DenseMatrix::zeros(self.p, self.p);
        for j in 0..self.p {
            let mut e = vec![0.0; self.p];
            e[j] = 1.0;
            self.reflect_rev(&mut e);
            for i in 0..self.p {
                qm[(i, j)] = e[i];
            }
        }
        qm
    }

    /// Upper-triangular `R` (`q x q`).
    pub fn r_matrix(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.q, self.q, |i, j| if i <= j { self.r(i, j) } else { 0.0 })
    }
}
