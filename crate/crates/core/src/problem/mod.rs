//! Least-squares problem families and their on-disk bundle format.

mod bundle;
mod generate;

use std::collections::BTreeMap;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{qr_lstsq, DenseMatrix, DenseVector};
use crate::rng::Rng;
use crate::samplers::BlockSample;

pub use bundle::{
    format_matrix_csv, load_bundle, load_gaussian, load_problem, parse_bundle_meta,
    parse_matrix_csv, save_gaussian, save_problem, BundleMeta, CsvError,
};
pub use generate::{
    chebyshev_basis, gaussian_matrix, gen_chebyshev, gen_gaussian, gen_isosceles, gen_noisy,
    gen_random, haar_orthogonal, isosceles_solution, matrix_with_spectrum, ChebyshevSpec, CKind, Spectrum,
};

/// Family name, generator parameters and seed; persisted in `meta.json`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemMeta {
    pub family: String,
    #[serde(default)]
    pub parameters: BTreeMap<String, String>,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl ProblemMeta {
    pub fn new(family: impl Into<String>) -> Self {
        ProblemMeta {
            family: family.into(),
            ..Default::default()
        }
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.parameters.insert(key.to_string(), value.to_string());
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }
}

/// A finite problem `min ||Ax - b||`.
#[derive(Clone, Debug, PartialEq)]
pub struct LeastSquaresProblem {
    pub a: DenseMatrix,
    pub b: DenseVector,
    /// Minimal-norm ordinary least-squares solution, when known.
    pub x_star: Option<DenseVector>,
    /// `||b - A x_star||`, when known.
    pub residual_norm: Option<f64>,
    pub meta: ProblemMeta,
}

impl LeastSquaresProblem {
    pub fn new(a: DenseMatrix, b: DenseVector) -> Result<Self> {
        if a.rows() != b.len() {
            return Err(Error::dims(
                "LeastSquaresProblem",
                format!("A is {}x{}, b has length {}", a.rows(), a.cols(), b.len()),
            ));
        }
        if a.is_empty() {
            return Err(Error::dims("LeastSquaresProblem", "A is empty"));
        }
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::param("problem data must be finite"));
        }
        Ok(LeastSquaresProblem {
            a,
            b,
            x_star: None,
            residual_norm: None,
            meta: ProblemMeta::default(),
        })
    }

    pub fn with_meta(mut self, meta: ProblemMeta) -> Self {
        self.meta = meta;
        self
    }

    /// Computes and stores `x_star = A^+ b` and the residual norm.
    pub fn solve_ols(mut self) -> Result<Self> {
        let x = qr_lstsq(&self.a, &self.b)?;
        self.residual_norm = Some(self.a.residual(&x, &self.b).norm());
        self.x_star = Some(x);
        Ok(self)
    }

    pub fn m(&self) -> usize {
        self.a.rows()
    }

    pub fn n(&self) -> usize {
        self.a.cols()
    }

    /// `||A^T (A x - b)||`
    pub fn normal_equation_residual(&self, x: &DenseVector) -> f64 {
        let r = self.a.residual(x, &self.b);
        self.a.tr_mul_vec(&r).norm()
    }

    pub fn relative_residual(&self, x: &DenseVector) -> f64 {
        let bn = self.b.norm();
        let r = self.a.residual(x, &self.b).norm();
        if bn > 0.0 {
            r / bn
        } else {
            r
        }
    }

    /// Verifies the stored solution satisfies the normal equations and
    /// that the stored residual norm matches it.
    pub fn check_invariants(&self) -> Result<()> {
        if let Some(x) = &self.x_star {
            if x.len() != self.n() {
                return Err(Error::dims("x_star", format!("length {} for n = {}", x.len(), self.n())));
            }
            let scale = self.a.frobenius_norm() * self.b.norm();
            let ne = self.normal_equation_residual(x);
            if ne > 1e-8 * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::Numeric(format!(
                    "x_star violates the normal equations: ||A^T(Ax-b)|| = {ne:e}"
                )));
            }
            if let Some(rn) = self.residual_norm {
                let direct = self.a.residual(x, &self.b).norm();
                if (rn - direct).abs() > 1e-10 * direct.max(rn).max(f64::MIN_POSITIVE) {
                    return Err(Error::Numeric(format!(
                        "residual_norm {rn:e} disagrees with ||b - A x_star|| = {direct:e}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Rows `indices` of `A` and `b`, copied exactly.
    pub fn block(&self, indices: Vec<usize>) -> BlockSample {
        BlockSample {
            a_block: self.a.select_rows(&indices),
            b_block: self.b.select(&indices),
            indices: Some(indices),
        }
    }
}

/// A streaming problem whose rows `[a^T b]` are drawn from `N(0, L L^T)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianProblem {
    /// `(n+1) x (n+1)` lower-triangular factor.
    pub l_factor: DenseMatrix,
    pub x_star: DenseVector,
    pub noise_std: f64,
    /// Singular values of the leading `n x n` block, non-increasing.
    pub spectrum: Vec<f64>,
    pub meta: ProblemMeta,
}

impl GaussianProblem {
    /// Validates the structure `L = [[L_n, 0], [(L_n^T x*)^T, noise_std]]`.
    pub fn from_factor(l_factor: DenseMatrix, x_star: DenseVector, meta: ProblemMeta) -> Result<Self> {
        let n = x_star.len();
        if l_factor.shape() != (n + 1, n + 1) {
            return Err(Error::dims(
                "GaussianProblem",
                format!("L is {}x{}, expected {}x{}", l_factor.rows(), l_factor.cols(), n + 1, n + 1),
            ));
        }
        for i in 0..=n {
            for j in i + 1..=n {
                if l_factor[(i, j)] != 0.0 {
                    return Err(Error::param("L must be lower-triangular"));
                }
            }
        }
        let noise_std = l_factor[(n, n)];
        if noise_std < 0.0 {
            return Err(Error::param("noise_std (last diagonal entry of L) must be non-negative"));
        }
        let l_n = DenseMatrix::from_fn(n, n, |i, j| l_factor[(i, j)]);
        let expected = l_n.tr_mul_vec(&x_star);
        let got = DenseVector::from_vec(l_factor.row(n)[..n].to_vec());
        if got.distance(&expected) > 1e-10 * expected.norm().max(1.0) {
            return Err(Error::param("last row of L is not (L_n^T x*)^T"));
        }
        let spectrum = crate::linalg::singular_values(&l_n)?;
        Ok(GaussianProblem {
            l_factor,
            x_star,
            noise_std,
            spectrum,
            meta,
        })
    }

    pub fn n(&self) -> usize {
        self.x_star.len()
    }

    /// Leading `n x n` block `L_n`; `E[a a^T] = L_n L_n^T`.
    pub fn l_n(&self) -> DenseMatrix {
        let n = self.n();
        DenseMatrix::from_fn(n, n, |i, j| self.l_factor[(i, j)])
    }

    /// Draws `k` rows `[a_i^T b_i] = z_i^T L^T`, `z_i ~ N(0, I)`.
    pub fn sample_block(&self, k: usize, rng: &mut Rng) -> BlockSample {
        self.sample_block_with_noise(k, rng).0
    }

    /// Like [`sample_block`](Self::sample_block), also returning the noise
    /// component `noise_std * z_{i,n+1}` of each `b_i`.
    pub fn sample_block_with_noise(&self, k: usize, rng: &mut Rng) -> (BlockSample, DenseVector) {
        let n = self.n();
        let mut a = DenseMatrix::zeros(k, n);
        let mut b = vec![0.0; k];
        let mut noise = vec![0.0; k];
        let mut z = vec![0.0; n + 1];
        for i in 0..k {
            for zj in z.iter_mut() {
                *zj = StandardNormal.sample(rng);
            }
            let row = a.row_mut(i);
            for (r, out) in row.iter_mut().enumerate() {
                *out = crate::linalg::dot(&self.l_factor.row(r)[..=r], &z[..=r]);
            }
            noise[i] = self.noise_std * z[n];
            b[i] = crate::linalg::dot(&self.l_factor.row(n)[..n], &z[..n]) + noise[i];
        }
        (
            BlockSample {
                indices: None,
                a_block: a,
                b_block: DenseVector::from_vec(b),
            },
            DenseVector::from_vec(noise),
        )
    }
}

/// Either a finite matrix problem or a Gaussian stream.
#[derive(Clone, Debug, PartialEq)]
pub enum Problem {
    Finite(LeastSquaresProblem),
    Gaussian(GaussianProblem),
}

impl Problem {
    pub fn n(&self) -> usize {
        match self {
            Problem::Finite(p) => p.n(),
            Problem::Gaussian(g) => g.n(),
        }
    }

    pub fn x_star(&self) -> Option<&DenseVector> {
        match self {
            Problem::Finite(p) => p.x_star.as_ref(),
            Problem::Gaussian(g) => Some(&g.x_star),
        }
    }

    pub fn meta(&self) -> &ProblemMeta {
        match self {
            Problem::Finite(p) => &p.meta,
            Problem::Gaussian(g) => &g.meta,
        }
    }

    pub fn as_finite(&self) -> Option<&LeastSquaresProblem> {
        match self {
            Problem::Finite(p) => Some(p),
            Problem::Gaussian(_) => None,
        }
    }

    pub fn as_gaussian(&self) -> Option<&GaussianProblem> {
        match self {
            Problem::Gaussian(g) => Some(g),
            Problem::Finite(_) => None,
        }
    }
}

impl From<LeastSquaresProblem> for Problem {
    fn from(p: LeastSquaresProblem) -> Self {
        Problem::Finite(p)
    }
}

impl From<GaussianProblem> for Problem {
    fn from(g: GaussianProblem) -> Self {
        Problem::Gaussian(g)
    }
}
