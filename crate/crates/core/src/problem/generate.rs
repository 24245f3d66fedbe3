use std::str::FromStr;

use rand_distr::{Distribution, Normal, StandardNormal};

use super::{GaussianProblem, LeastSquaresProblem, ProblemMeta};
use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, DenseVector, HouseholderQr};
use crate::rng::{seeded, Rng};

/// Singular-value profile for generated factors.
#[derive(Clone, Debug, PartialEq)]
pub enum Spectrum {
    /// `sigma_i = 1`
    Flat,
    /// `sigma_i^2 = i^(-beta)`
    Poly(f64),
    /// Explicit values, non-increasing.
    List(Vec<f64>),
}

impl Spectrum {
    pub fn values(&self, n: usize) -> Result<Vec<f64>> {
        let v = match self {
            Spectrum::Flat => vec![1.0; n],
            Spectrum::Poly(beta) => (1..=n).map(|i| (i as f64).powf(-beta / 2.0)).collect(),
            Spectrum::List(v) => {
                if v.len() != n {
                    return Err(Error::param(format!(
                        "spectrum lists {} values for n = {n}",
                        v.len()
                    )));
                }
                v.clone()
            }
        };
        validate_spectrum(&v)?;
        Ok(v)
    }
}

impl FromStr for Spectrum {
    type Err = Error;

    /// Accepts `flat`, `poly:BETA` or `list:s1,s2,...`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "flat" {
            return Ok(Spectrum::Flat);
        }
        if let Some(beta) = s.strip_prefix("poly:") {
            let beta: f64 = beta
                .trim()
                .parse()
                .map_err(|_| Error::param(format!("bad decay exponent in spectrum {s:?}")))?;
            if !(beta.is_finite() && beta >= 0.0) {
                return Err(Error::param("spectrum decay exponent must be finite and >= 0"));
            }
            return Ok(Spectrum::Poly(beta));
        }
        if let Some(list) = s.strip_prefix("list:") {
            let v = list
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::param(format!("bad value in spectrum {s:?}")))?;
            validate_spectrum(&v)?;
            return Ok(Spectrum::List(v));
        }
        Err(Error::param(format!(
            "unknown spectrum {s:?}; expected flat, poly:BETA or list:s1,s2,..."
        )))
    }
}

fn validate_spectrum(v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::param("spectrum is empty"));
    }
    if v.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::param("spectrum values must be finite and positive"));
    }
    if v.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::param("spectrum must be non-increasing"));
    }
    Ok(())
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut Rng) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// signs of `R`'s diagonal folded into `Q`.
pub fn haar_orthogonal(n: usize, rng: &mut Rng) -> DenseMatrix {
    let g = gaussian_matrix(n, n, rng);
    let qr = HouseholderQr::factor_tall(&g);
    let mut q = qr.thin_q();
    for (j, d) in qr.r_diag().into_iter().enumerate() {
        if d < 0.0 {
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// `U diag(sigma) V^T` with Haar `U`, `V`.
pub fn matrix_with_spectrum(sigma: &[f64], rng: &mut Rng) -> DenseMatrix {
    let n = sigma.len();
    let u = haar_orthogonal(n, rng);
    let v = haar_orthogonal(n, rng);
    DenseMatrix::from_fn(n, n, |i, j| (0..n).map(|l| u[(i, l)] * sigma[l] * v[(j, l)]).sum())
}

pub fn gen_gaussian(
    n: usize,
    spectrum: &[f64],
    planted_x: &DenseVector,
    noise_std: f64,
    seed: u64,
) -> Result<GaussianProblem> {
    if n == 0 || spectrum.len() != n || planted_x.len() != n {
        return Err(Error::dims(
            "gen_gaussian",
            format!("n = {n}, spectrum length {}, planted_x length {}", spectrum.len(), planted_x.len()),
        ));
    }
    validate_spectrum(spectrum)?;
    if !(noise_std.is_finite() && noise_std >= 0.0) {
        return Err(Error::param("noise_std must be finite and non-negative"));
    }
    let mut rng = seeded(seed);
    // L_n L_n^T = U S^2 U^T; with S U^T = Q R, L_n = R^T (rows sign-fixed).
    let u = haar_orthogonal(n, &mut rng);
    let su_t = DenseMatrix::from_fn(n, n, |i, j| spectrum[i] * u[(j, i)]);
    let qr = HouseholderQr::factor_tall(&su_t);
    let mut l = DenseMatrix::zeros(n + 1, n + 1);
    for i in 0..n {
        let sign = if qr.r(i, i) < 0.0 { -1.0 } else { 1.0 };
        for j in 0..=i {
            l[(i, j)] = sign * qr.r(j, i);
        }
    }
    let mut l_n = DenseMatrix::zeros(n, n);
    for i in 0..n {
        l_n.row_mut(i).copy_from_slice(&l.row(i)[..n]);
    }
    let lb = l_n.tr_mul_vec(planted_x);
    l.row_mut(n)[..n].copy_from_slice(&lb);
    l[(n, n)] = noise_std;
    let meta = ProblemMeta::new("gaussian")
        .param("n", n)
        .param("noise_std", format!("{noise_std:?}"))
        .seed(seed);
    Ok(GaussianProblem {
        l_factor: l,
        x_star: planted_x.clone(),
        noise_std,
        spectrum: spectrum.to_vec(),
        meta,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum CKind {
    Identity,
    /// Coefficient matrix with singular values `1 / i^exponent`.
    DecayingSpectrum(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChebyshevSpec {
    pub n: usize,
    pub m: usize,
    pub c_kind: CKind,
    pub noise_std: f64,
    pub seed: u64,
}

/// `T[i][l] = T_{l+1}(v_i)` on the uniform grid `v_i` over `[-1, 1]`.
pub fn chebyshev_basis(m: usize, n: usize) -> DenseMatrix {
    let mut t = DenseMatrix::zeros(m, n);
    for i in 0..m {
        let v = if m == 1 { -1.0 } else { -1.0 + 2.0 * i as f64 / (m - 1) as f64 };
        let (mut prev, mut cur) = (1.0, v);
        for l in 0..n {
            t[(i, l)] = cur;
            let next = 2.0 * v * cur - prev;
            prev = cur;
            cur = next;
        }
    }
    t
}

pub fn gen_chebyshev(spec: &ChebyshevSpec) -> Result<LeastSquaresProblem> {
    let ChebyshevSpec { n, m, ref c_kind, noise_std, seed } = *spec;
    if n == 0 || m < n {
        return Err(Error::param(format!("chebyshev requires m >= n >= 1, got m = {m}, n = {n}")));
    }
    if !(noise_std.is_finite() && noise_std >= 0.0) {
        return Err(Error::param("noise_std must be finite and non-negative"));
    }
    let mut rng = seeded(seed);
    let t = chebyshev_basis(m, n);
    let a = match c_kind {
        CKind::Identity => t,
        CKind::DecayingSpectrum(p) => {
            if !(p.is_finite() && *p > 0.0) {
                return Err(Error::param("decay exponent must be positive"));
            }
            let sigma: Vec<f64> = (1..=n).map(|i| (i as f64).powf(-p)).collect();
            let c = matrix_with_spectrum(&sigma, &mut rng);
            // A_ij = sum_l C_jl T_l(v_i), i.e. A = T C^T.
            t.matmul(&c.transpose())?
        }
    };
    let y = DenseVector::from_vec((0..n).map(|_| StandardNormal.sample(&mut rng)).collect());
    let noise = Normal::new(0.0, noise_std).map_err(|e| Error::param(e.to_string()))?;
    let mut b = a.mul_vec(&y);
    for bi in b.iter_mut() {
        *bi += noise.sample(&mut rng);
    }
    let kind = match c_kind {
        CKind::Identity => "identity".to_string(),
        CKind::DecayingSpectrum(p) => format!("decay:{p:?}"),
    };
    let meta = ProblemMeta::new("chebyshev")
        .param("m", m)
        .param("n", n)
        .param("c", kind)
        .param("noise_std", format!("{noise_std:?}"))
        .seed(seed);
    LeastSquaresProblem::new(a, b)?.with_meta(meta).solve_ols()
}

/// `(1, 2 eps^3 / (1 + 2 eps^4))`, the least-squares solution of the
/// isosceles family.
pub fn isosceles_solution(epsilon: f64) -> DenseVector {
    let e3 = epsilon.powi(3);
    let e4 = epsilon.powi(4);
    DenseVector::from_vec(vec![1.0, 2.0 * e3 / (1.0 + 2.0 * e4)])
}

/// Three lines `y = 0`, `x + eps^2 y = 1 + eps`, `x - eps^2 y = 1 - eps`
/// bounding an isosceles triangle that grows taller as `eps` shrinks.
pub fn gen_isosceles(epsilon: f64) -> Result<LeastSquaresProblem> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::param(format!("epsilon must lie in (0, 1], got {epsilon}")));
    }
    let e2 = epsilon * epsilon;
    let a = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, e2], vec![1.0, -e2]]);
    let b = DenseVector::from_vec(vec![0.0, 1.0 + epsilon, 1.0 - epsilon]);
    let x = isosceles_solution(epsilon);
    let mut p = LeastSquaresProblem::new(a, b)?
        .with_meta(ProblemMeta::new("isosceles").param("epsilon", format!("{epsilon:?}")));
    p.residual_norm = Some(p.a.residual(&x, &p.b).norm());
    p.x_star = Some(x);
    Ok(p)
}

/// `b = A x_planted + z` with `z_i ~ N(0, noise_std^2)`.
pub fn gen_noisy(
    a: &DenseMatrix,
    planted_x: &DenseVector,
    noise_std: f64,
    seed: u64,
) -> Result<LeastSquaresProblem> {
    if planted_x.len() != a.cols() {
        return Err(Error::dims(
            "gen_noisy",
            format!("A has {} columns, planted_x length {}", a.cols(), planted_x.len()),
        ));
    }
    let noise = Normal::new(0.0, noise_std).map_err(|e| Error::param(e.to_string()))?;
    let mut rng = seeded(seed);
    let mut b = a.mul_vec(planted_x);
    for bi in b.iter_mut() {
        *bi += noise.sample(&mut rng);
    }
    let meta = ProblemMeta::new("noisy")
        .param("m", a.rows())
        .param("n", a.cols())
        .param("noise_std", format!("{noise_std:?}"))
        .seed(seed);
    LeastSquaresProblem::new(a.clone(), b)?.with_meta(meta).solve_ols()
}

/// Gaussian `A` and independent Gaussian `b`; generically inconsistent.
pub fn gen_random(m: usize, n: usize, seed: u64) -> Result<LeastSquaresProblem> {
    if m == 0 || n == 0 {
        return Err(Error::param("random problem needs m, n >= 1"));
    }
    let mut rng = seeded(seed);
    let a = gaussian_matrix(m, n, &mut rng);
    let b = DenseVector::from_vec((0..m).map(|_| StandardNormal.sample(&mut rng)).collect());
    let meta = ProblemMeta::new("random").param("m", m).param("n", n).seed(seed);
    LeastSquaresProblem::new(a, b)?.with_meta(meta).solve_ols()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectrum_strings() {
        assert_eq!("flat".parse::<Spectrum>().unwrap(), Spectrum::Flat);
        assert_eq!("poly:2".parse::<Spectrum>().unwrap(), Spectrum::Poly(2.0));
        let v = "poly:4".parse::<Spectrum>().unwrap().values(3).unwrap();
        assert!((v[1] * v[1] - 1.0 / 16.0).abs() < 1e-15);
        assert!("list:1,2".parse::<Spectrum>().is_err());
        assert!("poly:-1".parse::<Spectrum>().is_err());
        assert!("nope".parse::<Spectrum>().is_err());
    }

    #[test]
    fn haar_is_orthogonal() {
        let q = haar_orthogonal(6, &mut seeded(3));
        let qtq = q.transpose().matmul(&q).unwrap();
        assert!(qtq.sub(&DenseMatrix::identity(6)).max_abs() < 1e-13);
    }

    #[test]
    fn chebyshev_single_polynomial_is_grid() {
        let t = chebyshev_basis(5, 1);
        for i in 0..5 {
            assert_eq!(t[(i, 0)], -1.0 + 0.5 * i as f64);
        }
    }

    #[test]
    fn chebyshev_recurrence_matches_cosine_form() {
        let t = chebyshev_basis(7, 6);
        for i in 0..7 {
            let v: f64 = -1.0 + 2.0 * i as f64 / 6.0;
            for l in 0..6 {
                let direct = ((l + 1) as f64 * v.acos()).cos();
                assert!((t[(i, l)] - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn isosceles_eps_one() {
        let p = gen_isosceles(1.0).unwrap();
        let x = p.x_star.as_ref().unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(p.b.as_slice(), &[0.0, 2.0, 0.0]);
        p.check_invariants().unwrap();
        assert!(gen_isosceles(0.0).is_err());
    }

    #[test]
    fn gaussian_factor_structure() {
        let g = gen_gaussian(4, &[2.0, 1.0, 0.5, 0.25], &DenseVector::from_vec(vec![1.0, -1.0, 0.5, 2.0]), 0.3, 1)
            .unwrap();
        let s = crate::linalg::singular_values(&g.l_n()).unwrap();
        for (a, b) in s.iter().zip(&[2.0, 1.0, 0.5, 0.25]) {
            assert!((a - b).abs() < 1e-12);
        }
        let again = GaussianProblem::from_factor(g.l_factor.clone(), g.x_star.clone(), g.meta.clone()).unwrap();
        assert_eq!(again.noise_std, 0.3);
        assert!(gen_gaussian(2, &[1.0, -1.0], &DenseVector::zeros(2), 0.0, 0).is_err());
        assert!(gen_gaussian(2, &[1.0, 2.0], &DenseVector::zeros(2), 0.0, 0).is_err());
    }
}
