//! k-DPP over the regularized kernel `A A^T + lambda k I`:
//! `Pr[S] ∝ det(A_S A_S^T + lambda k I)`.

use rand::Rng as _;

use super::combinations::{check_enumerable, for_each_in_range};
use super::esp::log_prefix_table;
use crate::error::{Error, Result};
use crate::linalg::{dot, sym_eigen, Cholesky, DenseMatrix};
use crate::rng::Rng;

/// Largest row count the eigendecomposition sampler accepts.
pub const EIGEN_SAMPLER_MAX_ROWS: usize = 5000;

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda > 0.0 {
        Ok(())
    } else {
        Err(Error::param(format!("k-DPP regularization lambda must be positive, got {lambda}")))
    }
}

fn log_det_regularized(a_s: &DenseMatrix, shift: f64) -> Result<f64> {
    let mut g = a_s.gram_rows();
    g.add_to_diagonal(shift);
    Ok(Cholesky::factor(&g)?.log_det())
}

/// `ln det(A_S A_S^T + lambda k I)` for every `k`-subset in lexicographic order.
pub fn kdpp_log_weights(a: &DenseMatrix, k: usize, lambda: f64) -> Result<Vec<f64>> {
    check_lambda(lambda)?;
    let m = a.rows();
    let count = check_enumerable(m, k)?;
    let shift = lambda * k as f64;
    let mut out = Vec::with_capacity(count as usize);
    let mut err = None;
    for_each_in_range(m, k, 0..count, |_, s| {
        if err.is_some() {
            return;
        }
        match log_det_regularized(&a.select_rows(s), shift) {
            Ok(v) => out.push(v),
            Err(e) => err = Some(e),
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// Normalized probabilities from log weights (log-sum-exp).
pub fn normalize_log_weights(log_w: &[f64]) -> Vec<f64> {
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_w.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|v| v / total).collect()
}

/// Exact k-DPP law as `(subset, probability)` pairs in lexicographic order.
pub fn kdpp_probabilities_enumerate(a: &DenseMatrix, k: usize, lambda: f64) -> Result<Vec<(Vec<usize>, f64)>> {
    let probs = normalize_log_weights(&kdpp_log_weights(a, k, lambda)?);
    let mut out = Vec::with_capacity(probs.len());
    for_each_in_range(a.rows(), k, 0..probs.len() as u64, |r, s| out.push((s.to_vec(), probs[r as usize])));
    Ok(out)
}

/// Exact k-DPP sampler via the kernel eigendecomposition: first choose an
/// elementary DPP of `k` eigenvectors, then draw indices one at a time from
/// the projection-kernel conditionals.
#[derive(Clone, Debug)]
pub struct KDppEigenSampler {
    k: usize,
    eigenvalues: Vec<f64>,
    /// Column `j` is the eigenvector of `eigenvalues[j]`.
    eigenvectors: DenseMatrix,
    /// `log_e[i][l] = ln e_l(eigenvalues[0..i])`
    log_e: Vec<Vec<f64>>,
}

impl KDppEigenSampler {
    pub fn new(a: &DenseMatrix, k: usize, lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        let m = a.rows();
        if k == 0 || k > m {
            return Err(Error::param(format!("block size k = {k} must satisfy 1 <= k <= m = {m}")));
        }
        if m > EIGEN_SAMPLER_MAX_ROWS {
            return Err(Error::param(format!(
                "eigen k-DPP sampler supports at most {EIGEN_SAMPLER_MAX_ROWS} rows, got {m}"
            )));
        }
        let mut kernel = a.gram_rows();
        kernel.add_to_diagonal(lambda * k as f64);
        let eig = sym_eigen(&kernel)?;
        // The kernel is positive definite; clamp roundoff below the shift.
        let floor = lambda * k as f64 * 0.5;
        let eigenvalues: Vec<f64> = eig.values.iter().map(|&v| v.max(floor)).collect();
        let log_e = log_prefix_table(&eigenvalues, k)?;
        Ok(KDppEigenSampler {
            k,
            eigenvalues,
            eigenvectors: eig.vectors,
            log_e,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.eigenvalues.len()
    }

    fn select_eigenvectors(&self, rng: &mut Rng) -> Vec<usize> {
        let mut chosen = Vec::with_capacity(self.k);
        let mut remaining = self.k;
        for n in (1..=self.m()).rev() {
            if remaining == 0 {
                break;
            }
            let take = if n == remaining {
                true
            } else {
                let log_p = self.eigenvalues[n - 1].ln() + self.log_e[n - 1][remaining - 1]
                    - self.log_e[n][remaining];
                rng.random::<f64>() < log_p.exp()
            };
            if take {
                chosen.push(n - 1);
                remaining -= 1;
            }
        }
        chosen
    }

    /// One draw, returned as sorted row indices.
    pub fn sample(&self, rng: &mut Rng) -> Vec<usize> {
        let m = self.m();
        let cols = self.select_eigenvectors(rng);
        let mut basis: Vec<Vec<f64>> = cols
            .iter()
            .map(|&j| (0..m).map(|i| self.eigenvectors[(i, j)]).collect())
            .collect();
        let mut out = Vec::with_capacity(self.k);
        while !basis.is_empty() {
            let weights: Vec<f64> = (0..m).map(|i| basis.iter().map(|v| v[i] * v[i]).sum()).collect();
            let total: f64 = weights.iter().sum();
            let mut u = rng.random::<f64>() * total;
            let mut pick = m - 1;
            for (i, w) in weights.iter().enumerate() {
                if u < *w {
                    pick = i;
                    break;
                }
                u -= w;
            }
            while weights[pick] == 0.0 && pick > 0 {
                pick -= 1;
            }
            out.push(pick);
            // Restrict the span to vectors vanishing at `pick`.
            let pivot = (0..basis.len())
                .max_by(|&x, &y| basis[x][pick].abs().total_cmp(&basis[y][pick].abs()))
                .expect("basis is non-empty");
            let pv = basis.swap_remove(pivot);
            for v in basis.iter_mut() {
                let c = v[pick] / pv[pick];
                for (vi, pi) in v.iter_mut().zip(&pv) {
                    *vi -= c * pi;
                }
                v[pick] = 0.0;
            }
            orthonormalize(&mut basis);
        }
        out.sort_unstable();
        out
    }
}

/// Modified Gram-Schmidt with one reorthogonalization pass.
fn orthonormalize(basis: &mut [Vec<f64>]) {
    for i in 0..basis.len() {
        for _ in 0..2 {
            for j in 0..i {
                let (head, tail) = basis.split_at_mut(i);
                let c = dot(&tail[0], &head[j]);
                crate::linalg::axpy(-c, &head[j], &mut tail[0]);
            }
        }
        let norm = dot(&basis[i], &basis[i]).sqrt();
        if norm > 0.0 {
            basis[i].iter_mut().for_each(|v| *v /= norm);
        }
    }
}
