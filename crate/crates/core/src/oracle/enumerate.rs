//! Exact expectations over every `k`-subset, weighted by the sampling law.
//!
//! Subsets are split into fixed-size chunks by lexicographic rank; chunks are
//! reduced in parallel and merged in rank order, so results do not depend on
//! the number of worker threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{thin_svd, DenseMatrix, DenseVector};
use crate::problem::LeastSquaresProblem;
use crate::samplers::{
    check_enumerable, for_each_in_range, kdpp_log_weights, normalize_log_weights, BlockSample, SamplerKind,
};
use crate::solvers::MassMatrixKind;

const CHUNK: u64 = 1024;

/// A sampling law with an enumerable probability for each subset.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SubsetLaw {
    Uniform,
    KDpp { lambda: f64 },
}

impl SubsetLaw {
    pub fn from_sampler(sampler: &SamplerKind) -> Result<Self> {
        match *sampler {
            SamplerKind::UniformSubsets { .. } => Ok(SubsetLaw::Uniform),
            SamplerKind::KDpp { lambda, .. } => Ok(SubsetLaw::KDpp { lambda }),
            SamplerKind::GaussianStream { .. } => {
                Err(Error::param("a Gaussian stream has no enumerable subset law; use Monte Carlo"))
            }
        }
    }

    /// Probabilities in lexicographic subset order, or `None` for uniform.
    fn probabilities(&self, a: &DenseMatrix, k: usize) -> Result<Option<Vec<f64>>> {
        match *self {
            SubsetLaw::Uniform => Ok(None),
            SubsetLaw::KDpp { lambda } => Ok(Some(normalize_log_weights(&kdpp_log_weights(a, k, lambda)?))),
        }
    }
}

/// Folds `step(acc, block, probability)` over all subsets; deterministic.
pub fn enumerate_fold<A, I, F, M>(
    problem: &LeastSquaresProblem,
    k: usize,
    law: SubsetLaw,
    init: I,
    step: F,
    mut merge: M,
) -> Result<A>
where
    A: Send,
    I: Fn() -> A + Sync,
    F: Fn(&mut A, &BlockSample, f64) -> Result<()> + Sync,
    M: FnMut(&mut A, A),
{
    let m = problem.m();
    let count = check_enumerable(m, k)?;
    let probs = law.probabilities(&problem.a, k)?;
    let uniform = 1.0 / count as f64;
    let chunks = count.div_ceil(CHUNK);
    let partials: Vec<Result<A>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = init();
            let mut err = None;
            let range = c * CHUNK..((c + 1) * CHUNK).min(count);
            for_each_in_range(m, k, range, |rank, s| {
                if err.is_some() {
                    return;
                }
                let w = probs.as_ref().map_or(uniform, |p| p[rank as usize]);
                let block = problem.block(s.to_vec());
                if let Err(e) = step(&mut acc, &block, w) {
                    err = Some(e);
                }
            });
            match err {
                Some(e) => Err(e),
                None => Ok(acc),
            }
        })
        .collect();
    let mut iter = partials.into_iter();
    let mut total = iter.next().expect("at least one chunk")?;
    for part in iter {
        merge(&mut total, part?);
    }
    Ok(total)
}

/// `E f(S)` for a vector-valued function of the sampled block.
pub fn enumerate_expectation<F>(problem: &LeastSquaresProblem, k: usize, law: SubsetLaw, f: F) -> Result<DenseVector>
where
    F: Fn(&BlockSample) -> Result<DenseVector> + Sync,
{
    let n = problem.n();
    enumerate_fold(
        problem,
        k,
        law,
        || DenseVector::zeros(n),
        |acc, block, w| {
            let v = f(block)?;
            if v.len() != n {
                return Err(Error::dims("enumerate_expectation", "f must return length-n vectors"));
            }
            acc.axpy(w, &v);
            Ok(())
        },
        |acc, part| acc.axpy(1.0, &part),
    )
}

/// Exact first moments of the update under a subset law.
#[derive(Clone, Debug)]
pub struct Enumeration {
    /// `E[I_S^T M(A_S) I_S]`, `m x m`.
    pub w_bar: DenseMatrix,
    /// `E[P(S)]`, accumulated from each block's own `P(S)`, `n x n`.
    pub p_bar: DenseMatrix,
    /// `E[A_S^T M(A_S) b_S]`, equal to `A^T W̄ b`.
    pub g_bar: DenseVector,
    /// `max_S ||A_S^+||^2`; infinite if some block is the zero matrix.
    pub max_block_pinv_sq: f64,
    pub subsets: u64,
}

struct Acc {
    w: DenseMatrix,
    p: DenseMatrix,
    g: DenseVector,
    max_pinv_sq: f64,
}

fn block_pinv_sq(a_s: &DenseMatrix) -> Result<f64> {
    let (_, s, _) = thin_svd(a_s)?;
    let rank = crate::linalg::numerical_rank(&s, crate::linalg::default_rank_tol(a_s.rows(), a_s.cols()));
    Ok(if rank == 0 { f64::INFINITY } else { 1.0 / (s[rank - 1] * s[rank - 1]) })
}

/// Exact `(W̄, P̄)` and companions for the given mass matrix and subset law.
pub fn enumerate_wbar_pbar(
    problem: &LeastSquaresProblem,
    k: usize,
    mass: &MassMatrixKind,
    law: SubsetLaw,
) -> Result<Enumeration> {
    mass.validate()?;
    let (m, n) = (problem.m(), problem.n());
    let subsets = check_enumerable(m, k)?;
    let acc = enumerate_fold(
        problem,
        k,
        law,
        || Acc {
            w: DenseMatrix::zeros(m, m),
            p: DenseMatrix::zeros(n, n),
            g: DenseVector::zeros(n),
            max_pinv_sq: 0.0,
        },
        |acc, block, w| {
            let s = block.indices.as_ref().expect("enumerated blocks carry indices");
            let mm = mass.mass_matrix(&block.a_block)?;
            for (i, &si) in s.iter().enumerate() {
                for (j, &sj) in s.iter().enumerate() {
                    acc.w[(si, sj)] += w * mm[(i, j)];
                }
            }
            acc.p.add_scaled(w, &mass.update_operator(&block.a_block)?);
            acc.g.axpy(w, &mass.update_direction(&block.a_block, &block.b_block)?);
            acc.max_pinv_sq = acc.max_pinv_sq.max(block_pinv_sq(&block.a_block)?);
            Ok(())
        },
        |acc, part| {
            acc.w.add_scaled(1.0, &part.w);
            acc.p.add_scaled(1.0, &part.p);
            acc.g.axpy(1.0, &part.g);
            acc.max_pinv_sq = acc.max_pinv_sq.max(part.max_pinv_sq);
        },
    )?;
    let mut w_bar = acc.w;
    w_bar.symmetrize();
    let mut p_bar = acc.p;
    p_bar.symmetrize();
    let enumeration = Enumeration {
        w_bar,
        p_bar,
        g_bar: acc.g,
        max_block_pinv_sq: acc.max_pinv_sq,
        subsets,
    };
    let rel = pbar_consistency(&problem.a, &enumeration.w_bar, &enumeration.p_bar)?;
    if rel > PBAR_CONSISTENCY_TOL {
        return Err(Error::Numeric(format!(
            "enumerated P̄ disagrees with A^T W̄ A (relative error {rel:e})"
        )));
    }
    Ok(enumeration)
}

/// Tolerance for [`pbar_consistency`].
pub const PBAR_CONSISTENCY_TOL: f64 = 1e-10;

/// `||A^T W̄ A - P̄||_F / (||A||_F^2 ||W̄||_F)`.
///
/// The normalization is the natural backward-error scale of the product, so
/// the check stays meaningful when `W̄` has huge entries from near-singular
/// blocks.
pub fn pbar_consistency(a: &DenseMatrix, w_bar: &DenseMatrix, p_bar: &DenseMatrix) -> Result<f64> {
    let atwa = a.transpose().matmul(&w_bar.matmul(a)?)?;
    let scale = a.frobenius_norm().powi(2) * w_bar.frobenius_norm();
    let diff = atwa.sub(p_bar).frobenius_norm();
    Ok(if scale > 0.0 { diff / scale } else { diff })
}

/// `V = E ||A_S^T M(A_S) r_S||^2` for a fixed residual vector `r` of length `m`.
pub fn enumerate_variance(
    problem: &LeastSquaresProblem,
    k: usize,
    mass: &MassMatrixKind,
    law: SubsetLaw,
    r: &DenseVector,
) -> Result<f64> {
    if r.len() != problem.m() {
        return Err(Error::dims("variance", format!("residual length {} for m = {}", r.len(), problem.m())));
    }
    enumerate_fold(
        problem,
        k,
        law,
        || 0.0,
        |acc, block, w| {
            let s = block.indices.as_ref().expect("enumerated blocks carry indices");
            let d = mass.update_direction(&block.a_block, &r.select(s))?;
            *acc += w * d.norm_sq();
            Ok(())
        },
        |acc, part| *acc += part,
    )
}
