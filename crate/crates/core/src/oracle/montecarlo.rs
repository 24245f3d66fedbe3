//! Monte Carlo estimates of the same expectations, for laws or sizes that
//! cannot be enumerated. Draws are split into fixed batches, each with its
//! own random stream, and merged in batch order.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, DenseVector};
use crate::problem::{GaussianProblem, LeastSquaresProblem, Problem};
use crate::rng::stream;
use crate::samplers::{BlockSample, BlockSampler, SamplerKind};
use crate::solvers::MassMatrixKind;

/// Smallest accepted number of draws.
pub const MIN_DRAWS: usize = 1000;
const BATCH: usize = 512;

/// Running sums and sums of squares, entrywise.
#[derive(Clone, Debug)]
pub struct Moments {
    sum: Vec<f64>,
    sumsq: Vec<f64>,
    count: usize,
}

impl Moments {
    pub fn new(len: usize) -> Self {
        Moments {
            sum: vec![0.0; len],
            sumsq: vec![0.0; len],
            count: 0,
        }
    }

    pub fn add(&mut self, x: &[f64]) {
        for ((s, q), v) in self.sum.iter_mut().zip(&mut self.sumsq).zip(x) {
            *s += v;
            *q += v * v;
        }
        self.count += 1;
    }

    /// Records one draw whose nonzero entries are `entries`; others are zero.
    pub fn add_sparse(&mut self, entries: impl IntoIterator<Item = (usize, f64)>) {
        for (i, v) in entries {
            self.sum[i] += v;
            self.sumsq[i] += v * v;
        }
        self.count += 1;
    }

    pub fn merge(&mut self, other: &Moments) {
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.sumsq.iter_mut().zip(&other.sumsq) {
            *a += b;
        }
        self.count += other.count;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> Vec<f64> {
        let n = self.count.max(1) as f64;
        self.sum.iter().map(|s| s / n).collect()
    }

    /// Standard error of each entry's mean.
    pub fn std_error(&self) -> Vec<f64> {
        let n = self.count as f64;
        if self.count < 2 {
            return vec![f64::INFINITY; self.sum.len()];
        }
        self.sum
            .iter()
            .zip(&self.sumsq)
            .map(|(s, q)| {
                let var = ((q - s * s / n) / (n - 1.0)).max(0.0);
                (var / n).sqrt()
            })
            .collect()
    }
}

fn check_draws(draws: usize) -> Result<()> {
    if draws < MIN_DRAWS {
        return Err(Error::param(format!("Monte Carlo needs at least {MIN_DRAWS} draws, got {draws}")));
    }
    Ok(())
}

/// Runs `draw(acc, block, noise)` over `draws` sampled blocks in parallel batches.
fn sample_fold<A, I, F, M>(
    problem: &Problem,
    sampler: &SamplerKind,
    draws: usize,
    seed: u64,
    init: I,
    draw: F,
    mut merge: M,
) -> Result<A>
where
    A: Send,
    I: Fn() -> A + Sync,
    F: Fn(&mut A, &BlockSample, Option<&DenseVector>) -> Result<()> + Sync,
    M: FnMut(&mut A, A),
{
    check_draws(draws)?;
    let prepared = BlockSampler::new(problem, sampler)?;
    let batches = draws.div_ceil(BATCH);
    let partials: Vec<Result<A>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, b as u64);
            let mut acc = init();
            let len = BATCH.min(draws - b * BATCH);
            for _ in 0..len {
                match problem {
                    Problem::Gaussian(g) => {
                        let (block, noise) = g.sample_block_with_noise(sampler.k(), &mut rng);
                        draw(&mut acc, &block, Some(&noise))?;
                    }
                    Problem::Finite(_) => {
                        let block = prepared.next_block(problem, &mut rng)?;
                        draw(&mut acc, &block, None)?;
                    }
                }
            }
            Ok(acc)
        })
        .collect();
    let mut iter = partials.into_iter();
    let mut total = iter.next().expect("at least one batch")?;
    for p in iter {
        merge(&mut total, p?);
    }
    Ok(total)
}

fn matrix(n: usize, data: Vec<f64>) -> DenseMatrix {
    DenseMatrix::from_row_major(n, data.len() / n.max(1), data).expect("moments are finite")
}

/// Monte Carlo estimates for a finite problem.
#[derive(Clone, Debug)]
pub struct FiniteEstimate {
    pub w_bar: DenseMatrix,
    pub w_bar_se: DenseMatrix,
    pub p_bar: DenseMatrix,
    pub p_bar_se: DenseMatrix,
    pub g_bar: DenseVector,
    /// Largest `||A_S^+||^2` among the sampled blocks.
    pub max_block_pinv_sq: f64,
    pub draws: usize,
}

struct FiniteAcc {
    w: Moments,
    p: Moments,
    g: Moments,
    max_pinv_sq: f64,
}

pub fn montecarlo_finite(
    problem: &LeastSquaresProblem,
    mass: &MassMatrixKind,
    sampler: &SamplerKind,
    draws: usize,
    seed: u64,
) -> Result<FiniteEstimate> {
    mass.validate()?;
    let (m, n) = (problem.m(), problem.n());
    let wrapped = Problem::Finite(problem.clone());
    let acc = sample_fold(
        &wrapped,
        sampler,
        draws,
        seed,
        || FiniteAcc {
            w: Moments::new(m * m),
            p: Moments::new(n * n),
            g: Moments::new(n),
            max_pinv_sq: 0.0,
        },
        |acc, block, _| {
            let s = block.indices.as_ref().expect("finite blocks carry indices");
            let mm = mass.mass_matrix(&block.a_block)?;
            let mut entries = Vec::with_capacity(s.len() * s.len());
            for (i, &si) in s.iter().enumerate() {
                for (j, &sj) in s.iter().enumerate() {
                    entries.push((si * m + sj, mm[(i, j)]));
                }
            }
            acc.w.add_sparse(entries);
            acc.p.add(mass.update_operator(&block.a_block)?.as_slice());
            acc.g.add(&mass.update_direction(&block.a_block, &block.b_block)?);
            let sv = crate::linalg::singular_values(&block.a_block)?;
            let rank = crate::linalg::numerical_rank(
                &sv,
                crate::linalg::default_rank_tol(block.a_block.rows(), block.a_block.cols()),
            );
            let pinv = if rank == 0 { f64::INFINITY } else { sv[rank - 1].powi(-2) };
            acc.max_pinv_sq = acc.max_pinv_sq.max(pinv);
            Ok(())
        },
        |acc, part| {
            acc.w.merge(&part.w);
            acc.p.merge(&part.p);
            acc.g.merge(&part.g);
            acc.max_pinv_sq = acc.max_pinv_sq.max(part.max_pinv_sq);
        },
    )?;
    let mut w_bar = matrix(m, acc.w.mean());
    w_bar.symmetrize();
    let mut p_bar = matrix(n, acc.p.mean());
    p_bar.symmetrize();
    Ok(FiniteEstimate {
        w_bar,
        w_bar_se: matrix(m, acc.w.std_error()),
        p_bar,
        p_bar_se: matrix(n, acc.p.std_error()),
        g_bar: DenseVector::from_vec(acc.g.mean()),
        max_block_pinv_sq: acc.max_pinv_sq,
        draws,
    })
}

/// `E ||A_S^T M(A_S) r_S||^2` estimated from `draws` blocks.
pub fn montecarlo_variance(
    problem: &LeastSquaresProblem,
    mass: &MassMatrixKind,
    sampler: &SamplerKind,
    r: &DenseVector,
    draws: usize,
    seed: u64,
) -> Result<f64> {
    let wrapped = Problem::Finite(problem.clone());
    let acc = sample_fold(
        &wrapped,
        sampler,
        draws,
        seed,
        || Moments::new(1),
        |acc, block, _| {
            let s = block.indices.as_ref().expect("finite blocks carry indices");
            let d = mass.update_direction(&block.a_block, &r.select(s))?;
            acc.add(&[d.norm_sq()]);
            Ok(())
        },
        |acc, part| acc.merge(&part),
    )?;
    Ok(acc.mean()[0])
}

/// `P̄` (and `W̄` when blocks carry row indices) with entrywise standard errors.
#[derive(Clone, Debug)]
pub struct MonteCarloEstimate {
    pub p_bar: DenseMatrix,
    pub p_bar_se: DenseMatrix,
    pub w_bar: Option<DenseMatrix>,
    pub w_bar_se: Option<DenseMatrix>,
    pub draws: usize,
}

pub fn montecarlo_wbar_pbar(
    problem: &Problem,
    mass: &MassMatrixKind,
    sampler: &SamplerKind,
    draws: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    match problem {
        Problem::Finite(p) => {
            let e = montecarlo_finite(p, mass, sampler, draws, seed)?;
            Ok(MonteCarloEstimate {
                p_bar: e.p_bar,
                p_bar_se: e.p_bar_se,
                w_bar: Some(e.w_bar),
                w_bar_se: Some(e.w_bar_se),
                draws,
            })
        }
        Problem::Gaussian(g) => {
            let e = montecarlo_gaussian(g, sampler.k(), mass, draws, seed)?;
            Ok(MonteCarloEstimate {
                p_bar: e.p_bar,
                p_bar_se: e.p_bar_se,
                w_bar: None,
                w_bar_se: None,
                draws,
            })
        }
    }
}

/// Monte Carlo moments of the update on a Gaussian stream.
///
/// Because the planted solution is the limit point, the block residual at
/// `x*` is exactly the noise component of `b_S`, and the update's additive
/// term is `A_S^T M(A_S) noise_S`.
#[derive(Clone, Debug)]
pub struct GaussianEstimate {
    pub p_bar: DenseMatrix,
    pub p_bar_se: DenseMatrix,
    /// Mean of the additive term.
    pub additive_mean: DenseVector,
    pub additive_se: DenseVector,
    /// `E ||A_S^T M(A_S) noise_S||^2`
    pub variance_v: f64,
    pub variance_se: f64,
    pub draws: usize,
}

struct GaussAcc {
    p: Moments,
    t: Moments,
    v: Moments,
}

pub fn montecarlo_gaussian(
    g: &GaussianProblem,
    k: usize,
    mass: &MassMatrixKind,
    draws: usize,
    seed: u64,
) -> Result<GaussianEstimate> {
    mass.validate()?;
    let n = g.n();
    let wrapped = Problem::Gaussian(g.clone());
    let sampler = SamplerKind::GaussianStream { k };
    let acc = sample_fold(
        &wrapped,
        &sampler,
        draws,
        seed,
        || GaussAcc {
            p: Moments::new(n * n),
            t: Moments::new(n),
            v: Moments::new(1),
        },
        |acc, block, noise| {
            let noise = noise.expect("Gaussian draws report their noise");
            acc.p.add(mass.update_operator(&block.a_block)?.as_slice());
            let d = mass.update_direction(&block.a_block, noise)?;
            acc.v.add(&[d.norm_sq()]);
            acc.t.add(&d);
            Ok(())
        },
        |acc, part| {
            acc.p.merge(&part.p);
            acc.t.merge(&part.t);
            acc.v.merge(&part.v);
        },
    )?;
    let mut p_bar = matrix(n, acc.p.mean());
    p_bar.symmetrize();
    Ok(GaussianEstimate {
        p_bar,
        p_bar_se: matrix(n, acc.p.std_error()),
        additive_mean: DenseVector::from_vec(acc.t.mean()),
        additive_se: DenseVector::from_vec(acc.t.std_error()),
        variance_v: acc.v.mean()[0],
        variance_se: acc.v.std_error()[0],
        draws,
    })
}
