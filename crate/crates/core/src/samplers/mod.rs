//! Block-sampling laws over row subsets.

mod combinations;
mod esp;
mod kdpp;
mod uniform;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, DenseVector};
use crate::problem::Problem;
use crate::rng::Rng;

pub use combinations::{
    binomial, check_enumerable, combination_at, for_each_in_range, next_combination, ENUMERATION_LIMIT,
};
pub use esp::{elem_sym, leave_one_out_ratios, log_prefix_table, ElemSymPolys};
pub use kdpp::{
    kdpp_log_weights, kdpp_probabilities_enumerate, normalize_log_weights, KDppEigenSampler,
    EIGEN_SAMPLER_MAX_ROWS,
};
pub use uniform::sample_uniform_subset;

/// A sampled block `S` with its rows `A_S` and `b_S`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockSample {
    /// Sorted row indices; absent for streaming samples.
    pub indices: Option<Vec<usize>>,
    pub a_block: DenseMatrix,
    pub b_block: DenseVector,
}

impl BlockSample {
    pub fn k(&self) -> usize {
        self.a_block.rows()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KDppMode {
    /// Tabulate the full law; exact but limited to small `C(m, k)`.
    Enumerate,
    /// Spectral two-phase sampler; `m` up to a few thousand.
    EigenSample,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SamplerKind {
    UniformSubsets { k: usize },
    GaussianStream { k: usize },
    KDpp { k: usize, lambda: f64, mode: KDppMode },
}

impl SamplerKind {
    pub fn k(&self) -> usize {
        match *self {
            SamplerKind::UniformSubsets { k } | SamplerKind::GaussianStream { k } | SamplerKind::KDpp { k, .. } => k,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SamplerKind::UniformSubsets { .. } => "uniform",
            SamplerKind::GaussianStream { .. } => "gaussian",
            SamplerKind::KDpp { .. } => "kdpp",
        }
    }
}

#[derive(Clone, Debug)]
enum Prepared {
    Uniform { m: usize },
    Gaussian,
    Table { m: usize, cumulative: Vec<f64> },
    Eigen(Box<KDppEigenSampler>),
}

/// A sampling law bound to a problem, with any precomputation cached.
#[derive(Clone, Debug)]
pub struct BlockSampler {
    kind: SamplerKind,
    prepared: Prepared,
}

impl BlockSampler {
    pub fn new(problem: &Problem, kind: &SamplerKind) -> Result<Self> {
        let k = kind.k();
        if k == 0 {
            return Err(Error::param("block size k must be at least 1"));
        }
        let prepared = match (kind, problem) {
            (SamplerKind::GaussianStream { .. }, Problem::Gaussian(_)) => Prepared::Gaussian,
            (SamplerKind::GaussianStream { .. }, Problem::Finite(_)) => {
                return Err(Error::param("the gaussian stream sampler needs a Gaussian problem"))
            }
            (_, Problem::Gaussian(_)) => {
                return Err(Error::param(format!(
                    "the {} sampler needs a finite problem; use the gaussian stream sampler",
                    kind.name()
                )))
            }
            (SamplerKind::UniformSubsets { .. }, Problem::Finite(p)) => {
                if k > p.m() {
                    return Err(Error::param(format!("block size k = {k} exceeds m = {}", p.m())));
                }
                Prepared::Uniform { m: p.m() }
            }
            (SamplerKind::KDpp { lambda, mode, .. }, Problem::Finite(p)) => match mode {
                KDppMode::Enumerate => {
                    let probs = normalize_log_weights(&kdpp_log_weights(&p.a, k, *lambda)?);
                    let mut acc = 0.0;
                    let cumulative = probs
                        .iter()
                        .map(|v| {
                            acc += v;
                            acc
                        })
                        .collect();
                    Prepared::Table { m: p.m(), cumulative }
                }
                KDppMode::EigenSample => Prepared::Eigen(Box::new(KDppEigenSampler::new(&p.a, k, *lambda)?)),
            },
        };
        Ok(BlockSampler {
            kind: kind.clone(),
            prepared,
        })
    }

    pub fn kind(&self) -> &SamplerKind {
        &self.kind
    }

    /// Draws the next block.
    pub fn next_block(&self, problem: &Problem, rng: &mut Rng) -> Result<BlockSample> {
        let k = self.kind.k();
        let indices = match &self.prepared {
            Prepared::Gaussian => {
                let g = problem
                    .as_gaussian()
                    .ok_or_else(|| Error::param("sampler was prepared for a Gaussian problem"))?;
                return Ok(g.sample_block(k, rng));
            }
            Prepared::Uniform { m } => sample_uniform_subset(*m, k, rng)?,
            Prepared::Table { m, cumulative } => {
                let total = *cumulative.last().expect("at least one subset");
                let u = rng.random::<f64>() * total;
                let rank = cumulative.partition_point(|&c| c <= u).min(cumulative.len() - 1);
                combination_at(*m, k, rank as u64)
            }
            Prepared::Eigen(s) => s.sample(rng),
        };
        let p = problem
            .as_finite()
            .ok_or_else(|| Error::param("sampler was prepared for a finite problem"))?;
        if indices.last().is_some_and(|&i| i >= p.m()) {
            return Err(Error::param("sampler was prepared for a larger problem"));
        }
        Ok(p.block(indices))
    }
}

/// One-shot draw; prefer [`BlockSampler`] when drawing repeatedly, since k-DPP
/// laws are precomputed at construction.
pub fn next_block(problem: &Problem, sampler: &SamplerKind, rng: &mut Rng) -> Result<BlockSample> {
    BlockSampler::new(problem, sampler)?.next_block(problem, rng)
}
