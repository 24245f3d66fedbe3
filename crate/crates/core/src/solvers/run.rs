use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::mass::{apply_update, MassMatrixKind};
use super::tail::TailAverager;
use crate::error::{Error, Result};
use crate::linalg::DenseVector;
use crate::problem::Problem;
use crate::rng::{reset_stream, seeded};
use crate::samplers::{BlockSample, BlockSampler, SamplerKind};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub mass: MassMatrixKind,
    pub sampler: SamplerKind,
    pub total_iters: usize,
    /// Iterates `x_1..=x_{T_b}` are excluded from the tail average.
    pub burn_in: usize,
    pub seed: u64,
    /// Starting point; zero when absent.
    #[serde(default)]
    pub x0: Option<DenseVector>,
    pub record_every: usize,
}

impl SolverConfig {
    /// Burn-in `T/2`, seed 0, about 200 records per run.
    pub fn new(mass: MassMatrixKind, sampler: SamplerKind, total_iters: usize) -> Self {
        SolverConfig {
            mass,
            sampler,
            total_iters,
            burn_in: total_iters / 2,
            seed: 0,
            x0: None,
            record_every: (total_iters / 200).max(1),
        }
    }

    pub fn k(&self) -> usize {
        self.sampler.k()
    }

    pub fn validate(&self) -> Result<()> {
        self.mass.validate()?;
        if self.total_iters == 0 {
            return Err(Error::param("total_iters must be at least 1"));
        }
        if self.burn_in >= self.total_iters {
            return Err(Error::param(format!(
                "burn-in {} must be below total_iters {}",
                self.burn_in, self.total_iters
            )));
        }
        if self.record_every == 0 {
            return Err(Error::param("record_every must be at least 1"));
        }
        if self.k() == 0 {
            return Err(Error::param("block size k must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub wall_seconds: f64,
    pub rel_err: Option<f64>,
    pub rel_residual: f64,
    pub tail_rel_err: Option<f64>,
    pub tail_rel_residual: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverTrace {
    pub records: Vec<TraceRecord>,
    pub final_x: DenseVector,
    pub final_tail_x: DenseVector,
}

pub const TRACE_CSV_HEADER: &str = "iter,wall_seconds,rel_err,rel_residual,tail_rel_err,tail_rel_residual";

impl SolverTrace {
    pub fn last(&self) -> &TraceRecord {
        self.records.last().expect("a trace always records the final iterate")
    }

    pub fn to_csv(&self) -> String {
        fn opt(out: &mut String, v: Option<f64>) {
            if let Some(v) = v {
                write!(out, "{v:?}").expect("writing to a String cannot fail");
            }
        }
        let mut out = String::from(TRACE_CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            write!(out, "{},{:?},", r.iter, r.wall_seconds).expect("writing to a String cannot fail");
            opt(&mut out, r.rel_err);
            write!(out, ",{:?},", r.rel_residual).expect("writing to a String cannot fail");
            opt(&mut out, r.tail_rel_err);
            out.push(',');
            opt(&mut out, r.tail_rel_residual);
            out.push('\n');
        }
        out
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

struct Metrics<'a> {
    problem: &'a Problem,
    x_star_norm: f64,
}

impl Metrics<'_> {
    fn rel_err(&self, x: &DenseVector) -> Option<f64> {
        self.problem.x_star().map(|xs| ratio(x.distance(xs), self.x_star_norm))
    }

    /// Full residual for finite problems; the given block's residual for streams.
    fn rel_residual(&self, x: &DenseVector, block: Option<&BlockSample>) -> f64 {
        match (self.problem, block) {
            (Problem::Finite(p), _) => p.relative_residual(x),
            (Problem::Gaussian(_), Some(b)) => {
                ratio(b.a_block.residual(x, &b.b_block).norm(), b.b_block.norm())
            }
            (Problem::Gaussian(_), None) => f64::NAN,
        }
    }
}

pub fn run(problem: &Problem, config: &SolverConfig) -> Result<SolverTrace> {
    run_observed(problem, config, |_, _| {})
}

/// Runs the iteration, calling `observe(t, x_t)` after every update.
///
/// Iteration `t` draws its block from stream `t` of the run's seed, so any
/// step can be replayed independently. Streaming problems estimate the
/// residual of `x_t` on the block that will produce `x_{t+1}`.
pub fn run_observed(
    problem: &Problem,
    config: &SolverConfig,
    mut observe: impl FnMut(usize, &DenseVector),
) -> Result<SolverTrace> {
    config.validate()?;
    let n = problem.n();
    let mut x = match &config.x0 {
        Some(x0) if x0.len() != n => {
            return Err(Error::dims("run", format!("x0 has length {}, problem has n = {n}", x0.len())))
        }
        Some(x0) => x0.clone(),
        None => DenseVector::zeros(n),
    };
    let sampler = BlockSampler::new(problem, &config.sampler)?;
    let streaming = matches!(problem, Problem::Gaussian(_));
    let metrics = Metrics {
        problem,
        x_star_norm: problem.x_star().map_or(0.0, |v| v.norm()),
    };
    let total = config.total_iters;
    let mut tail = TailAverager::new(config.burn_in);
    let mut rng = seeded(config.seed);
    let mut wall = 0.0;
    let mut records = Vec::with_capacity(total / config.record_every + 2);
    for t in 0..=total {
        let clock = Instant::now();
        let block = if t < total || streaming {
            reset_stream(&mut rng, t as u64 + 1);
            Some(sampler.next_block(problem, &mut rng).map_err(|e| e.at_iteration(t + 1))?)
        } else {
            None
        };
        wall += clock.elapsed().as_secs_f64();

        if t % config.record_every == 0 || t == total {
            let tail_mean = tail.mean();
            records.push(TraceRecord {
                iter: t,
                wall_seconds: wall,
                rel_err: metrics.rel_err(&x),
                rel_residual: metrics.rel_residual(&x, block.as_ref()),
                tail_rel_err: tail_mean.and_then(|m| metrics.rel_err(m)),
                tail_rel_residual: tail_mean.map(|m| metrics.rel_residual(m, block.as_ref())),
            });
        }
        let Some(block) = block.filter(|_| t < total) else {
            break;
        };

        let clock = Instant::now();
        x = apply_update(&x, &block, &config.mass).map_err(|e| e.at_iteration(t + 1))?;
        if !x.is_finite() {
            return Err(Error::Numeric("iterate became non-finite".into()).at_iteration(t + 1));
        }
        tail.push(t + 1, &x);
        wall += clock.elapsed().as_secs_f64();
        observe(t + 1, &x);
    }
    let final_tail_x = tail.mean().cloned().expect("burn-in is below total_iters");
    Ok(SolverTrace {
        records,
        final_x: x,
        final_tail_x,
    })
}
