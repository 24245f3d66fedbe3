use std::path::{Path, PathBuf};

use rayon::prelude::*;
use rowsolve::problem::Problem;
use rowsolve::samplers::SamplerKind;
use rowsolve::solvers::{run, MassMatrixKind, SolverTrace};
use serde::Serialize;

use crate::config::{
    load_experiment_config, EtaGrid, ExperimentConfig, GeneratorSpec, MassParams, ProblemSource, SolverSpec,
};
use crate::error::{CliError, CliResult};
use crate::generate::{build_problem, summarize, ProblemSummary};
use crate::oracle::write_json;
use crate::SolveArgs;

/// A run is unstable once its relative residual exceeds this multiple of
/// the initial one.
pub const INSTABILITY_FACTOR: f64 = 10.0;

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    /// Zero the wall_seconds column.
    pub no_wall_clock: bool,
    /// Print one line per finished run.
    pub verbose: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunResult {
    pub seed: u64,
    /// Trace file name relative to the output directory.
    pub csv: Option<String>,
    pub error: Option<String>,
    pub rel_err: Option<f64>,
    pub tail_rel_err: Option<f64>,
    pub rel_residual: Option<f64>,
    pub tail_rel_residual: Option<f64>,
}

/// Mean and sample standard deviation over successful runs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Stat> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(Stat {
            mean,
            std,
            count: values.len(),
        })
    }

    fn over(runs: &[RunResult], field: impl Fn(&RunResult) -> Option<f64>) -> Option<Stat> {
        let ok: Vec<&RunResult> = runs.iter().filter(|r| r.error.is_none()).collect();
        let values: Option<Vec<f64>> = ok.iter().map(|r| field(r)).collect();
        Stat::of(&values?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverSummary {
    pub label: String,
    pub mass: MassMatrixKind,
    pub sampler: SamplerKind,
    pub k: usize,
    #[serde(rename = "T")]
    pub total_iters: usize,
    #[serde(rename = "T_b")]
    pub burn_in: usize,
    /// Step size chosen by `tune_eta`.
    pub tuned_eta: Option<f64>,
    pub failed: usize,
    pub rel_err: Option<Stat>,
    pub tail_rel_err: Option<Stat>,
    pub rel_residual: Option<Stat>,
    pub tail_rel_residual: Option<Stat>,
    pub runs: Vec<RunResult>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub problem: ProblemSummary,
    pub solvers: Vec<SolverSummary>,
}

impl ExperimentSummary {
    pub fn solver(&self, label: &str) -> Option<&SolverSummary> {
        self.solvers.iter().find(|s| s.label == label)
    }
}

pub fn load_source(source: &ProblemSource) -> CliResult<Problem> {
    match source {
        ProblemSource::Path(path) => build_problem(&GeneratorSpec::Load { path: path.clone() }),
        ProblemSource::Inline(spec) => build_problem(spec),
    }
}

fn max_residual_ratio(trace: &SolverTrace) -> f64 {
    let first = trace.records[0].rel_residual;
    let worst = trace.records.iter().map(|r| r.rel_residual).fold(0.0, f64::max);
    if first > 0.0 {
        worst / first
    } else {
        worst
    }
}

fn is_stable(result: &rowsolve::Result<SolverTrace>) -> bool {
    match result {
        Ok(trace) => {
            let ratio = max_residual_ratio(trace);
            ratio.is_finite() && ratio <= INSTABILITY_FACTOR
        }
        Err(_) => false,
    }
}

/// The largest candidate of `grid` for which a full-length pilot run on the
/// solver's first seed stays stable. Candidates are tried in increasing
/// order and the search stops at the first unstable one.
pub fn tune_eta(problem: &Problem, spec: &SolverSpec, grid: EtaGrid, record_every: Option<usize>) -> CliResult<f64> {
    let streaming = matches!(problem, Problem::Gaussian(_));
    let mut best = None;
    for eta in grid.candidates() {
        let cfg = spec.solver_config(streaming, Some(eta), spec.seeds[0], record_every)?;
        if !is_stable(&run(problem, &cfg)) {
            break;
        }
        best = Some(eta);
    }
    best.ok_or_else(|| {
        CliError::Numeric(format!(
            "no stable step size in grid:{}..{} for solver '{}'",
            grid.lo,
            grid.hi,
            spec.label()
        ))
    })
}

fn finish_trace(mut trace: SolverTrace, opts: RunOptions) -> SolverTrace {
    if opts.no_wall_clock {
        for r in &mut trace.records {
            r.wall_seconds = 0.0;
        }
    }
    trace
}

fn run_solver(
    problem: &Problem,
    spec: &SolverSpec,
    record_every: Option<usize>,
    out: &Path,
    opts: RunOptions,
) -> CliResult<SolverSummary> {
    let streaming = matches!(problem, Problem::Gaussian(_));
    let tuned_eta = match &spec.params.tune_eta {
        Some(g) => Some(tune_eta(problem, spec, g.parse().map_err(CliError::Usage)?, record_every)?),
        None => None,
    };
    let label = spec.label();
    let first = spec.solver_config(streaming, tuned_eta, spec.seeds[0], record_every)?;
    let runs: Vec<RunResult> = spec
        .seeds
        .par_iter()
        .map(|&seed| -> CliResult<RunResult> {
            let cfg = spec.solver_config(streaming, tuned_eta, seed, record_every)?;
            let mut result = RunResult {
                seed,
                csv: None,
                error: None,
                rel_err: None,
                tail_rel_err: None,
                rel_residual: None,
                tail_rel_residual: None,
            };
            match run(problem, &cfg) {
                Ok(trace) => {
                    let trace = finish_trace(trace, opts);
                    let name = format!("{label}_seed{seed}.csv");
                    let path = out.join(&name);
                    std::fs::write(&path, trace.to_csv()).map_err(|e| CliError::io(&path, e))?;
                    let last = trace.last();
                    result.csv = Some(name);
                    result.rel_err = last.rel_err;
                    result.tail_rel_err = last.tail_rel_err;
                    result.rel_residual = Some(last.rel_residual);
                    result.tail_rel_residual = last.tail_rel_residual;
                    if opts.verbose {
                        println!(
                            "{label} seed {seed}: tail_rel_err={:?} tail_rel_residual={:?}",
                            last.tail_rel_err, last.tail_rel_residual
                        );
                    }
                }
                Err(e) => {
                    if opts.verbose {
                        eprintln!("{label} seed {seed} failed: {e}");
                    }
                    result.error = Some(e.to_string());
                }
            }
            Ok(result)
        })
        .collect::<CliResult<_>>()?;
    Ok(SolverSummary {
        label,
        mass: first.mass,
        sampler: first.sampler,
        k: spec.k,
        total_iters: spec.total_iters,
        burn_in: first.burn_in,
        tuned_eta,
        failed: runs.iter().filter(|r| r.error.is_some()).count(),
        rel_err: Stat::over(&runs, |r| r.rel_err),
        tail_rel_err: Stat::over(&runs, |r| r.tail_rel_err),
        rel_residual: Stat::over(&runs, |r| r.rel_residual),
        tail_rel_residual: Stat::over(&runs, |r| r.tail_rel_residual),
        runs,
    })
}

/// Runs every solver of `config` on `problem`, writing traces and
/// `summary.json` under `out`. Fails with a numeric error only when every
/// run failed.
pub fn run_experiment_on(
    problem: &Problem,
    config: &ExperimentConfig,
    out: &Path,
    opts: RunOptions,
) -> CliResult<ExperimentSummary> {
    config.validate()?;
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let solvers = config
        .solvers
        .iter()
        .map(|s| run_solver(problem, s, config.record_every, out, opts))
        .collect::<CliResult<Vec<_>>>()?;
    let summary = ExperimentSummary {
        problem: summarize(problem)?,
        solvers,
    };
    write_json(out, "summary.json", &summary)?;
    let total: usize = summary.solvers.iter().map(|s| s.runs.len()).sum();
    let failed: usize = summary.solvers.iter().map(|s| s.failed).sum();
    if failed == total {
        return Err(CliError::Numeric(format!("all {total} runs failed")));
    }
    Ok(summary)
}

pub fn run_experiment(config: &ExperimentConfig, out: &Path, opts: RunOptions) -> CliResult<ExperimentSummary> {
    config.validate()?;
    let problem = load_source(&config.problem)?;
    run_experiment_on(&problem, config, out, opts)
}

fn config_from_flags(a: &SolveArgs) -> CliResult<ExperimentConfig> {
    let problem = a
        .problem
        .clone()
        .ok_or_else(|| CliError::Usage("give --config FILE or --problem DIR".into()))?;
    let mut spec = a.mass.spec()?;
    spec.name = a.name.clone();
    spec.params = MassParams {
        tune_eta: a.tune_eta.clone(),
        ..spec.params
    };
    spec.total_iters = a.total_iters.ok_or_else(|| CliError::Usage("--T is required".into()))?;
    spec.burn_in = a.burn_in;
    spec.tb_frac = a.tb_frac;
    spec.seeds = a.seeds.clone();
    Ok(ExperimentConfig {
        problem: ProblemSource::Path(problem),
        solvers: vec![spec],
        outputs: None,
        record_every: a.record_every,
    })
}

pub fn cmd_solve(a: &SolveArgs) -> CliResult<()> {
    let mut config = match &a.config {
        Some(path) => load_experiment_config(path)?,
        None => config_from_flags(a)?,
    };
    if a.record_every.is_some() {
        config.record_every = a.record_every;
    }
    let out: PathBuf = a
        .out
        .clone()
        .or_else(|| config.outputs.clone())
        .ok_or_else(|| CliError::Usage("give --out DIR or set outputs in the config".into()))?;
    let opts = RunOptions {
        no_wall_clock: a.no_wall_clock,
        verbose: true,
    };
    let summary = run_experiment(&config, &out, opts)?;
    for s in &summary.solvers {
        let fmt = |st: Option<Stat>| st.map_or("n/a".to_string(), |st| format!("{:.4e} ± {:.2e}", st.mean, st.std));
        print!("{}: tail_rel_err {} tail_rel_residual {}", s.label, fmt(s.tail_rel_err), fmt(s.tail_rel_residual));
        if let Some(eta) = s.tuned_eta {
            print!(" eta={eta:e}");
        }
        if s.failed > 0 {
            print!(" ({} of {} runs failed)", s.failed, s.runs.len());
        }
        println!();
    }
    println!("wrote {}", out.join("summary.json").display());
    Ok(())
}
