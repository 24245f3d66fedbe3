use std::path::Path;

use rowsolve::oracle::{
    check_bounds, check_gaussian_identity, check_report_invariants, compute_oracle, compute_oracle_montecarlo,
    convergence_alpha, gaussian_alpha_bound, gaussian_variance_bound, montecarlo_gaussian, msgd_alpha_bound,
    BoundLedger, OracleMode, OracleReport, SubsetLaw,
};
use rowsolve::problem::{load_bundle, GaussianProblem, LeastSquaresProblem, Problem};
use rowsolve::samplers::SamplerKind;
use rowsolve::solvers::MassMatrixKind;
use rowsolve::DenseVector;
use serde::Serialize;

use crate::config::SolverSpec;
use crate::error::{CliError, CliResult};
use crate::{MassArgs, OracleArgs, OracleModeArg};

impl MassArgs {
    /// A one-iteration solver spec carrying the mass, sampler and `k`.
    pub fn spec(&self) -> CliResult<SolverSpec> {
        let mass = self.mass.ok_or_else(|| CliError::Usage("--mass is required".into()))?;
        let k = self.k.ok_or_else(|| CliError::Usage("--k is required".into()))?;
        if k == 0 {
            return Err(CliError::Usage("--k must be at least 1".into()));
        }
        Ok(SolverSpec {
            name: None,
            mass,
            params: crate::config::MassParams {
                lambda: self.lambda,
                eta: self.eta,
                rank_tol: self.rank_tol,
                tune_eta: None,
            },
            sampler: self.sampler,
            k,
            total_iters: 1,
            burn_in: None,
            tb_frac: None,
            seeds: vec![0],
        })
    }
}

pub fn compute_report(
    problem: &LeastSquaresProblem,
    mass: &MassMatrixKind,
    sampler: &SamplerKind,
    mode: OracleModeArg,
    draws: usize,
    seed: u64,
) -> CliResult<OracleReport> {
    let k = sampler.k();
    Ok(match mode {
        OracleModeArg::Enumerate => compute_oracle(problem, k, mass, sampler)?,
        OracleModeArg::Montecarlo => compute_oracle_montecarlo(problem, k, mass, sampler, draws, seed)?,
    })
}

/// Every bound that applies to the report. Theorem bounds need an
/// enumerated uniform-law report; other reports get the structural checks.
/// A failing ledger is returned, not raised.
pub fn ledger_for(problem: &LeastSquaresProblem, report: &OracleReport) -> CliResult<BoundLedger> {
    let theorem = report.law == SubsetLaw::Uniform && matches!(report.mode, OracleMode::Enumerate { .. });
    let result = if theorem {
        check_bounds(problem, report)
    } else {
        check_report_invariants(problem, report)
    };
    match result {
        Ok(l) => Ok(l),
        Err(rowsolve::Error::TheoremViolation(l)) => Ok(*l),
        Err(e) => Err(e.into()),
    }
}

/// `oracle.json` for streaming Gaussian problems.
#[derive(Clone, Debug, Serialize)]
pub struct GaussianOracleDocument {
    pub mass: MassMatrixKind,
    pub k: usize,
    pub draws: usize,
    pub alpha: f64,
    /// Lower bound on `alpha` for RBK.
    pub alpha_bound: f64,
    /// The same bound for mSGD with the largest stable step.
    pub msgd_alpha_bound: f64,
    pub variance_v: f64,
    pub variance_se: f64,
    pub variance_bound: Option<f64>,
    pub additive_mean: DenseVector,
    pub additive_se: DenseVector,
    pub ledger: Option<BoundLedger>,
}

pub fn gaussian_document(
    g: &GaussianProblem,
    mass: &MassMatrixKind,
    k: usize,
    draws: usize,
    seed: u64,
) -> CliResult<GaussianOracleDocument> {
    let (ledger, est) = if matches!(mass, MassMatrixKind::Rbk { .. }) {
        match check_gaussian_identity(g, k, draws, seed) {
            Ok((l, est)) => (Some(l), est),
            // Variance-bound hypotheses not met: report without the ledger.
            Err(rowsolve::Error::InvalidParameter(_)) => (None, montecarlo_gaussian(g, k, mass, draws, seed)?),
            Err(e) => return Err(e.into()),
        }
    } else {
        (None, montecarlo_gaussian(g, k, mass, draws, seed)?)
    };
    Ok(GaussianOracleDocument {
        mass: *mass,
        k,
        draws,
        alpha: convergence_alpha(&est.p_bar, g.n())?,
        alpha_bound: gaussian_alpha_bound(&g.spectrum, k),
        msgd_alpha_bound: msgd_alpha_bound(&g.spectrum, k),
        variance_v: est.variance_v,
        variance_se: est.variance_se,
        variance_bound: gaussian_variance_bound(&g.spectrum, k, g.noise_std).ok(),
        additive_mean: est.additive_mean,
        additive_se: est.additive_se,
        ledger,
    })
}

pub(crate) fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join(name);
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Numeric(e.to_string()))?;
    std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))
}

pub fn cmd_oracle(a: &OracleArgs) -> CliResult<()> {
    let spec = a.mass.spec()?;
    let mass = spec.mass_kind(None)?;
    match load_bundle(&a.problem)? {
        Problem::Finite(p) => {
            let sampler = spec.sampler_kind(false)?;
            let report = compute_report(&p, &mass, &sampler, a.mode, a.draws, a.seed)?;
            let ledger = ledger_for(&p, &report)?;
            let doc = report.document(ledger);
            let s = &doc.summary;
            println!(
                "mass={} law={:?} k={} alpha={:.6e} kappa_w={:.6e} bias={:.6e} r_rho_norm={:.6e} V={:.6e}",
                mass.name(),
                s.law,
                s.k,
                s.alpha,
                s.kappa_w,
                s.bias,
                s.r_rho_norm,
                s.variance_v
            );
            println!("x_rho={:?}", s.x_rho);
            print!("{}", s.ledger);
            if let Some(dir) = &a.out {
                write_json(dir, "oracle.json", &doc)?;
            }
        }
        Problem::Gaussian(g) => {
            let doc = gaussian_document(&g, &mass, spec.k, a.draws, a.seed)?;
            println!(
                "mass={} k={} draws={} alpha={:.6e} alpha_bound={:.6e} V={:.6e}",
                mass.name(),
                doc.k,
                doc.draws,
                doc.alpha,
                doc.alpha_bound,
                doc.variance_v
            );
            if let Some(l) = &doc.ledger {
                print!("{l}");
            }
            if let Some(dir) = &a.out {
                write_json(dir, "oracle.json", &doc)?;
            }
        }
    }
    Ok(())
}
