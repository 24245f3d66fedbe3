//! Theorem-bound ledgers for enumerated oracle reports.

use super::enumerate::{pbar_consistency, SubsetLaw, PBAR_CONSISTENCY_TOL};
use super::ledger::{BoundEntry, BoundLedger, Relation};
use super::report::{OracleMode, OracleReport};
use crate::error::{Error, Result};
use crate::linalg::{default_rank_tol, qr_lstsq, singular_values, sym_eigen, DenseVector};
use crate::problem::LeastSquaresProblem;
use crate::solvers::MassMatrixKind;

/// Tolerance for the weighted normal equations, relative to
/// `||A||_F ||W̄||_F ||b||`.
pub const NORMAL_EQUATIONS_TOL: f64 = 1e-9;

/// Spectral facts about `A` and its least-squares residual.
#[derive(Clone, Debug)]
pub struct ProblemStats {
    pub singular_values: Vec<f64>,
    pub rank: usize,
    /// `||A^+|| = 1 / sigma_min^+(A)`
    pub pinv_norm: f64,
    /// `sigma_max / sigma_min^+`
    pub kappa_a: f64,
    pub x_star: DenseVector,
    /// `||b - A x*||`
    pub residual_norm: f64,
    pub max_row_norm_sq: f64,
}

impl ProblemStats {
    pub fn new(problem: &LeastSquaresProblem) -> Result<Self> {
        let s = singular_values(&problem.a)?;
        let rank = crate::linalg::numerical_rank(&s, default_rank_tol(problem.m(), problem.n()));
        let (pinv_norm, kappa_a) = if rank == 0 {
            (0.0, f64::INFINITY)
        } else {
            (1.0 / s[rank - 1], s[0] / s[rank - 1])
        };
        let x_star = match &problem.x_star {
            Some(x) => x.clone(),
            None => qr_lstsq(&problem.a, &problem.b)?,
        };
        let residual_norm = problem.a.residual(&x_star, &problem.b).norm();
        let max_row_norm_sq = problem.a.row_norms_sq().into_iter().fold(0.0, f64::max);
        Ok(ProblemStats {
            singular_values: s,
            rank,
            pinv_norm,
            kappa_a,
            x_star,
            residual_norm,
            max_row_norm_sq,
        })
    }
}

/// Structural identities every report must satisfy, whatever the mass.
pub fn check_report_invariants(problem: &LeastSquaresProblem, report: &OracleReport) -> Result<BoundLedger> {
    let mut ledger = BoundLedger::new();
    let a = &problem.a;
    let ne = a.tr_mul_vec(&report.w_bar.mul_vec(&report.r_rho)).norm();
    let scale = a.frobenius_norm() * report.w_bar.frobenius_norm() * problem.b.norm();
    let ne_rel = if scale > 0.0 { ne / scale } else { ne };
    ledger.push(BoundEntry::new("normal_equations", Relation::AtMost, NORMAL_EQUATIONS_TOL, ne_rel, 0.0));

    let eig = sym_eigen(&report.p_bar)?;
    let lmax = eig.values.first().copied().unwrap_or(0.0);
    let lmin = eig.values.last().copied().unwrap_or(0.0);
    ledger.push(BoundEntry::new("pbar_upper", Relation::AtMost, 1.0, lmax, 1e-9));
    ledger.push(BoundEntry::new("pbar_lower", Relation::AtLeast, 0.0, lmin, 1e-9));

    let cons = pbar_consistency(a, &report.w_bar, &report.p_bar)?;
    let cons_tol = match report.mode {
        OracleMode::Enumerate { .. } => PBAR_CONSISTENCY_TOL,
        // Sampling error in W̄ and P̄ enters the identity at first order.
        OracleMode::MonteCarlo { .. } => f64::INFINITY,
    };
    ledger.push(BoundEntry::new("pbar_consistency", Relation::AtMost, cons_tol, cons, 0.0));

    let rank_a = report.rank_a;
    let rank_p = crate::linalg::numerical_rank(&eig.values, 1e-12);
    ledger.push(BoundEntry::new(
        "range_rank_gap",
        Relation::AtMost,
        0.0,
        (rank_p as f64 - rank_a as f64).abs(),
        0.0,
    ));
    Ok(ledger)
}

fn require_enumerated_uniform(report: &OracleReport, expected: &str) -> Result<()> {
    if !matches!(report.mode, OracleMode::Enumerate { .. }) {
        return Err(Error::param("theorem bounds are checked on enumerated reports only"));
    }
    if report.law != SubsetLaw::Uniform {
        return Err(Error::param("these theorem bounds are stated for uniform block sampling"));
    }
    if report.mass.name() != expected {
        return Err(Error::param(format!(
            "report was computed for {}, not {expected}",
            report.mass.name()
        )));
    }
    Ok(())
}

/// Shared residual and bias entries.
fn residual_and_bias(ledger: &mut BoundLedger, stats: &ProblemStats, report: &OracleReport) {
    let r = stats.residual_norm;
    ledger.upper("weighted_residual", report.kappa_w.sqrt() * r, report.r_rho.norm());
    ledger.upper(
        "bias",
        (report.kappa_w - 1.0).max(0.0).sqrt() * stats.pinv_norm * r,
        report.bias_norm,
    );
}

/// Bounds for randomized block Kaczmarz under uniform sampling.
///
/// Returns a theorem-violation error carrying the full ledger if any entry fails.
pub fn check_bounds_rbk(problem: &LeastSquaresProblem, report: &OracleReport) -> Result<BoundLedger> {
    require_enumerated_uniform(report, "rbk")?;
    let stats = ProblemStats::new(problem)?;
    let mut ledger = check_report_invariants(problem, report)?;
    let k = report.k as f64;
    let m = problem.m() as f64;
    let r = stats.residual_norm;
    ledger.upper(
        "kappa_w",
        k * stats.max_row_norm_sq * report.max_block_pinv_sq,
        report.kappa_w,
    );
    residual_and_bias(&mut ledger, &stats, report);
    ledger.upper(
        "variance",
        report.max_block_pinv_sq * report.kappa_w * k * r * r / m,
        report.variance_v,
    );
    ledger.into_result()
}

/// Bounds for ReBlocK under uniform sampling.
pub fn check_bounds_reblock(problem: &LeastSquaresProblem, report: &OracleReport) -> Result<BoundLedger> {
    require_enumerated_uniform(report, "reblock")?;
    let MassMatrixKind::ReBlocK { lambda } = report.mass else {
        unreachable!("mass name checked above");
    };
    let stats = ProblemStats::new(problem)?;
    let mut ledger = check_report_invariants(problem, report)?;
    let m = problem.m() as f64;
    let r = stats.residual_norm;
    ledger.upper("kappa_w", 1.0 + stats.max_row_norm_sq / lambda, report.kappa_w);
    residual_and_bias(&mut ledger, &stats, report);
    ledger.upper("bias_loose", stats.kappa_a * r / lambda.sqrt(), report.bias_norm);
    ledger.upper(
        "variance_residual",
        report.r_rho.norm_sq() / (4.0 * lambda * m),
        report.variance_v,
    );
    ledger.upper("variance", report.kappa_w * r * r / (4.0 * lambda * m), report.variance_v);
    ledger.into_result()
}

/// Dispatches on the report's mass kind.
pub fn check_bounds(problem: &LeastSquaresProblem, report: &OracleReport) -> Result<BoundLedger> {
    match report.mass {
        MassMatrixKind::Rbk { .. } => check_bounds_rbk(problem, report),
        MassMatrixKind::ReBlocK { .. } => check_bounds_reblock(problem, report),
        MassMatrixKind::MSgd { .. } => check_report_invariants(problem, report)?.into_result(),
    }
}
