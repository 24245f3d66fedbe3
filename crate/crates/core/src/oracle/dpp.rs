//! Closed forms for ReBlocK under k-DPP sampling.

use super::enumerate::SubsetLaw;
use super::ledger::{BoundEntry, BoundLedger, Relation};
use super::report::{compute_oracle, OracleReport};
use super::weighted::{convergence_alpha, weighted_solution};
use crate::error::{Error, Result};
use crate::linalg::{default_rank_tol, svd, DenseMatrix};
use crate::problem::LeastSquaresProblem;
use crate::samplers::{leave_one_out_ratios, KDppMode, SamplerKind};
use crate::solvers::MassMatrixKind;

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda > 0.0 {
        Ok(())
    } else {
        Err(Error::param(format!("lambda must be positive, got {lambda}")))
    }
}

/// `W̄ = U diag(p_{k-1}(q_{-i}))_i U^T / p_k(q)` with `q_i = sigma_i^2 + lambda k`
/// for `i <= rank` and `lambda k` otherwise, `U` the full left singular basis.
pub fn dpp_wbar_closed_form(problem: &LeastSquaresProblem, k: usize, lambda: f64) -> Result<DenseMatrix> {
    check_lambda(lambda)?;
    let m = problem.m();
    if k == 0 || k > m {
        return Err(Error::param(format!("block size k = {k} must satisfy 1 <= k <= m = {m}")));
    }
    let s = svd(&problem.a)?;
    let rank = s.rank(default_rank_tol(m, problem.n()));
    let shift = lambda * k as f64;
    let q: Vec<f64> = (0..m)
        .map(|i| if i < rank { s.singular_values[i].powi(2) + shift } else { shift })
        .collect();
    let d = leave_one_out_ratios(&q, k)?;
    let u = &s.u;
    let mut w = DenseMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..=i {
            let v: f64 = (0..m).map(|l| u[(i, l)] * d[l] * u[(j, l)]).sum();
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
    }
    Ok(w)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DppAlphaBound {
    pub ell: usize,
    /// `(k-l) / ((k-l) + kappa_l^2 + (m+k-2l) lambda k / sigma_r^2)`
    pub bound: f64,
    /// `sum_{l < j <= rank} sigma_j^2 / sigma_r^2`
    pub kappa_ell_sq: f64,
    /// `||A||_F^2 / sigma_r^2`
    pub kappa_dem_sq: f64,
}

pub fn dpp_alpha_bound(problem: &LeastSquaresProblem, k: usize, lambda: f64, ell: usize) -> Result<DppAlphaBound> {
    check_lambda(lambda)?;
    if ell == 0 || ell >= k {
        return Err(Error::param(format!("ell must satisfy 1 <= ell < k = {k}, got {ell}")));
    }
    let s = crate::linalg::singular_values(&problem.a)?;
    let rank = crate::linalg::numerical_rank(&s, default_rank_tol(problem.m(), problem.n()));
    if rank == 0 {
        return Err(Error::param("A is numerically zero"));
    }
    let sr2 = s[rank - 1].powi(2);
    let kappa_ell_sq: f64 = s[ell.min(rank)..rank].iter().map(|v| v * v).sum::<f64>() / sr2;
    let kappa_dem_sq = problem.a.frobenius_norm().powi(2) / sr2;
    let (m, kf, lf) = (problem.m() as f64, k as f64, ell as f64);
    let bound = (kf - lf) / ((kf - lf) + kappa_ell_sq + (m + kf - 2.0 * lf) * lambda * kf / sr2);
    Ok(DppAlphaBound {
        ell,
        bound,
        kappa_ell_sq,
        kappa_dem_sq,
    })
}

/// Enumerated oracle for ReBlocK under the exact k-DPP law, cross-checked
/// against the closed forms.
pub fn check_dpp(problem: &LeastSquaresProblem, k: usize, lambda: f64) -> Result<(BoundLedger, OracleReport)> {
    let mass = MassMatrixKind::ReBlocK { lambda };
    let sampler = SamplerKind::KDpp {
        k,
        lambda,
        mode: KDppMode::Enumerate,
    };
    let report = compute_oracle(problem, k, &mass, &sampler)?;
    debug_assert_eq!(report.law, SubsetLaw::KDpp { lambda });
    let mut ledger = super::bounds::check_report_invariants(problem, &report)?;

    let closed = dpp_wbar_closed_form(problem, k, lambda)?;
    let rel = closed.sub(&report.w_bar).frobenius_norm() / report.w_bar.frobenius_norm();
    ledger.push(BoundEntry::new("closed_form_wbar", Relation::AtMost, 1e-9, rel, 0.0));

    let stats = super::bounds::ProblemStats::new(problem)?;
    let (x_closed, _) = weighted_solution(problem, &closed)?;
    ledger.push(BoundEntry::new(
        "x_rho_closed_form_is_ols",
        Relation::AtMost,
        1e-8,
        x_closed.distance(&stats.x_star),
        0.0,
    ));
    ledger.push(BoundEntry::new(
        "x_rho_enumerated_is_ols",
        Relation::AtMost,
        1e-8,
        report.x_rho.distance(&stats.x_star),
        0.0,
    ));

    let p_closed = problem.a.transpose().matmul(&closed.matmul(&problem.a)?)?;
    let alpha_closed = convergence_alpha(&p_closed, stats.rank)?;
    for ell in 1..k {
        let b = dpp_alpha_bound(problem, k, lambda, ell)?;
        ledger.lower(format!("alpha_ell_{ell}"), b.bound, alpha_closed);
    }

    let r = problem.a.residual(&stats.x_star, &problem.b);
    let max_r2 = r.iter().map(|v| v * v).fold(0.0, f64::max);
    ledger.upper("variance", max_r2 / (4.0 * lambda), report.variance_v);
    Ok((ledger.into_result()?, report))
}
