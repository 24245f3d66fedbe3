use serde::{Deserialize, Serialize};

use super::enumerate::{enumerate_variance, enumerate_wbar_pbar, SubsetLaw};
use super::ledger::{maybe_infinite, BoundLedger};
use super::montecarlo::montecarlo_finite;
use super::weighted::{condition_number_psd, convergence_alpha, limit_solution, matrix_rank};
use crate::error::Result;
use crate::linalg::{DenseMatrix, DenseVector};
use crate::problem::LeastSquaresProblem;
use crate::samplers::SamplerKind;
use crate::solvers::MassMatrixKind;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OracleMode {
    Enumerate {
        subsets: u64,
    },
    MonteCarlo {
        draws: usize,
        /// Frobenius norm of the entrywise standard errors of P̄.
        p_bar_std_error: f64,
        /// Frobenius norm of the entrywise standard errors of W̄.
        w_bar_std_error: f64,
    },
}

/// Every limit quantity of the iteration for one problem, mass and law.
#[derive(Clone, Debug)]
pub struct OracleReport {
    pub mass: MassMatrixKind,
    pub law: SubsetLaw,
    pub k: usize,
    pub w_bar: DenseMatrix,
    pub p_bar: DenseMatrix,
    /// `E[A_S^T M(A_S) b_S]`
    pub g_bar: DenseVector,
    pub x_rho: DenseVector,
    pub r_rho: DenseVector,
    pub alpha: f64,
    pub kappa_w: f64,
    pub variance_v: f64,
    /// `||x^(rho) - x*||`
    pub bias_norm: f64,
    pub max_block_pinv_sq: f64,
    pub rank_a: usize,
    pub mode: OracleMode,
}

fn ols(problem: &LeastSquaresProblem) -> Result<DenseVector> {
    match &problem.x_star {
        Some(x) => Ok(x.clone()),
        None => crate::linalg::qr_lstsq(&problem.a, &problem.b),
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    problem: &LeastSquaresProblem,
    k: usize,
    mass: &MassMatrixKind,
    law: SubsetLaw,
    w_bar: DenseMatrix,
    p_bar: DenseMatrix,
    g_bar: DenseVector,
    max_block_pinv_sq: f64,
    mode: OracleMode,
    variance: impl FnOnce(&DenseVector) -> Result<f64>,
) -> Result<OracleReport> {
    let rank_a = matrix_rank(&problem.a)?;
    let x_rho = limit_solution(&p_bar, &g_bar, rank_a)?;
    let r_rho = problem.a.residual(&x_rho, &problem.b);
    let alpha = convergence_alpha(&p_bar, rank_a)?;
    let kappa_w = condition_number_psd(&w_bar)?;
    let variance_v = variance(&r_rho)?;
    let bias_norm = x_rho.distance(&ols(problem)?);
    Ok(OracleReport {
        mass: *mass,
        law,
        k,
        w_bar,
        p_bar,
        g_bar,
        x_rho,
        r_rho,
        alpha,
        kappa_w,
        variance_v,
        bias_norm,
        max_block_pinv_sq,
        rank_a,
        mode,
    })
}

/// Exact oracle by enumerating every `k`-subset.
pub fn compute_oracle(
    problem: &LeastSquaresProblem,
    k: usize,
    mass: &MassMatrixKind,
    sampler: &SamplerKind,
) -> Result<OracleReport> {
    let law = SubsetLaw::from_sampler(sampler)?;
    let e = enumerate_wbar_pbar(problem, k, mass, law)?;
    finish(
        problem,
        k,
        mass,
        law,
        e.w_bar,
        e.p_bar,
        e.g_bar,
        e.max_block_pinv_sq,
        OracleMode::Enumerate { subsets: e.subsets },
        |r| enumerate_variance(problem, k, mass, law, r),
    )
}

/// Oracle from `draws` sampled blocks; for problems too large to enumerate.
pub fn compute_oracle_montecarlo(
    problem: &LeastSquaresProblem,
    k: usize,
    mass: &MassMatrixKind,
    sampler: &SamplerKind,
    draws: usize,
    seed: u64,
) -> Result<OracleReport> {
    let law = SubsetLaw::from_sampler(sampler)?;
    let est = montecarlo_finite(problem, mass, sampler, draws, seed)?;
    let mode = OracleMode::MonteCarlo {
        draws,
        p_bar_std_error: est.p_bar_se.frobenius_norm(),
        w_bar_std_error: est.w_bar_se.frobenius_norm(),
    };
    let variance_seed = crate::rng::derive_seed(seed, 1);
    finish(
        problem,
        k,
        mass,
        law,
        est.w_bar,
        est.p_bar,
        est.g_bar,
        est.max_block_pinv_sq,
        mode,
        |r| super::montecarlo::montecarlo_variance(problem, mass, sampler, r, draws, variance_seed),
    )
}

/// The `oracle.json` document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub mass: MassMatrixKind,
    pub law: SubsetLaw,
    pub k: usize,
    pub mode: OracleMode,
    pub alpha: f64,
    #[serde(with = "maybe_infinite")]
    pub kappa_w: f64,
    pub r_rho_norm: f64,
    pub bias: f64,
    pub variance_v: f64,
    pub x_rho: Vec<f64>,
    pub ledger: BoundLedger,
}

impl OracleReport {
    pub fn summary(&self, ledger: BoundLedger) -> OracleSummary {
        OracleSummary {
            mass: self.mass,
            law: self.law,
            k: self.k,
            mode: self.mode.clone(),
            alpha: self.alpha,
            kappa_w: self.kappa_w,
            r_rho_norm: self.r_rho.norm(),
            bias: self.bias_norm,
            variance_v: self.variance_v,
            x_rho: self.x_rho.to_vec(),
            ledger,
        }
    }
}

/// `oracle.json` with the matrices needed to re-run the bound checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleDocument {
    #[serde(flatten)]
    pub summary: OracleSummary,
    pub rank_a: usize,
    #[serde(with = "maybe_infinite")]
    pub max_block_pinv_sq: f64,
    pub g_bar: DenseVector,
    pub r_rho: DenseVector,
    pub w_bar: DenseMatrix,
    pub p_bar: DenseMatrix,
}

impl OracleReport {
    pub fn document(&self, ledger: BoundLedger) -> OracleDocument {
        OracleDocument {
            summary: self.summary(ledger),
            rank_a: self.rank_a,
            max_block_pinv_sq: self.max_block_pinv_sq,
            g_bar: self.g_bar.clone(),
            r_rho: self.r_rho.clone(),
            w_bar: self.w_bar.clone(),
            p_bar: self.p_bar.clone(),
        }
    }
}

impl OracleDocument {
    pub fn into_report(self) -> OracleReport {
        let s = self.summary;
        OracleReport {
            mass: s.mass,
            law: s.law,
            k: s.k,
            w_bar: self.w_bar,
            p_bar: self.p_bar,
            g_bar: self.g_bar,
            x_rho: DenseVector::from_vec(s.x_rho),
            r_rho: self.r_rho,
            alpha: s.alpha,
            kappa_w: s.kappa_w,
            variance_v: s.variance_v,
            bias_norm: s.bias,
            max_block_pinv_sq: self.max_block_pinv_sq,
            rank_a: self.rank_a,
            mode: s.mode,
        }
    }
}

pub fn parse_oracle_document(text: &str) -> std::result::Result<OracleDocument, serde_json::Error> {
    serde_json::from_str(text)
}
