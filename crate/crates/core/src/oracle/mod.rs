//! Ground truth for the iteration's limits: `W̄`, `P̄`, the weighted solution
//! `x^(rho)`, the rate `alpha`, the variance term `V`, and ledgers checking
//! each proven bound against the computed values.

mod bounds;
mod dpp;
mod enumerate;
mod gaussian;
mod ledger;
mod montecarlo;
mod report;
mod weighted;

pub use bounds::{
    check_bounds, check_bounds_rbk, check_bounds_reblock, check_report_invariants, ProblemStats,
    NORMAL_EQUATIONS_TOL,
};
pub use dpp::{check_dpp, dpp_alpha_bound, dpp_wbar_closed_form, DppAlphaBound};
pub use enumerate::{
    enumerate_expectation, enumerate_fold, enumerate_variance, enumerate_wbar_pbar, pbar_consistency,
    Enumeration, SubsetLaw, PBAR_CONSISTENCY_TOL,
};
pub use gaussian::{check_gaussian_identity, gaussian_alpha_bound, gaussian_variance_bound, msgd_alpha_bound};
pub use ledger::{maybe_infinite, BoundEntry, BoundLedger, Relation, BOUND_SLACK};
pub use montecarlo::{
    montecarlo_finite, montecarlo_gaussian, montecarlo_variance, montecarlo_wbar_pbar, FiniteEstimate,
    GaussianEstimate, MonteCarloEstimate, Moments, MIN_DRAWS,
};
pub use report::{
    compute_oracle, compute_oracle_montecarlo, parse_oracle_document, OracleDocument, OracleMode, OracleReport,
    OracleSummary,
};
pub use weighted::{condition_number_psd, convergence_alpha, limit_solution, matrix_rank, weighted_solution};
