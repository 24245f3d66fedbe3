//! Checks for randomized block Kaczmarz on Gaussian streams.

use super::ledger::{BoundEntry, BoundLedger, Relation, BOUND_SLACK};
use super::montecarlo::{montecarlo_gaussian, GaussianEstimate};
use super::weighted::convergence_alpha;
use crate::error::{Error, Result};
use crate::problem::GaussianProblem;
use crate::solvers::MassMatrixKind;

/// `max{ k s_n^2 / ||L_n||_F^2, max_{2<=l<k} (l-1) s_n^2 / sum_{i >= k-l-1} s_i^2 }`
/// for singular values `s` of `L_n` (indices 1-based), taking the
/// asymptotic constant as one.
pub fn gaussian_alpha_bound(spectrum: &[f64], k: usize) -> f64 {
    let n = spectrum.len();
    if n == 0 {
        return 0.0;
    }
    let sn2 = spectrum[n - 1].powi(2);
    let fro2: f64 = spectrum.iter().map(|s| s * s).sum();
    let mut best = k as f64 * sn2 / fro2;
    for ell in 2..k {
        let start = (k as isize - ell as isize - 1).max(1) as usize;
        if start > n {
            continue;
        }
        let tail: f64 = spectrum[start - 1..].iter().map(|s| s * s).sum();
        best = best.max((ell - 1) as f64 * sn2 / tail);
    }
    best
}

/// The minibatch-SGD rate ceiling `k s_n^2 / ||L_n||_F^2`.
pub fn msgd_alpha_bound(spectrum: &[f64], k: usize) -> f64 {
    let n = spectrum.len();
    let fro2: f64 = spectrum.iter().map(|s| s * s).sum();
    k as f64 * spectrum[n - 1].powi(2) / fro2
}

/// `200 / s_{2k}^2 * noise_std^2`
pub fn gaussian_variance_bound(spectrum: &[f64], k: usize, noise_std: f64) -> Result<f64> {
    if k < 6 {
        return Err(Error::param(format!("variance bound requires k >= 6, got k = {k}")));
    }
    let rank = spectrum.iter().filter(|s| **s > 0.0).count();
    if rank < 2 * k {
        return Err(Error::param(format!(
            "variance bound requires rank(L_n) >= 2k = {}, got rank {rank}",
            2 * k
        )));
    }
    Ok(200.0 / spectrum[2 * k - 1].powi(2) * noise_std * noise_std)
}

/// Monte Carlo verification that (i) the additive term of the RBK update at
/// `x*` has mean zero, (ii) its second moment obeys the variance bound and
/// (iii) the estimated rate meets the asymptotic lower bound.
pub fn check_gaussian_identity(
    g: &GaussianProblem,
    k: usize,
    draws: usize,
    seed: u64,
) -> Result<(BoundLedger, GaussianEstimate)> {
    let variance_bound = gaussian_variance_bound(&g.spectrum, k, g.noise_std)?;
    let est = montecarlo_gaussian(g, k, &MassMatrixKind::rbk(), draws, seed)?;
    let mut ledger = BoundLedger::new();

    let combined_se = est.additive_se.norm();
    ledger.push(BoundEntry::new(
        "additive_mean",
        Relation::AtMost,
        4.0 * combined_se,
        est.additive_mean.norm(),
        BOUND_SLACK,
    ));
    ledger.upper("variance", variance_bound, est.variance_v);

    let alpha = convergence_alpha(&est.p_bar, g.n())?;
    let sigma = est.p_bar_se.frobenius_norm();
    let rhs = gaussian_alpha_bound(&g.spectrum, k);
    ledger.lower("alpha", rhs - 3.0 * sigma, alpha);
    Ok((ledger, est))
}
