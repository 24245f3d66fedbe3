use rowsolve::oracle::{check_gaussian_identity, gaussian_alpha_bound, montecarlo_gaussian, msgd_alpha_bound};
use rowsolve::problem::{gen_gaussian, Problem, Spectrum};
use rowsolve::samplers::SamplerKind;
use rowsolve::solvers::{run, MassMatrixKind, SolverConfig};
use rowsolve::DenseVector;

/// The structured rate term written out with 1-based indices.
fn ell_term(sigma_sq: &[f64], k: usize) -> f64 {
    let n = sigma_sq.len();
    let mut best: f64 = 0.0;
    for ell in 2..k {
        let start = if k > ell + 1 { k - ell - 1 } else { 1 }.max(1);
        let mut tail = 0.0;
        for i in start..=n {
            tail += sigma_sq[i - 1];
        }
        best = best.max((ell as f64 - 1.0) * sigma_sq[n - 1] / tail);
    }
    best
}

fn poly_decay(n: usize) -> Vec<f64> {
    (1..=n).map(|i| 1.0 / i as f64).collect()
}

#[test]
fn alpha_bound_agrees_with_direct_evaluation() {
    for n in [8, 16, 40] {
        let s = poly_decay(n);
        let sq: Vec<f64> = s.iter().map(|v| v * v).collect();
        for k in [2, 3, 6, 7] {
            let fro: f64 = sq.iter().sum();
            let want = (k as f64 * sq[n - 1] / fro).max(ell_term(&sq, k));
            assert!((gaussian_alpha_bound(&s, k) - want).abs() < 1e-15 * want.max(1.0));
        }
    }
}

#[test]
fn structured_rate_overtakes_msgd_as_k_grows() {
    let n = 64;
    let s = poly_decay(n);
    let sq: Vec<f64> = s.iter().map(|v| v * v).collect();
    let ratio = |k: usize| ell_term(&sq, k) / msgd_alpha_bound(&s, k);
    // At k = 6 the structured term is still below the minibatch ceiling.
    let r6 = ratio(6);
    assert!(r6 > 0.8 && r6 < 0.9, "k = 6 ratio {r6}");
    let ks = [6, 8, 12, 16, 24, 32];
    let rs: Vec<f64> = ks.iter().map(|&k| ratio(k)).collect();
    assert!(rs.windows(2).all(|w| w[1] > w[0]), "{rs:?}");
    assert!(ratio(12) > 1.0);
    // Quadratic decay: the advantage grows roughly linearly in k.
    assert!(ratio(32) > 2.0 * ratio(16) * 0.8);
}

#[test]
fn flat_spectrum_gaussian_identities() {
    let n = 16;
    let x = DenseVector::from_vec((0..n).map(|i| (i as f64 * 0.37).sin()).collect());
    let g = gen_gaussian(n, &Spectrum::Flat.values(n).unwrap(), &x, 0.1, 11).unwrap();
    let (ledger, est) = check_gaussian_identity(&g, 6, 40_000, 3).unwrap();
    assert!(ledger.all_hold(), "{ledger}");
    // Isotropic rows: every block projects onto a uniformly random 6-dimensional subspace.
    let target = 6.0 / 16.0;
    for i in 0..n {
        for j in 0..n {
            let want = if i == j { target } else { 0.0 };
            let z = (est.p_bar[(i, j)] - want).abs() / est.p_bar_se[(i, j)];
            assert!(z < 5.0, "({i},{j}): {z}");
        }
    }
}

#[test]
fn msgd_additive_term_is_also_centered() {
    let n = 10;
    let x = DenseVector::from_vec(vec![1.0; n]);
    let g = gen_gaussian(n, &Spectrum::Poly(1.0).values(n).unwrap(), &x, 0.3, 2).unwrap();
    let est = montecarlo_gaussian(&g, 4, &MassMatrixKind::MSgd { step_size: 0.5 }, 20_000, 8).unwrap();
    assert!(est.additive_mean.norm() <= 4.0 * est.additive_se.norm());
}

#[test]
fn tail_averaged_stream_run_approaches_planted_solution() {
    let n = 8;
    let x = DenseVector::from_vec((0..n).map(|i| 1.0 - i as f64 / 4.0).collect());
    let g = gen_gaussian(n, &Spectrum::Flat.values(n).unwrap(), &x, 0.1, 4).unwrap();
    let p = Problem::from(g);
    let err = |t| {
        let cfg = SolverConfig::new(MassMatrixKind::rbk(), SamplerKind::GaussianStream { k: 6 }, t);
        run(&p, &cfg).unwrap().final_tail_x.distance(&x)
    };
    let (short, long) = (err(400), err(6400));
    assert!(long < short, "{short} -> {long}");
    assert!(long < 0.02 * x.norm());
}
