use rowsolve::linalg::{min_nonzero_singular_value, qr_lstsq};
use rowsolve::oracle::{
    check_bounds, check_dpp, compute_oracle, dpp_alpha_bound, dpp_wbar_closed_form, enumerate_expectation,
    enumerate_wbar_pbar, montecarlo_finite, weighted_solution, SubsetLaw,
};
use rowsolve::problem::{gen_isosceles, gen_random, LeastSquaresProblem};
use rowsolve::samplers::{KDppMode, SamplerKind};
use rowsolve::solvers::{apply_update, MassMatrixKind};
use rowsolve::{DenseMatrix, DenseVector, Error};

fn uniform(k: usize) -> SamplerKind {
    SamplerKind::UniformSubsets { k }
}

fn consistent(m: usize, n: usize, seed: u64) -> LeastSquaresProblem {
    let base = gen_random(m, n, seed).unwrap();
    let x = DenseVector::from_vec((0..n).map(|i| 1.0 + i as f64).collect());
    let b = base.a.mul_vec(&x);
    LeastSquaresProblem::new(base.a, b).unwrap().solve_ols().unwrap()
}

#[test]
fn identity_problem_single_rows() {
    let p = LeastSquaresProblem::new(DenseMatrix::identity(3), DenseVector::from_vec(vec![1.0, 2.0, 3.0]))
        .unwrap()
        .solve_ols()
        .unwrap();
    let r = compute_oracle(&p, 1, &MassMatrixKind::rbk(), &uniform(1)).unwrap();
    let third = DenseMatrix::identity(3).scaled(1.0 / 3.0);
    assert!(r.w_bar.sub(&third).max_abs() < 1e-15);
    assert!(r.p_bar.sub(&third).max_abs() < 1e-15);
    assert!((r.alpha - 1.0 / 3.0).abs() < 1e-15);
    assert!((min_nonzero_singular_value(&r.p_bar, 1e-12).unwrap() - 1.0 / 3.0).abs() < 1e-14);
}

#[test]
fn isosceles_limit_is_the_centroid() {
    for eps in [0.5, 0.1, 0.05, 0.005] {
        let p = gen_isosceles(eps).unwrap();
        let r = compute_oracle(&p, 2, &MassMatrixKind::rbk(), &uniform(2)).unwrap();
        assert!((r.x_rho[0] - 1.0).abs() < 1e-9, "eps {eps}: {:?}", r.x_rho);
        assert!((r.x_rho[1] - 1.0 / (3.0 * eps)).abs() < 1e-8, "eps {eps}: {:?}", r.x_rho);
        let (xw, _) = weighted_solution(&p, &r.w_bar).unwrap();
        assert!(xw.distance(&r.x_rho) < 1e-6 * r.x_rho.norm(), "eps {eps}");
    }
}

#[test]
fn isosceles_blows_up_as_eps_shrinks() {
    let reports: Vec<_> = [0.5, 0.05, 0.005]
        .iter()
        .map(|&e| compute_oracle(&gen_isosceles(e).unwrap(), 2, &MassMatrixKind::rbk(), &uniform(2)).unwrap())
        .collect();
    for w in reports.windows(2) {
        assert!(w[1].kappa_w > w[0].kappa_w);
        assert!(w[1].variance_v > 10.0 * w[0].variance_v);
        assert!(w[1].bias_norm > w[0].bias_norm);
    }
}

#[test]
fn large_lambda_weights_are_nearly_scaled_identity() {
    let p = gen_random(6, 3, 4).unwrap();
    let (k, lambda) = (2, 1e6);
    let e = enumerate_wbar_pbar(&p, k, &MassMatrixKind::ReBlocK { lambda }, SubsetLaw::Uniform).unwrap();
    let c = (k as f64 / 6.0) / (lambda * k as f64);
    let target = DenseMatrix::identity(6).scaled(c);
    assert!(e.w_bar.sub(&target).max_abs() < 1e-4 * c);
}

#[test]
fn consistent_problem_has_no_bias_or_variance() {
    let p = consistent(8, 3, 2);
    for mass in [MassMatrixKind::rbk(), MassMatrixKind::ReBlocK { lambda: 0.01 }] {
        let r = compute_oracle(&p, 3, &mass, &uniform(3)).unwrap();
        assert!(r.bias_norm < 1e-10, "{mass:?}");
        assert!(r.variance_v < 1e-20, "{mass:?}");
        check_bounds(&p, &r).unwrap();
    }
}

#[test]
fn random_sweep_satisfies_all_bounds() {
    for seed in 0..10 {
        let p = gen_random(12, 4, 100 + seed).unwrap();
        for mass in [MassMatrixKind::rbk(), MassMatrixKind::ReBlocK { lambda: 1e-3 }, MassMatrixKind::ReBlocK { lambda: 0.5 }] {
            let r = compute_oracle(&p, 3, &mass, &uniform(3)).unwrap();
            let ledger = check_bounds(&p, &r).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
            assert!(ledger.all_hold());
        }
    }
}

#[test]
fn corrupted_weights_are_caught() {
    let p = gen_random(12, 4, 5).unwrap();
    let mut r = compute_oracle(&p, 3, &MassMatrixKind::rbk(), &uniform(3)).unwrap();
    r.w_bar = r.w_bar.scaled(2.0);
    match check_bounds(&p, &r) {
        Err(Error::TheoremViolation(ledger)) => {
            assert!(ledger.failures().any(|e| e.name == "pbar_consistency"))
        }
        other => panic!("expected a violation, got {other:?}"),
    }
}

#[test]
fn single_iterate_expectation_contracts_by_pbar() {
    let p = gen_random(7, 3, 9).unwrap();
    let k = 3;
    for mass in [MassMatrixKind::rbk(), MassMatrixKind::ReBlocK { lambda: 0.05 }, MassMatrixKind::MSgd { step_size: 0.3 }] {
        let r = compute_oracle(&p, k, &mass, &uniform(k)).unwrap();
        let x = DenseVector::from_vec(vec![0.4, -1.2, 2.0]);
        let mean_next = enumerate_expectation(&p, k, SubsetLaw::Uniform, |b| apply_update(&x, b, &mass)).unwrap();
        let lhs = mean_next.sub(&r.x_rho);
        let d = x.sub(&r.x_rho);
        let rhs = d.sub(&r.p_bar.mul_vec(&d));
        assert!(lhs.distance(&rhs) < 1e-10 * (1.0 + d.norm()), "{mass:?}");
    }
}

#[test]
fn msgd_direction_is_unbiased_gradient() {
    let p = gen_random(9, 4, 11).unwrap();
    let k = 3;
    let x = DenseVector::from_vec(vec![0.1, 0.2, -0.3, 0.4]);
    let mean = enumerate_expectation(&p, k, SubsetLaw::Uniform, |b| {
        Ok(b.a_block.tr_mul_vec(&b.a_block.residual(&x, &b.b_block)).scaled(1.0 / k as f64))
    })
    .unwrap();
    let full = p.a.tr_mul_vec(&p.a.residual(&x, &p.b)).scaled(1.0 / 9.0);
    assert!(mean.distance(&full) < 1e-12);
}

#[test]
fn rbk_step_splits_orthogonally() {
    let p = gen_random(10, 4, 13).unwrap();
    let r = compute_oracle(&p, 3, &MassMatrixKind::rbk(), &uniform(3)).unwrap();
    let x = DenseVector::from_vec(vec![1.0, -2.0, 0.5, 0.0]);
    let block = p.block(vec![1, 4, 7]);
    let next = apply_update(&x, &block, &MassMatrixKind::rbk()).unwrap();
    let lhs = next.sub(&r.x_rho).norm_sq();
    let d = x.sub(&r.x_rho);
    let proj = MassMatrixKind::rbk().update_operator(&block.a_block).unwrap();
    let first = d.sub(&proj.mul_vec(&d)).norm_sq();
    let rs = r.r_rho.select(&[1, 4, 7]);
    let second = qr_lstsq(&block.a_block, &rs).unwrap().norm_sq();
    assert!((lhs - first - second).abs() < 1e-9 * lhs);
}

#[test]
fn montecarlo_agrees_with_enumeration() {
    let p = gen_random(10, 3, 21).unwrap();
    let mass = MassMatrixKind::ReBlocK { lambda: 0.01 };
    let exact = enumerate_wbar_pbar(&p, 2, &mass, SubsetLaw::Uniform).unwrap();
    let est = montecarlo_finite(&p, &mass, &uniform(2), 20_000, 3).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let z = (est.p_bar[(i, j)] - exact.p_bar[(i, j)]).abs() / est.p_bar_se[(i, j)].max(1e-300);
            assert!(z < 4.0, "entry ({i},{j}) off by {z} standard errors");
        }
    }
}

#[test]
fn dpp_closed_form_matches_enumeration() {
    let p = gen_random(6, 3, 31).unwrap();
    let (ledger, report) = check_dpp(&p, 2, 0.01).unwrap();
    assert!(ledger.all_hold(), "{ledger}");
    assert!(report.bias_norm < 1e-8);
}

#[test]
fn dpp_zero_matrix_weights_are_scaled_identity() {
    let p = LeastSquaresProblem::new(DenseMatrix::zeros(5, 2), DenseVector::from_vec(vec![1.0; 5])).unwrap();
    let (k, lambda) = (2, 0.1);
    let w = dpp_wbar_closed_form(&p, k, lambda).unwrap();
    let law = SubsetLaw::KDpp { lambda };
    let e = enumerate_wbar_pbar(&p, k, &MassMatrixKind::ReBlocK { lambda }, law).unwrap();
    // every subset equally likely; each row appears w.p. k/m with weight 1/(lambda k)
    let c = (k as f64 / 5.0) / (lambda * k as f64);
    assert!(w.sub(&DenseMatrix::identity(5).scaled(c)).max_abs() < 1e-12);
    assert!(e.w_bar.sub(&w).max_abs() < 1e-12);
}

#[test]
fn dpp_alpha_bound_flat_limit() {
    // Orthonormal columns: singular values all one.
    let a = DenseMatrix::from_rows(&[
        vec![1.0, 0.0, 0.0],
        vec![0.0, 1.0, 0.0],
        vec![0.0, 0.0, 1.0],
        vec![0.0, 0.0, 0.0],
    ]);
    let p = LeastSquaresProblem::new(a, DenseVector::from_vec(vec![1.0; 4])).unwrap();
    let b = dpp_alpha_bound(&p, 3, 1e-12, 1).unwrap();
    assert!((b.bound - 2.0 / (2.0 + 2.0)).abs() < 1e-9);
    assert!(dpp_alpha_bound(&p, 3, 1e9, 1).unwrap().bound < 1e-8);
    assert!(dpp_alpha_bound(&p, 3, 0.1, 3).is_err());
}

#[test]
fn kdpp_sampler_kinds_share_a_law() {
    let p = gen_random(6, 3, 8).unwrap();
    let a = compute_oracle(&p, 2, &MassMatrixKind::ReBlocK { lambda: 0.01 }, &SamplerKind::KDpp { k: 2, lambda: 0.01, mode: KDppMode::Enumerate }).unwrap();
    let b = compute_oracle(&p, 2, &MassMatrixKind::ReBlocK { lambda: 0.01 }, &SamplerKind::KDpp { k: 2, lambda: 0.01, mode: KDppMode::EigenSample }).unwrap();
    assert_eq!(a.w_bar, b.w_bar);
}

#[test]
fn enumeration_guard_points_to_montecarlo() {
    let p = gen_random(60, 3, 1).unwrap();
    let err = compute_oracle(&p, 10, &MassMatrixKind::rbk(), &uniform(10)).unwrap_err();
    assert!(err.to_string().contains("--mode montecarlo"));
}
