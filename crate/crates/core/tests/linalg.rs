use proptest::prelude::*;
use rowsolve::linalg::{
    pseudoinverse_apply, qr_lstsq, singular_values, svd, sym_eigen, Cholesky, HouseholderQr,
};
use rowsolve::{DenseMatrix, DenseVector};

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = DenseMatrix> {
    prop::collection::vec(-3.0f64..3.0, rows * cols)
        .prop_map(move |v| DenseMatrix::from_row_major(rows, cols, v).unwrap())
}

fn shaped() -> impl Strategy<Value = (DenseMatrix, DenseVector)> {
    (1usize..7, 1usize..7).prop_flat_map(|(r, c)| {
        (matrix(r, c), prop::collection::vec(-3.0f64..3.0, r).prop_map(DenseVector::from_vec))
    })
}

// Normal equations of the minimum-norm solution, checked with plain loops.
fn normal_gap(a: &DenseMatrix, x: &DenseVector, y: &DenseVector) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..a.cols() {
        let mut s = 0.0;
        for i in 0..a.rows() {
            let ax: f64 = (0..a.cols()).map(|l| a[(i, l)] * x[l]).sum();
            s += a[(i, j)] * (y[i] - ax);
        }
        worst = worst.max(s.abs());
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn qr_lstsq_solves_normal_equations((a, y) in shaped()) {
        let x = qr_lstsq(&a, &y).unwrap();
        let scale = 1.0 + a.frobenius_norm().powi(2) * (1.0 + x.norm()) + a.frobenius_norm() * y.norm();
        prop_assert!(normal_gap(&a, &x, &y) <= 1e-9 * scale);
    }

    #[test]
    fn qr_matches_pseudoinverse((a, y) in shaped()) {
        let x = qr_lstsq(&a, &y).unwrap();
        let z = pseudoinverse_apply(&a, &y, 1e-10).unwrap();
        prop_assert!(x.distance(&z) <= 1e-7 * (1.0 + z.norm()));
    }

    #[test]
    fn householder_reconstructs(a in (1usize..7, 1usize..5).prop_flat_map(|(r, c)| matrix(r.max(c), c))) {
        let qr = HouseholderQr::factor_tall(&a);
        let back = qr.thin_q().matmul(&qr.r_matrix()).unwrap();
        prop_assert!(back.sub(&a).max_abs() <= 1e-12 * (1.0 + a.max_abs()));
        let q = qr.thin_q();
        let qtq = q.transpose().matmul(&q).unwrap();
        prop_assert!(qtq.sub(&DenseMatrix::identity(q.cols())).max_abs() <= 1e-12);
    }

    #[test]
    fn svd_reconstructs_and_orders(a in (1usize..6, 1usize..6).prop_flat_map(|(r, c)| matrix(r, c))) {
        let s = svd(&a).unwrap();
        let (m, n) = a.shape();
        prop_assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
        let sigma = DenseMatrix::from_fn(m, n, |i, j| if i == j { s.singular_values[i] } else { 0.0 });
        let back = s.u.matmul(&sigma).unwrap().matmul(&s.vt).unwrap();
        prop_assert!(back.sub(&a).max_abs() <= 1e-11 * (1.0 + a.max_abs()));
        let utu = s.u.transpose().matmul(&s.u).unwrap();
        prop_assert!(utu.sub(&DenseMatrix::identity(m)).max_abs() <= 1e-11);
        let vvt = s.vt.matmul(&s.vt.transpose()).unwrap();
        prop_assert!(vvt.sub(&DenseMatrix::identity(n)).max_abs() <= 1e-11);
        let fro: f64 = s.singular_values.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!((fro - a.frobenius_norm()).abs() <= 1e-11 * (1.0 + fro));
    }

    #[test]
    fn cholesky_round_trip(b in (1usize..6).prop_flat_map(|n| matrix(n + 2, n)), shift in 1e-3f64..1.0) {
        let mut g = b.gram_cols();
        g.add_to_diagonal(shift);
        let c = Cholesky::factor(&g).unwrap();
        let l = c.factor_matrix();
        let back = l.matmul(&l.transpose()).unwrap();
        prop_assert!(back.sub(&g).max_abs() <= 1e-12 * (1.0 + g.max_abs()));
        let y = DenseVector::from_vec((0..g.rows()).map(|i| i as f64 - 1.5).collect());
        let x = c.solve(&y);
        prop_assert!(g.mul_vec(&x).distance(&y) <= 1e-8 * (1.0 + y.norm()) * g.max_abs() / shift);
        let eig = sym_eigen(&g).unwrap();
        let logdet: f64 = eig.values.iter().map(|v| v.ln()).sum();
        prop_assert!((c.log_det() - logdet).abs() <= 1e-9 * (1.0 + logdet.abs()));
    }
}

/// `rows x cols` product of random `rows x rank` and `rank x cols` factors.
fn low_rank() -> impl Strategy<Value = DenseMatrix> {
    (1usize..7, 1usize..7, 1usize..4).prop_flat_map(|(r, c, k)| {
        let k = k.min(r).min(c);
        (matrix(r, k), matrix(k, c)).prop_map(|(x, y)| x.matmul(&y).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn svd_of_low_rank_reconstructs(a in low_rank()) {
        let s = svd(&a).unwrap();
        let (m, n) = a.shape();
        let sigma = DenseMatrix::from_fn(m, n, |i, j| if i == j { s.singular_values[i] } else { 0.0 });
        let back = s.u.matmul(&sigma).unwrap().matmul(&s.vt).unwrap();
        prop_assert!(back.sub(&a).max_abs() <= 1e-12 * (1.0 + a.max_abs()));
        prop_assert!(s.u.transpose().matmul(&s.u).unwrap().sub(&DenseMatrix::identity(m)).max_abs() <= 1e-12);
        prop_assert!(s.vt.matmul(&s.vt.transpose()).unwrap().sub(&DenseMatrix::identity(n)).max_abs() <= 1e-12);
    }

    #[test]
    fn pseudoinverse_of_low_rank_stays_in_row_space((a, y) in low_rank().prop_flat_map(|a| {
        let r = a.rows();
        (Just(a), prop::collection::vec(-3.0f64..3.0, r).prop_map(DenseVector::from_vec))
    })) {
        // The solution is A^T z for some z: project onto the null space of A and expect zero.
        let x = pseudoinverse_apply(&a, &y, 1e-10).unwrap();
        let s = svd(&a).unwrap();
        let rank = s.rank(1e-10);
        for i in rank..a.cols() {
            let v = DenseVector::from_vec(s.vt.row(i).to_vec());
            prop_assert!(x.dot(&v).abs() <= 1e-9 * (1.0 + x.norm()));
        }
        let q = qr_lstsq(&a, &y).unwrap();
        prop_assert!(q.distance(&x) <= 1e-7 * (1.0 + x.norm()));
    }

    #[test]
    fn sym_eigen_of_low_rank_gram(a in low_rank()) {
        let g = a.gram_cols();
        let e = sym_eigen(&g).unwrap();
        prop_assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        let back = e.reconstruct_with(|v| v);
        prop_assert!(back.sub(&g).max_abs() <= 1e-11 * (1.0 + g.max_abs()));
        let vtv = e.vectors.transpose().matmul(&e.vectors).unwrap();
        prop_assert!(vtv.sub(&DenseMatrix::identity(g.rows())).max_abs() <= 1e-11);
    }
}

#[test]
fn wide_rank_deficient_block_uses_min_norm() {
    // Two identical rows: the minimum-norm solution splits the right side evenly.
    let a = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
    let y = DenseVector::from_vec(vec![2.0, 2.0]);
    let x = qr_lstsq(&a, &y).unwrap();
    assert!(x.distance(&DenseVector::from_vec(vec![1.0, 1.0])) < 1e-12);
}

#[test]
fn cholesky_rejects_indefinite() {
    let g = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
    assert!(Cholesky::factor(&g).is_err());
}

#[test]
fn singular_values_of_diagonal() {
    let d = DenseMatrix::from_diag(&[3.0, -5.0, 0.5]);
    let s = singular_values(&d).unwrap();
    assert_eq!(s.len(), 3);
    assert!((s[0] - 5.0).abs() < 1e-14 && (s[1] - 3.0).abs() < 1e-14 && (s[2] - 0.5).abs() < 1e-14);
}
