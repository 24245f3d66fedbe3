use std::collections::HashMap;

use proptest::prelude::*;
use rowsolve::linalg::{sym_eigen, Cholesky};
use rowsolve::problem::{gen_random, Problem};
use rowsolve::rng::{seeded, stream};
use rowsolve::samplers::{
    binomial, combination_at, elem_sym, for_each_in_range, kdpp_probabilities_enumerate, leave_one_out_ratios,
    log_prefix_table, next_combination, sample_uniform_subset, BlockSampler, KDppEigenSampler, KDppMode,
    SamplerKind,
};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Pearson statistic p-value for observed counts against expected probabilities.
fn chi_square_p(counts: &[u64], probs: &[f64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let stat: f64 = counts
        .iter()
        .zip(probs)
        .map(|(&c, &p)| {
            let e = p * n as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    1.0 - ChiSquared::new((counts.len() - 1) as f64).unwrap().cdf(stat)
}

fn brute_elem_sym(q: &[f64], k: usize) -> f64 {
    let m = q.len();
    if k == 0 {
        return 1.0;
    }
    let mut total = 0.0;
    let mut c: Vec<usize> = (0..k).collect();
    loop {
        total += c.iter().map(|&i| q[i]).product::<f64>();
        if !next_combination(&mut c, m) {
            break;
        }
    }
    total
}

#[test]
fn combination_ranks_are_lexicographic() {
    let (m, k) = (7, 3);
    let total = binomial(m, k).unwrap();
    let mut c: Vec<usize> = (0..k).collect();
    for rank in 0..total {
        assert_eq!(combination_at(m, k, rank), c);
        next_combination(&mut c, m);
    }
    let mut seen = Vec::new();
    for_each_in_range(m, k, 10..20, |r, s| seen.push((r, s.to_vec())));
    assert_eq!(seen.len(), 10);
    assert!(seen.iter().all(|(r, s)| combination_at(m, k, *r) == *s));
}

#[test]
fn uniform_subsets_pass_chi_square() {
    let (m, k) = (7, 3);
    let subsets: Vec<Vec<usize>> = (0..binomial(m, k).unwrap()).map(|r| combination_at(m, k, r)).collect();
    let index: HashMap<Vec<usize>, usize> = subsets.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
    let mut counts = vec![0u64; subsets.len()];
    let mut rng = seeded(17);
    for _ in 0..70_000 {
        let s = sample_uniform_subset(m, k, &mut rng).unwrap();
        counts[index[&s]] += 1;
    }
    let probs = vec![1.0 / subsets.len() as f64; subsets.len()];
    assert!(chi_square_p(&counts, &probs) > 1e-3);
}

#[test]
fn elem_sym_matches_brute_force() {
    let q = [0.3, 2.0, 1.5, 0.0, 4.0, 0.7];
    for k in 0..=q.len() {
        let e = elem_sym(&q, k).unwrap();
        for j in 0..=k {
            let want = brute_elem_sym(&q, j);
            assert!((e.values[j] - want).abs() <= 1e-13 * want.max(1.0));
        }
        if k > 0 {
            for i in 0..q.len() {
                let mut rest = q.to_vec();
                rest.remove(i);
                let want = brute_elem_sym(&rest, k - 1);
                assert!((e.leave_one_out[i] - want).abs() <= 1e-13 * want.max(1.0));
            }
        }
    }
}

#[test]
fn log_domain_tables_agree() {
    let q: Vec<f64> = (1..=40).map(|i| 1.0 / i as f64).collect();
    let k = 6;
    let e = elem_sym(&q, k).unwrap();
    let logs = log_prefix_table(&q, k).unwrap();
    assert!((logs[q.len()][k] - e.p_k().ln()).abs() < 1e-12);
    let ratios = leave_one_out_ratios(&q, k).unwrap();
    for i in 0..q.len() {
        assert!((ratios[i] - e.leave_one_out[i] / e.p_k()).abs() < 1e-12);
    }
    // Each row appears in a k-subset with total weight k.
    let total: f64 = q.iter().zip(&ratios).map(|(qi, r)| qi * r).sum();
    assert!((total - k as f64).abs() < 1e-10);
}

#[test]
fn dpp_normalizer_is_an_elementary_symmetric_polynomial() {
    let p = gen_random(6, 3, 2).unwrap();
    let (k, lambda) = (2, 0.05);
    let mut total = 0.0;
    let mut c: Vec<usize> = (0..k).collect();
    loop {
        let mut g = p.a.select_rows(&c).gram_rows();
        g.add_to_diagonal(lambda * k as f64);
        total += Cholesky::factor(&g).unwrap().log_det().exp();
        if !next_combination(&mut c, 6) {
            break;
        }
    }
    let mut kernel = p.a.gram_rows();
    kernel.add_to_diagonal(lambda * k as f64);
    let eig = sym_eigen(&kernel).unwrap();
    let want = elem_sym(&eig.values, k).unwrap().p_k();
    assert!((total - want).abs() < 1e-10 * want);
}

#[test]
fn kdpp_eigen_sampler_matches_enumerated_law() {
    let p = gen_random(6, 3, 12).unwrap();
    let (k, lambda) = (2, 0.01);
    let law = kdpp_probabilities_enumerate(&p.a, k, lambda).unwrap();
    let index: HashMap<Vec<usize>, usize> = law.iter().enumerate().map(|(i, (s, _))| (s.clone(), i)).collect();
    let probs: Vec<f64> = law.iter().map(|(_, w)| *w).collect();
    assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    let sampler = KDppEigenSampler::new(&p.a, k, lambda).unwrap();
    let mut counts = vec![0u64; law.len()];
    for batch in 0..20u64 {
        let mut rng = stream(5, batch);
        for _ in 0..5_000 {
            counts[index[&sampler.sample(&mut rng)]] += 1;
        }
    }
    assert!(chi_square_p(&counts, &probs) > 1e-3);
}

#[test]
fn block_sampler_modes_draw_valid_blocks() {
    let p = Problem::from(gen_random(10, 3, 4).unwrap());
    for kind in [
        SamplerKind::UniformSubsets { k: 4 },
        SamplerKind::KDpp { k: 3, lambda: 0.1, mode: KDppMode::Enumerate },
        SamplerKind::KDpp { k: 3, lambda: 0.1, mode: KDppMode::EigenSample },
    ] {
        let s = BlockSampler::new(&p, &kind).unwrap();
        let mut rng = seeded(1);
        for _ in 0..50 {
            let b = s.next_block(&p, &mut rng).unwrap();
            let idx = b.indices.clone().unwrap();
            assert_eq!(idx.len(), kind.k());
            assert!(idx.windows(2).all(|w| w[0] < w[1]) && idx[idx.len() - 1] < 10);
            assert_eq!(b.a_block, p.as_finite().unwrap().a.select_rows(&idx));
        }
    }
    assert!(BlockSampler::new(&p, &SamplerKind::UniformSubsets { k: 11 }).is_err());
}

proptest! {
    #[test]
    fn uniform_subset_is_sorted_and_distinct(m in 1usize..40, frac in 0.0f64..1.0, seed: u64) {
        let k = 1 + ((m - 1) as f64 * frac) as usize;
        let s = sample_uniform_subset(m, k, &mut seeded(seed)).unwrap();
        prop_assert_eq!(s.len(), k);
        prop_assert!(s.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(s.iter().all(|&i| i < m));
    }

    #[test]
    fn leave_one_out_marginals_sum_to_k(q in prop::collection::vec(1e-3f64..10.0, 2..20), frac in 0.0f64..1.0) {
        let k = 1 + ((q.len() - 1) as f64 * frac) as usize;
        let ratios = leave_one_out_ratios(&q, k).unwrap();
        let total: f64 = q.iter().zip(&ratios).map(|(qi, r)| qi * r).sum();
        prop_assert!((total - k as f64).abs() < 1e-9 * k as f64);
        prop_assert!(q.iter().zip(&ratios).all(|(qi, r)| qi * r <= 1.0 + 1e-12));
    }
}
