//! Elementary symmetric polynomials `p_j(q) = sum_{|S|=j} prod_{i in S} q_i`.
//!
//! All recursions only add nonnegative terms, so there is no cancellation.

use crate::error::{Error, Result};
use crate::linalg::DenseVector;

#[derive(Clone, Debug, PartialEq)]
pub struct ElemSymPolys {
    pub q: DenseVector,
    /// `p_0(q), ..., p_k(q)`
    pub values: Vec<f64>,
    /// `p_{k-1}(q_{-i})` for each `i`.
    pub leave_one_out: Vec<f64>,
}

impl ElemSymPolys {
    pub fn k(&self) -> usize {
        self.values.len() - 1
    }

    pub fn p_k(&self) -> f64 {
        self.values[self.k()]
    }
}

fn check_q(q: &[f64], k: usize) -> Result<()> {
    if k > q.len() {
        return Err(Error::param(format!("k = {k} exceeds the number of values {}", q.len())));
    }
    if q.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::param("elementary symmetric polynomials need finite nonnegative q"));
    }
    Ok(())
}

/// `table[i][j] = p_j(q_0, ..., q_{i-1})` for `i = 0..=m`, `j = 0..=k`.
fn prefix_table(q: &[f64], k: usize) -> Vec<Vec<f64>> {
    let mut table = Vec::with_capacity(q.len() + 1);
    let mut e = vec![0.0; k + 1];
    e[0] = 1.0;
    table.push(e.clone());
    for &qi in q {
        for j in (1..=k).rev() {
            e[j] += qi * e[j - 1];
        }
        table.push(e.clone());
    }
    table
}

pub fn elem_sym(q: &[f64], k: usize) -> Result<ElemSymPolys> {
    check_q(q, k)?;
    let m = q.len();
    let pre = prefix_table(q, k);
    let rev: Vec<f64> = q.iter().rev().copied().collect();
    let suf = prefix_table(&rev, k);
    let leave_one_out = (0..m)
        .map(|i| {
            if k == 0 {
                return 0.0;
            }
            // p_{k-1}(q without i) = sum_a p_a(q_<i) p_{k-1-a}(q_>i)
            let left = &pre[i];
            let right = &suf[m - i - 1];
            (0..k).map(|a| left[a] * right[k - 1 - a]).sum()
        })
        .collect();
    Ok(ElemSymPolys {
        q: DenseVector::from_vec(q.to_vec()),
        values: pre[m].clone(),
        leave_one_out,
    })
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `table[i][j] = ln p_j(q_0, ..., q_{i-1})`; immune to overflow for large `m`.
pub fn log_prefix_table(q: &[f64], k: usize) -> Result<Vec<Vec<f64>>> {
    check_q(q, k)?;
    let mut table = Vec::with_capacity(q.len() + 1);
    let mut e = vec![f64::NEG_INFINITY; k + 1];
    e[0] = 0.0;
    table.push(e.clone());
    for &qi in q {
        let lq = qi.ln();
        for j in (1..=k).rev() {
            e[j] = log_add(e[j], lq + e[j - 1]);
        }
        table.push(e.clone());
    }
    Ok(table)
}

/// `p_{k-1}(q_{-i}) / p_k(q)` for every `i`, evaluated in the log domain.
pub fn leave_one_out_ratios(q: &[f64], k: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::param("leave-one-out ratios need k >= 1"));
    }
    let m = q.len();
    let pre = log_prefix_table(q, k)?;
    let rev: Vec<f64> = q.iter().rev().copied().collect();
    let suf = log_prefix_table(&rev, k)?;
    let log_pk = pre[m][k];
    if log_pk == f64::NEG_INFINITY {
        return Err(Error::Numeric("p_k(q) vanishes; fewer than k positive values".into()));
    }
    Ok((0..m)
        .map(|i| {
            let left = &pre[i];
            let right = &suf[m - i - 1];
            let log_loo = (0..k).fold(f64::NEG_INFINITY, |acc, a| log_add(acc, left[a] + right[k - 1 - a]));
            (log_loo - log_pk).exp()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_enumerated_example() {
        let e = elem_sym(&[1.0, 2.0, 3.0], 2).unwrap();
        assert_eq!(e.values, vec![1.0, 6.0, 11.0]);
        assert_eq!(e.leave_one_out, vec![5.0, 4.0, 3.0]);
    }

    #[test]
    fn all_ones_gives_binomials() {
        let e = elem_sym(&[1.0; 10], 4).unwrap();
        assert_eq!(e.p_k(), 210.0);
        assert_eq!(elem_sym(&[1.0; 10], 0).unwrap().values, vec![1.0]);
        assert!(elem_sym(&[1.0; 3], 4).is_err());
        assert!(elem_sym(&[-1.0], 1).is_err());
    }

    #[test]
    fn log_ratios_agree_with_direct() {
        let q = [0.5, 2.0, 3.5, 0.01, 7.0];
        let e = elem_sym(&q, 3).unwrap();
        let r = leave_one_out_ratios(&q, 3).unwrap();
        for i in 0..q.len() {
            assert!((r[i] - e.leave_one_out[i] / e.p_k()).abs() < 1e-14);
        }
    }

    #[test]
    fn log_domain_survives_overflow() {
        let q = vec![1e6; 400];
        let r = leave_one_out_ratios(&q, 200).unwrap();
        // p_{k-1}(q_{-i}) / p_k(q) = C(m-1,k-1) / (C(m,k) q) = k / (m q)
        assert!((r[0] - 200.0 / (400.0 * 1e6)).abs() < 1e-12 * r[0]);
    }
}
