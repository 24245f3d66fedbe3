use crate::error::{Error, Result};

/// Largest number of subsets an exact enumeration will visit.
pub const ENUMERATION_LIMIT: u64 = 1_000_000;

/// `C(m, k)`, or `None` on overflow.
pub fn binomial(m: usize, k: usize) -> Option<u64> {
    if k > m {
        return Some(0);
    }
    let k = k.min(m - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (m - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return None;
        }
    }
    Some(acc as u64)
}

/// Number of `k`-subsets of `0..m`, refusing counts above [`ENUMERATION_LIMIT`].
pub fn check_enumerable(m: usize, k: usize) -> Result<u64> {
    if k == 0 || k > m {
        return Err(Error::param(format!("block size k = {k} must satisfy 1 <= k <= m = {m}")));
    }
    match binomial(m, k) {
        Some(c) if c <= ENUMERATION_LIMIT => Ok(c),
        _ => Err(Error::EnumerationGuard {
            m,
            k,
            limit: ENUMERATION_LIMIT,
        }),
    }
}

/// The `rank`-th `k`-subset of `0..m` in lexicographic order.
pub fn combination_at(m: usize, k: usize, mut rank: u64) -> Vec<usize> {
    let mut out = Vec::with_capacity(k);
    let mut next = 0;
    for slot in 0..k {
        let remaining = k - slot - 1;
        loop {
            let count = binomial(m - next - 1, remaining).unwrap_or(u64::MAX);
            if rank < count {
                break;
            }
            rank -= count;
            next += 1;
        }
        out.push(next);
        next += 1;
    }
    out
}

/// Advances `c` to the next `k`-subset of `0..m`; false after the last one.
pub fn next_combination(c: &mut [usize], m: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < m - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Calls `f(rank, subset)` for every `k`-subset of `0..m` with rank in `range`.
pub fn for_each_in_range(m: usize, k: usize, range: std::ops::Range<u64>, mut f: impl FnMut(u64, &[usize])) {
    if range.is_empty() {
        return;
    }
    let mut c = combination_at(m, k, range.start);
    for rank in range {
        f(rank, &c);
        next_combination(&mut c, m);
    }
}
