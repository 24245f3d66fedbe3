use std::collections::HashSet;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Uniform random `k`-subset of `0..m` by Floyd's algorithm, sorted.
pub fn sample_uniform_subset(m: usize, k: usize, rng: &mut Rng) -> Result<Vec<usize>> {
    if k == 0 || k > m {
        return Err(Error::param(format!("block size k = {k} must satisfy 1 <= k <= m = {m}")));
    }
    if k == m {
        return Ok((0..m).collect());
    }
    let mut chosen = HashSet::with_capacity(k);
    let mut out = Vec::with_capacity(k);
    for j in m - k..m {
        let t = rng.random_range(0..=j);
        let pick = if chosen.contains(&t) { j } else { t };
        chosen.insert(pick);
        out.push(pick);
    }
    out.sort_unstable();
    Ok(out)
}
