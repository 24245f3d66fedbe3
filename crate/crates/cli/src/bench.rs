use std::fmt::Write as _;
use std::time::Instant;

use rowsolve::problem::gaussian_matrix;
use rowsolve::rng::{derive_seed, seeded};
use rowsolve::samplers::BlockSample;
use rowsolve::solvers::{apply_update, MassMatrixKind};
use rowsolve::DenseVector;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::BenchArgs;

/// Distinct synthetic blocks cycled through the trials.
const BLOCK_POOL: usize = 4;

pub const BENCH_CSV_HEADER: &str = "solver,n,k,median_s,iqr_s";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub solver: String,
    pub n: usize,
    pub k: usize,
    pub median_s: f64,
    pub iqr_s: f64,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Times `apply_update` on Gaussian `k x n` blocks for each mass. Block
/// generation is excluded; the masses are interleaved within each trial.
pub fn bench_updates(n: usize, k: usize, trials: usize, seed: u64, masses: &[MassMatrixKind]) -> CliResult<Vec<BenchRow>> {
    if n == 0 || k == 0 || trials == 0 {
        return Err(CliError::Usage("bench needs n, k and trials >= 1".into()));
    }
    let blocks: Vec<(BlockSample, DenseVector)> = (0..BLOCK_POOL.min(trials) as u64)
        .map(|i| {
            let mut rng = seeded(derive_seed(seed, i));
            let a = gaussian_matrix(k, n, &mut rng);
            let b = gaussian_matrix(k, 1, &mut rng).column(0);
            let x = gaussian_matrix(n, 1, &mut rng).column(0);
            (
                BlockSample {
                    indices: None,
                    a_block: a,
                    b_block: b,
                },
                x,
            )
        })
        .collect();
    for mass in masses {
        mass.validate()?;
        apply_update(&blocks[0].1, &blocks[0].0, mass)?;
    }
    let mut times = vec![Vec::with_capacity(trials); masses.len()];
    for t in 0..trials {
        let (block, x) = &blocks[t % blocks.len()];
        for (mass, out) in masses.iter().zip(times.iter_mut()) {
            let clock = Instant::now();
            let x_next = apply_update(x, block, mass)?;
            out.push(clock.elapsed().as_secs_f64());
            std::hint::black_box(x_next);
        }
    }
    Ok(masses
        .iter()
        .zip(times)
        .map(|(mass, mut ts)| {
            ts.sort_by(f64::total_cmp);
            BenchRow {
                solver: mass.name().to_string(),
                n,
                k,
                median_s: quantile(&ts, 0.5),
                iqr_s: quantile(&ts, 0.75) - quantile(&ts, 0.25),
            }
        })
        .collect())
}

pub fn format_bench_csv(rows: &[BenchRow]) -> String {
    let mut out = format!("{BENCH_CSV_HEADER}\n");
    for r in rows {
        writeln!(out, "{},{},{},{:?},{:?}", r.solver, r.n, r.k, r.median_s, r.iqr_s)
            .expect("writing to a String cannot fail");
    }
    out
}

pub fn cmd_bench(a: &BenchArgs) -> CliResult<()> {
    let masses = [
        MassMatrixKind::rbk(),
        MassMatrixKind::ReBlocK { lambda: a.lambda },
        // Timing does not depend on the step size.
        MassMatrixKind::MSgd { step_size: 1.0 },
    ];
    let rows = bench_updates(a.n, a.k, a.trials, a.seed, &masses)?;
    let csv = format_bench_csv(&rows);
    print!("{csv}");
    if let Some(dir) = &a.out {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let path = dir.join("bench.csv");
        std::fs::write(&path, csv).map_err(|e| CliError::io(&path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile(&v, 0.5), 3.0);
        assert_eq!(quantile(&v, 0.25), 2.0);
        assert_eq!(quantile(&[1.0, 2.0], 0.5), 1.5);
    }

    #[test]
    fn small_bench_has_one_row_per_mass() {
        let rows = bench_updates(20, 3, 5, 0, &[MassMatrixKind::rbk(), MassMatrixKind::MSgd { step_size: 1.0 }]).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.median_s > 0.0 && r.iqr_s >= 0.0));
        let csv = format_bench_csv(&rows);
        assert!(csv.starts_with(BENCH_CSV_HEADER));
        assert_eq!(csv.lines().count(), 3);
    }
}
