use rowsolve::oracle::{check_gaussian_identity, parse_oracle_document, BoundEntry, BoundLedger, OracleReport};
use rowsolve::problem::{gen_random, load_bundle, LeastSquaresProblem, Problem};
use rowsolve::samplers::SamplerKind;
use rowsolve::solvers::{MassMatrixKind, DEFAULT_LAMBDA};

use crate::error::{CliError, CliResult};
use crate::oracle::{compute_report, ledger_for};
use crate::{OracleModeArg, VerifyArgs};

pub const RANDOM_M: usize = 12;
pub const RANDOM_N: usize = 4;
pub const RANDOM_K: usize = 3;

fn checked(
    problem: &LeastSquaresProblem,
    mut report: OracleReport,
    inject_fault: bool,
) -> CliResult<BoundLedger> {
    if inject_fault {
        report.w_bar = report.w_bar.scaled(2.0);
    }
    ledger_for(problem, &report)
}

fn prefixed(into: &mut BoundLedger, prefix: &str, ledger: BoundLedger) {
    for e in ledger.entries() {
        into.push(BoundEntry {
            name: format!("{prefix}{}", e.name),
            ..e.clone()
        });
    }
}

/// Enumerated RBK and ReBlocK ledgers on `count` random 12x4 problems with
/// `k = 3`, seeded `seed, seed + 1, ...`.
pub fn verify_random(count: usize, seed: u64, inject_fault: bool) -> CliResult<BoundLedger> {
    let masses = [MassMatrixKind::rbk(), MassMatrixKind::ReBlocK { lambda: DEFAULT_LAMBDA }];
    let sampler = SamplerKind::UniformSubsets { k: RANDOM_K };
    let mut all = BoundLedger::new();
    for i in 0..count as u64 {
        let p = gen_random(RANDOM_M, RANDOM_N, seed + i)?;
        for mass in &masses {
            let report = compute_report(&p, mass, &sampler, OracleModeArg::Enumerate, 0, 0)?;
            let ledger = checked(&p, report, inject_fault)?;
            prefixed(&mut all, &format!("seed{}.{}.", seed + i, mass.name()), ledger);
        }
    }
    Ok(all)
}

fn problem_ledger(a: &VerifyArgs) -> CliResult<BoundLedger> {
    if let Some(count) = a.random {
        if count == 0 {
            return Err(CliError::Usage("--random needs at least one problem".into()));
        }
        return verify_random(count, a.seed, a.inject_fault);
    }
    let dir = a
        .problem
        .as_ref()
        .ok_or_else(|| CliError::Usage("give --random N or --problem DIR".into()))?;
    let problem = load_bundle(dir)?;
    if let Some(path) = &a.oracle {
        let p = problem
            .as_finite()
            .ok_or_else(|| CliError::Usage("oracle.json checks need a finite problem".into()))?;
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let doc = parse_oracle_document(&text).map_err(|e| CliError::Config {
            path: path.clone(),
            msg: e.to_string(),
        })?;
        return checked(p, doc.into_report(), a.inject_fault);
    }
    let spec = a.mass.spec()?;
    let mass = spec.mass_kind(None)?;
    match &problem {
        Problem::Finite(p) => {
            let report = compute_report(p, &mass, &spec.sampler_kind(false)?, a.mode, a.draws, a.seed)?;
            checked(p, report, a.inject_fault)
        }
        Problem::Gaussian(g) => {
            if !matches!(mass, MassMatrixKind::Rbk { .. }) {
                return Err(CliError::Usage("Gaussian identities are checked for --mass rbk".into()));
            }
            Ok(check_gaussian_identity(g, spec.k, a.draws, a.seed)?.0)
        }
    }
}

pub fn cmd_verify(a: &VerifyArgs) -> CliResult<()> {
    let ledger = problem_ledger(a)?;
    print!("{ledger}");
    let failed = ledger.failures().count();
    if failed > 0 {
        eprintln!("{failed} of {} bounds failed:", ledger.len());
        for e in ledger.failures() {
            eprintln!("  {}: {:e} {} {:e}", e.name, e.actual, e.relation.symbol(), e.bound);
        }
        return Err(CliError::Verification(Box::new(ledger)));
    }
    println!("all {} bounds hold", ledger.len());
    Ok(())
}
