use std::path::Path;

use rowsolve::linalg::{default_rank_tol, singular_values};
use rowsolve::problem::{
    gaussian_matrix, gen_chebyshev, gen_gaussian, gen_isosceles, gen_noisy, gen_random, load_bundle,
    load_problem, matrix_with_spectrum, save_gaussian, save_problem, CKind, ChebyshevSpec, Problem, Spectrum,
};
use rowsolve::rng::{derive_seed, seeded};
use rowsolve::DenseVector;
use serde::Serialize;

use crate::config::GeneratorSpec;
use crate::error::{CliError, CliResult};
use crate::{Family, GenerateArgs};

fn spectrum(text: &str, n: usize) -> CliResult<Vec<f64>> {
    let s: Spectrum = text.parse()?;
    Ok(s.values(n)?)
}

fn planted_or_random(planted: &Option<Vec<f64>>, n: usize, seed: u64) -> CliResult<DenseVector> {
    match planted {
        Some(v) if v.len() != n => Err(CliError::Usage(format!("planted has {} entries, expected n = {n}", v.len()))),
        Some(v) => Ok(DenseVector::from_vec(v.clone())),
        None => {
            let mut rng = seeded(derive_seed(seed, 1));
            Ok(gaussian_matrix(n, 1, &mut rng).column(0))
        }
    }
}

fn require(v: Option<usize>, name: &str, family: &str) -> CliResult<usize> {
    v.ok_or_else(|| CliError::Usage(format!("family {family} needs --{name}")))
}

pub fn build_problem(spec: &GeneratorSpec) -> CliResult<Problem> {
    Ok(match spec {
        GeneratorSpec::Gaussian {
            n,
            spectrum: s,
            noise_std,
            seed,
            planted,
        } => {
            let x = planted_or_random(planted, *n, *seed)?;
            gen_gaussian(*n, &spectrum(s, *n)?, &x, *noise_std, *seed)?.into()
        }
        GeneratorSpec::Chebyshev {
            n,
            m,
            decay,
            noise_std,
            seed,
        } => {
            let c_kind = match decay {
                None => CKind::Identity,
                Some(p) => CKind::DecayingSpectrum(*p),
            };
            gen_chebyshev(&ChebyshevSpec {
                n: *n,
                m: *m,
                c_kind,
                noise_std: *noise_std,
                seed: *seed,
            })?
            .into()
        }
        GeneratorSpec::Isosceles { epsilon } => gen_isosceles(*epsilon)?.into(),
        GeneratorSpec::Noisy {
            m,
            n,
            spectrum: s,
            noise_std,
            seed,
            from,
            planted,
        } => {
            let a = match from {
                Some(dir) => load_problem(dir)?.a,
                None => {
                    let (m, n) = (require(*m, "m", "noisy")?, require(*n, "n", "noisy")?);
                    let mut rng = seeded(derive_seed(*seed, 0));
                    let g = gaussian_matrix(m, n, &mut rng);
                    if s == "flat" {
                        g
                    } else {
                        g.matmul(&matrix_with_spectrum(&spectrum(s, n)?, &mut rng))?
                    }
                }
            };
            let x = planted_or_random(planted, a.cols(), *seed)?;
            let mut p = gen_noisy(&a, &x, *noise_std, derive_seed(*seed, 2))?;
            p.meta = p.meta.param("spectrum", s).seed(*seed);
            p.into()
        }
        GeneratorSpec::Random { m, n, seed } => gen_random(*m, *n, *seed)?.into(),
        GeneratorSpec::Load { path } => match load_bundle(path)? {
            Problem::Finite(p) if p.x_star.is_none() => p.solve_ols()?.into(),
            other => other,
        },
    })
}

pub fn save_bundle(problem: &Problem, dir: &Path) -> CliResult<()> {
    match problem {
        Problem::Finite(p) => save_problem(p, dir)?,
        Problem::Gaussian(g) => save_gaussian(g, dir)?,
    }
    Ok(())
}

/// What `generate` prints.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProblemSummary {
    pub family: String,
    pub m: Option<usize>,
    pub n: usize,
    /// Ratio of the largest to the smallest nonzero singular value of `A`
    /// (of `L_n` for Gaussian problems).
    pub kappa_a: f64,
    pub residual_norm: Option<f64>,
}

pub fn summarize(problem: &Problem) -> CliResult<ProblemSummary> {
    Ok(match problem {
        Problem::Finite(p) => {
            let s = singular_values(&p.a)?;
            let tol = default_rank_tol(p.m(), p.n()) * s[0];
            let smin = s.iter().rev().find(|v| **v > tol).copied().unwrap_or(0.0);
            ProblemSummary {
                family: p.meta.family.clone(),
                m: Some(p.m()),
                n: p.n(),
                kappa_a: if smin > 0.0 { s[0] / smin } else { f64::INFINITY },
                residual_norm: p.residual_norm,
            }
        }
        Problem::Gaussian(g) => ProblemSummary {
            family: g.meta.family.clone(),
            m: None,
            n: g.n(),
            kappa_a: g.spectrum[0] / g.spectrum[g.n() - 1],
            residual_norm: Some(g.noise_std),
        },
    })
}

impl std::fmt::Display for ProblemSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "family={} ", self.family)?;
        match self.m {
            Some(m) => write!(f, "m={m} ")?,
            None => write!(f, "m=stream ")?,
        }
        write!(f, "n={} kappa(A)={:.6e}", self.n, self.kappa_a)?;
        if let Some(r) = self.residual_norm {
            write!(f, " residual_norm={r:.6e}")?;
        }
        Ok(())
    }
}

/// Turns `generate` flags into a generator spec.
pub fn spec_from_args(a: &GenerateArgs) -> CliResult<GeneratorSpec> {
    let family = format!("{:?}", a.family).to_lowercase();
    let need = |v: Option<usize>, name: &str| require(v, name, &family);
    Ok(match a.family {
        Family::Gaussian => GeneratorSpec::Gaussian {
            n: need(a.n, "n")?,
            spectrum: a.spectrum.clone(),
            noise_std: a.noise_std,
            seed: a.seed,
            planted: a.planted.clone(),
        },
        Family::Chebyshev => GeneratorSpec::Chebyshev {
            n: need(a.n, "n")?,
            m: need(a.m, "m")?,
            decay: a.decay,
            noise_std: a.noise_std,
            seed: a.seed,
        },
        Family::Isosceles => GeneratorSpec::Isosceles {
            epsilon: a
                .epsilon
                .ok_or_else(|| CliError::Usage("family isosceles needs --epsilon".into()))?,
        },
        Family::Noisy => GeneratorSpec::Noisy {
            m: a.m,
            n: a.n,
            spectrum: a.spectrum.clone(),
            noise_std: a.noise_std,
            seed: a.seed,
            from: a.from.clone(),
            planted: a.planted.clone(),
        },
        Family::Random => GeneratorSpec::Random {
            m: need(a.m, "m")?,
            n: need(a.n, "n")?,
            seed: a.seed,
        },
        Family::Load => GeneratorSpec::Load {
            path: a
                .path
                .clone()
                .ok_or_else(|| CliError::Usage("family load needs --path".into()))?,
        },
    })
}

pub fn cmd_generate(a: &GenerateArgs) -> CliResult<()> {
    let problem = build_problem(&spec_from_args(a)?)?;
    save_bundle(&problem, &a.out)?;
    println!("{}", summarize(&problem)?);
    println!("wrote {}", a.out.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noisy_default_is_gaussian_matrix() {
        let spec = GeneratorSpec::Noisy {
            m: Some(30),
            n: Some(4),
            spectrum: "flat".into(),
            noise_std: 0.0,
            seed: 2,
            from: None,
            planted: Some(vec![1.0, 2.0, 3.0, 4.0]),
        };
        let p = build_problem(&spec).unwrap();
        let p = p.as_finite().unwrap();
        let x = p.x_star.as_ref().unwrap();
        assert!(x.distance(&DenseVector::from_vec(vec![1.0, 2.0, 3.0, 4.0])) < 1e-10);
        assert_eq!(p.meta.family, "noisy");
    }

    #[test]
    fn missing_dimensions_are_usage_errors() {
        let spec = GeneratorSpec::Noisy {
            m: None,
            n: Some(4),
            spectrum: "flat".into(),
            noise_std: 0.1,
            seed: 0,
            from: None,
            planted: None,
        };
        assert_eq!(build_problem(&spec).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn decaying_noisy_matrix_is_ill_conditioned() {
        let spec = GeneratorSpec::Noisy {
            m: Some(200),
            n: Some(6),
            spectrum: "poly:4".into(),
            noise_std: 0.01,
            seed: 1,
            from: None,
            planted: None,
        };
        let s = summarize(&build_problem(&spec).unwrap()).unwrap();
        // sigma_i = i^-2 times a well-conditioned Gaussian factor
        assert!(s.kappa_a > 10.0 && s.kappa_a < 200.0, "{}", s.kappa_a);
    }
}
