//! Experiment configuration files and the small grammars used on the
//! command line.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use rowsolve::samplers::{KDppMode, SamplerKind};
use rowsolve::solvers::{MassMatrixKind, SolverConfig, DEFAULT_LAMBDA};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// A problem generator with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorSpec {
    /// Streaming rows with covariance `L L^T`.
    Gaussian {
        n: usize,
        #[serde(default = "default_spectrum")]
        spectrum: String,
        #[serde(default = "default_noise_std")]
        noise_std: f64,
        #[serde(default)]
        seed: u64,
        #[serde(default)]
        planted: Option<Vec<f64>>,
    },
    /// Discretized Chebyshev expansions; `decay` absent means `C = I`.
    Chebyshev {
        n: usize,
        m: usize,
        #[serde(default)]
        decay: Option<f64>,
        #[serde(default = "default_noise_std")]
        noise_std: f64,
        #[serde(default)]
        seed: u64,
    },
    Isosceles {
        epsilon: f64,
    },
    /// `b = A y + z`; `A` is Gaussian (times a matrix with the given
    /// spectrum) unless taken from an existing bundle.
    Noisy {
        #[serde(default)]
        m: Option<usize>,
        #[serde(default)]
        n: Option<usize>,
        #[serde(default = "default_spectrum")]
        spectrum: String,
        #[serde(default = "default_noise_std")]
        noise_std: f64,
        #[serde(default)]
        seed: u64,
        #[serde(default)]
        from: Option<PathBuf>,
        #[serde(default)]
        planted: Option<Vec<f64>>,
    },
    /// Gaussian `A` and independent Gaussian `b`.
    Random {
        m: usize,
        n: usize,
        #[serde(default)]
        seed: u64,
    },
    Load {
        path: PathBuf,
    },
}

fn default_spectrum() -> String {
    "flat".into()
}

fn default_noise_std() -> f64 {
    1e-2
}

/// Either a bundle directory or an inline generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProblemSource {
    Path(PathBuf),
    Inline(GeneratorSpec),
}

/// Which subsets feed each iteration. Gaussian problems always stream.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerChoice {
    #[default]
    Uniform,
    Kdpp,
    KdppEigen,
}

impl FromStr for SamplerChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "uniform" => Ok(SamplerChoice::Uniform),
            "kdpp" => Ok(SamplerChoice::Kdpp),
            "kdpp-eigen" => Ok(SamplerChoice::KdppEigen),
            other => Err(format!("unknown sampler '{other}' (expected uniform, kdpp or kdpp-eigen)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassChoice {
    Rbk,
    Reblock,
    Msgd,
}

impl FromStr for MassChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "rbk" => Ok(MassChoice::Rbk),
            "reblock" => Ok(MassChoice::Reblock),
            "msgd" => Ok(MassChoice::Msgd),
            other => Err(format!("unknown mass '{other}' (expected rbk, reblock or msgd)")),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MassParams {
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub rank_tol: Option<f64>,
    /// `grid:lo..hi`; replaces `eta` by the largest stable doubling of `lo`.
    #[serde(default)]
    pub tune_eta: Option<String>,
}

/// One solver entry of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    /// Label used in file names; defaults to the mass name.
    #[serde(default)]
    pub name: Option<String>,
    pub mass: MassChoice,
    #[serde(default)]
    pub params: MassParams,
    #[serde(default)]
    pub sampler: SamplerChoice,
    pub k: usize,
    #[serde(rename = "T")]
    pub total_iters: usize,
    /// Burn-in; defaults to `tb_frac * T`.
    #[serde(rename = "T_b", default)]
    pub burn_in: Option<usize>,
    #[serde(default)]
    pub tb_frac: Option<f64>,
    pub seeds: Vec<u64>,
}

pub const DEFAULT_TB_FRAC: f64 = 0.5;

impl SolverSpec {
    pub fn label(&self) -> String {
        let raw = self.name.clone().unwrap_or_else(|| self.mass_name().to_string());
        raw.chars()
            .map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' })
            .collect()
    }

    fn mass_name(&self) -> &'static str {
        match self.mass {
            MassChoice::Rbk => "rbk",
            MassChoice::Reblock => "reblock",
            MassChoice::Msgd => "msgd",
        }
    }

    pub fn burn_in(&self) -> CliResult<usize> {
        if let Some(tb) = self.burn_in {
            if self.tb_frac.is_some() {
                return Err(CliError::Usage("give either T_b or tb_frac, not both".into()));
            }
            return Ok(tb);
        }
        let frac = self.tb_frac.unwrap_or(DEFAULT_TB_FRAC);
        if !(0.0..1.0).contains(&frac) {
            return Err(CliError::Usage(format!("tb_frac must lie in [0, 1), got {frac}")));
        }
        Ok((frac * self.total_iters as f64).floor() as usize)
    }

    /// The mass kind; for mSGD, `eta` overrides the configured step size.
    pub fn mass_kind(&self, eta: Option<f64>) -> CliResult<MassMatrixKind> {
        let mass = match self.mass {
            MassChoice::Rbk => MassMatrixKind::Rbk {
                rank_tol: self.params.rank_tol,
            },
            MassChoice::Reblock => MassMatrixKind::ReBlocK {
                lambda: self.params.lambda.unwrap_or(DEFAULT_LAMBDA),
            },
            MassChoice::Msgd => {
                let step_size = eta.or(self.params.eta).ok_or_else(|| {
                    CliError::Usage("msgd needs a step size: set eta or tune_eta".into())
                })?;
                MassMatrixKind::MSgd { step_size }
            }
        };
        mass.validate()?;
        Ok(mass)
    }

    pub fn sampler_kind(&self, streaming: bool) -> CliResult<SamplerKind> {
        let k = self.k;
        if streaming {
            return match self.sampler {
                SamplerChoice::Uniform => Ok(SamplerKind::GaussianStream { k }),
                _ => Err(CliError::Usage("Gaussian problems stream rows; k-DPP sampling needs a finite problem".into())),
            };
        }
        let lambda = self.params.lambda.unwrap_or(DEFAULT_LAMBDA);
        Ok(match self.sampler {
            SamplerChoice::Uniform => SamplerKind::UniformSubsets { k },
            SamplerChoice::Kdpp => SamplerKind::KDpp {
                k,
                lambda,
                mode: KDppMode::Enumerate,
            },
            SamplerChoice::KdppEigen => SamplerKind::KDpp {
                k,
                lambda,
                mode: KDppMode::EigenSample,
            },
        })
    }

    pub fn solver_config(
        &self,
        streaming: bool,
        eta: Option<f64>,
        seed: u64,
        record_every: Option<usize>,
    ) -> CliResult<SolverConfig> {
        let mut cfg = SolverConfig::new(self.mass_kind(eta)?, self.sampler_kind(streaming)?, self.total_iters);
        cfg.burn_in = self.burn_in()?;
        cfg.seed = seed;
        if let Some(r) = record_every {
            cfg.record_every = r;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSource,
    pub solvers: Vec<SolverSpec>,
    /// Output directory; `--out` overrides it.
    #[serde(default)]
    pub outputs: Option<PathBuf>,
    #[serde(default)]
    pub record_every: Option<usize>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> CliResult<()> {
        if self.solvers.is_empty() {
            return Err(CliError::Usage("experiment lists no solvers".into()));
        }
        for s in &self.solvers {
            if s.seeds.is_empty() {
                return Err(CliError::Usage(format!("solver '{}' lists no seeds", s.label())));
            }
            if s.k == 0 || s.total_iters == 0 {
                return Err(CliError::Usage(format!("solver '{}' needs k >= 1 and T >= 1", s.label())));
            }
            s.burn_in()?;
            if let Some(g) = &s.params.tune_eta {
                g.parse::<EtaGrid>().map_err(CliError::Usage)?;
            }
        }
        let mut labels: Vec<String> = self.solvers.iter().map(SolverSpec::label).collect();
        labels.sort();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(CliError::Usage("solver labels must be distinct; set 'name'".into()));
        }
        if self.record_every == Some(0) {
            return Err(CliError::Usage("record_every must be at least 1".into()));
        }
        Ok(())
    }

    /// Resolves relative bundle and output paths against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(out) = &mut self.outputs {
            fix(out);
        }
        match &mut self.problem {
            ProblemSource::Path(p) => fix(p),
            ProblemSource::Inline(GeneratorSpec::Load { path }) => fix(path),
            ProblemSource::Inline(GeneratorSpec::Noisy { from: Some(p), .. }) => fix(p),
            ProblemSource::Inline(_) => {}
        }
    }
}

pub fn parse_experiment_config(text: &str) -> Result<ExperimentConfig, serde_json::Error> {
    serde_json::from_str(text)
}

pub fn load_experiment_config(path: &Path) -> CliResult<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut cfg = parse_experiment_config(&text).map_err(|e| CliError::Config {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })?;
    cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
    cfg.validate()?;
    Ok(cfg)
}

/// `grid:lo..hi`: candidate step sizes `lo, 2 lo, 4 lo, ...` up to `hi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EtaGrid {
    pub lo: f64,
    pub hi: f64,
}

impl EtaGrid {
    pub fn candidates(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut eta = self.lo;
        while eta.is_finite() && eta <= self.hi * (1.0 + 1e-12) {
            out.push(eta);
            eta *= 2.0;
        }
        out
    }
}

impl FromStr for EtaGrid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let body = s
            .strip_prefix("grid:")
            .ok_or_else(|| format!("eta grid '{s}' must look like grid:lo..hi"))?;
        let (lo, hi) = body
            .split_once("..")
            .ok_or_else(|| format!("eta grid '{s}' must look like grid:lo..hi"))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| format!("eta grid bound '{v}': {e}"))
        };
        let (lo, hi) = (parse(lo)?, parse(hi)?);
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi >= lo) {
            return Err(format!("eta grid needs 0 < lo <= hi, got {lo}..{hi}"));
        }
        Ok(EtaGrid { lo, hi })
    }
}

pub fn parse_eta_grid(s: &str) -> Result<EtaGrid, String> {
    s.parse()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eta_grid_doubles() {
        let g: EtaGrid = "grid:1e-4..1".parse().unwrap();
        let c = g.candidates();
        assert_eq!(c.len(), 14);
        assert_eq!(c[0], 1e-4);
        assert!(c.last().unwrap() <= &1.0);
        assert!("grid:1..1e-4".parse::<EtaGrid>().is_err());
        let wide: EtaGrid = format!("grid:1..{}", f64::MAX).parse().unwrap();
        assert_eq!(wide.candidates().len(), 1024);
        assert!("1e-4..1".parse::<EtaGrid>().is_err());
        assert!("grid:0..1".parse::<EtaGrid>().is_err());
        assert_eq!("grid:0.5..0.5".parse::<EtaGrid>().unwrap().candidates(), vec![0.5]);
    }

    #[test]
    fn config_parses_path_and_inline_problems() {
        let text = r#"{
            "problem": "bundle",
            "solvers": [{"mass": "reblock", "params": {"lambda": 0.001}, "k": 10, "T": 100, "seeds": [0, 1]}],
            "record_every": 5
        }"#;
        let mut cfg = parse_experiment_config(text).unwrap();
        cfg.resolve_paths(Path::new("/data"));
        assert_eq!(cfg.problem, ProblemSource::Path("/data/bundle".into()));
        cfg.validate().unwrap();
        assert_eq!(cfg.solvers[0].burn_in().unwrap(), 50);

        let inline = r#"{
            "problem": {"family": "chebyshev", "n": 5, "m": 40, "decay": 1.0, "seed": 3},
            "solvers": [{"name": "TA mSGD", "mass": "msgd", "params": {"tune_eta": "grid:1e-3..1"}, "k": 2, "T": 10, "T_b": 4, "seeds": [7]}]
        }"#;
        let cfg = parse_experiment_config(inline).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.solvers[0].label(), "TA_mSGD");
        assert!(matches!(cfg.problem, ProblemSource::Inline(GeneratorSpec::Chebyshev { n: 5, .. })));
    }

    #[test]
    fn config_rejects_bad_entries() {
        let no_seeds = r#"{"problem": "b", "solvers": [{"mass": "rbk", "k": 2, "T": 10, "seeds": []}]}"#;
        assert!(parse_experiment_config(no_seeds).unwrap().validate().is_err());
        let unknown = r#"{"problem": "b", "solvers": [{"mass": "rbk", "k": 2, "T": 10, "seeds": [1], "x": 1}]}"#;
        assert!(parse_experiment_config(unknown).is_err());
        let dup = r#"{"problem": "b", "solvers": [
            {"mass": "rbk", "k": 2, "T": 10, "seeds": [1]},
            {"mass": "rbk", "k": 3, "T": 10, "seeds": [1]}]}"#;
        assert!(parse_experiment_config(dup).unwrap().validate().is_err());
        let both = r#"{"problem": "b", "solvers": [{"mass": "rbk", "k": 2, "T": 10, "T_b": 2, "tb_frac": 0.5, "seeds": [1]}]}"#;
        assert!(parse_experiment_config(both).unwrap().validate().is_err());
    }

    #[test]
    fn msgd_requires_a_step_size() {
        let spec = SolverSpec {
            name: None,
            mass: MassChoice::Msgd,
            params: MassParams::default(),
            sampler: SamplerChoice::Uniform,
            k: 2,
            total_iters: 10,
            burn_in: None,
            tb_frac: None,
            seeds: vec![0],
        };
        assert!(spec.mass_kind(None).is_err());
        assert_eq!(spec.mass_kind(Some(0.5)).unwrap(), MassMatrixKind::MSgd { step_size: 0.5 });
    }
}
