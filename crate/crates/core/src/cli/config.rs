//! TOML experiment configuration.
//!
//! ```toml
//! seed = 7
//! reps = 200
//! n_list = [256, 1024]
//! t_grid = [0.5, 1.0, 2.0]
//! x_grid = [0.1, 0.5, 0.9]
//! rates = "quantile"          # or "iid"
//!
//! [law]
//! kind = "discrete"           # or "pareto" (a, b) or "empirical" (file)
//! atoms = [[1.0, 0.5], [2.0, 0.5]]
//!
//! [profile]                   # optional; default: uniform placement
//! blocks = [[0.0, 0.5, [[1.0, 1.0]]], [0.5, 1.0, [[2.0, 1.0]]]]
//! ```

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context};
use serde::Deserialize;

use crate::hydro::{Block, GridSpec, InitialProfile};
use crate::rates::{DiscreteLaw, EmpiricalMode, RateLaw};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum LawSpec {
    Pareto {
        a: f64,
        b: f64,
    },
    Discrete {
        atoms: Vec<(f64, f64)>,
    },
    /// One rate per line; relative paths resolve against the config file.
    Empirical {
        file: PathBuf,
    },
}

/// `[y_lo, y_hi, [[rate, prob], ...]]`.
pub type BlockSpec = (f64, f64, Vec<(f64, f64)>);

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub blocks: Vec<BlockSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RatesMode {
    #[default]
    Quantile,
    Iid,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Records pass when `|analytic - empirical| <= z * se`.
    pub z_threshold: f64,
    /// Family-wise level used for the KS band and the Bonferroni widening.
    pub family_alpha: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            z_threshold: 4.0,
            family_alpha: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PdeSpec {
    pub y_min: f64,
    pub y_max: f64,
    pub n_y: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub n_t: usize,
    pub h: f64,
}

impl Default for PdeSpec {
    fn default() -> Self {
        Self {
            y_min: 0.01,
            y_max: 0.99,
            n_y: 200,
            t_min: 0.01,
            t_max: 2.0,
            n_t: 200,
            h: 5e-3,
        }
    }
}

impl PdeSpec {
    pub fn grid(&self) -> GridSpec {
        GridSpec {
            y_min: self.y_min,
            y_max: self.y_max,
            n_y: self.n_y,
            t_min: self.t_min,
            t_max: self.t_max,
            n_t: self.n_t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub dir: Option<PathBuf>,
    /// Write the raw `cost, rate` samples of `simulate`.
    pub dump_samples: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: None,
            dump_samples: true,
        }
    }
}

/// Test-only hooks for exercising the comparison harness.
#[derive(Debug, Clone, Copy, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TestHooks {
    /// Added to every analytic value in `compare`.
    pub inject_analytic_offset: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub law: LawSpec,
    #[serde(default)]
    pub profile: Option<ProfileSpec>,
    pub n_list: Vec<usize>,
    pub t_grid: Vec<f64>,
    pub x_grid: Vec<f64>,
    #[serde(default = "one")]
    pub reps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub rates: RatesMode,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub pde: PdeSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub test: TestHooks,
    /// Directory of the config file, for resolving relative paths.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn one() -> usize {
    1
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> anyhow::Result<Self> {
        let mut cfg: Self = toml::from_str(text).context("parsing experiment config")?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, &base).with_context(|| format!("in {}", path.display()))
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        ensure!(!self.n_list.is_empty(), "n_list must not be empty");
        ensure!(
            self.n_list.iter().all(|&n| n >= 1),
            "every n in n_list must be at least 1"
        );
        ensure!(!self.t_grid.is_empty(), "t_grid must not be empty");
        ensure!(
            strictly_increasing(&self.t_grid),
            "t_grid must be strictly increasing"
        );
        ensure!(
            self.t_grid.iter().all(|t| t.is_finite() && *t >= 0.0),
            "t_grid values must be finite and >= 0"
        );
        ensure!(!self.x_grid.is_empty(), "x_grid must not be empty");
        ensure!(
            strictly_increasing(&self.x_grid),
            "x_grid must be strictly increasing"
        );
        ensure!(
            self.x_grid.iter().all(|x| *x > 0.0 && *x < 1.0),
            "x_grid values must lie in (0, 1)"
        );
        ensure!(self.reps >= 1, "reps must be at least 1");
        ensure!(
            self.tolerances.z_threshold > 0.0,
            "z_threshold must be positive"
        );
        ensure!(
            self.tolerances.family_alpha > 0.0 && self.tolerances.family_alpha < 1.0,
            "family_alpha must lie in (0, 1)"
        );
        self.law()?;
        if self.profile.is_some() {
            self.profile()?;
        }
        Ok(())
    }

    pub fn law(&self) -> anyhow::Result<RateLaw> {
        Ok(match &self.law {
            LawSpec::Pareto { a, b } => RateLaw::pareto(*a, *b)?,
            LawSpec::Discrete { atoms } => RateLaw::discrete(atoms)?,
            LawSpec::Empirical { file } => {
                let path = self.base_dir.join(file);
                let text = std::fs::read_to_string(&path)
                    .with_context(|| format!("reading {}", path.display()))?;
                let mut rates = Vec::new();
                for (i, line) in text.lines().enumerate() {
                    let line = line.trim();
                    if line.is_empty() {
                        continue;
                    }
                    let w: f64 = line.parse().with_context(|| {
                        format!("{}:{}: not a number: {line:?}", path.display(), i + 1)
                    })?;
                    rates.push(w);
                }
                RateLaw::empirical(rates)?
            }
        })
    }

    /// The configured profile, or uniform placement of an atomic law.
    pub fn profile(&self) -> anyhow::Result<Option<InitialProfile>> {
        let Some(spec) = &self.profile else {
            let law = self.law()?;
            return Ok(match law.atomic() {
                Some(_) => Some(InitialProfile::fresh(&law)?),
                None => None,
            });
        };
        let mut blocks = Vec::with_capacity(spec.blocks.len());
        for (lo, hi, atoms) in &spec.blocks {
            let RateLaw::Discrete(mix) = RateLaw::discrete(atoms)? else {
                bail!("block mixture must be discrete")
            };
            blocks.push(Block {
                lo: *lo,
                hi: *hi,
                mix: mix as DiscreteLaw,
            });
        }
        Ok(Some(InitialProfile::new(blocks)?))
    }

    pub fn empirical_mode(&self, stream: u64) -> EmpiricalMode {
        match self.rates {
            RatesMode::Quantile => EmpiricalMode::Quantile,
            RatesMode::Iid => EmpiricalMode::Iid {
                seed: crate::sim::replica_seed(self.seed, stream),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
        n_list = [16]
        t_grid = [0.5, 1.0]
        x_grid = [0.25, 0.5]
        [law]
        kind = "discrete"
        atoms = [[1.0, 0.5], [2.0, 0.5]]
    "#;

    #[test]
    fn parses_with_defaults() {
        let cfg = ExperimentConfig::from_toml(BASE, Path::new(".")).unwrap();
        assert_eq!(cfg.reps, 1);
        assert_eq!(cfg.tolerances.z_threshold, 4.0);
        assert_eq!(cfg.rates, RatesMode::Quantile);
        assert_eq!(cfg.pde.n_y, 200);
        assert!(cfg.profile().unwrap().is_some());
    }

    #[test]
    fn rejects_bad_grids() {
        let empty_t = BASE.replace("t_grid = [0.5, 1.0]", "t_grid = []");
        assert!(ExperimentConfig::from_toml(&empty_t, Path::new(".")).is_err());
        let unsorted = BASE.replace("x_grid = [0.25, 0.5]", "x_grid = [0.5, 0.25]");
        assert!(ExperimentConfig::from_toml(&unsorted, Path::new(".")).is_err());
        let zero_reps = format!("reps = 0\n{BASE}");
        assert!(ExperimentConfig::from_toml(&zero_reps, Path::new(".")).is_err());
        let bad_law = BASE.replace("[2.0, 0.5]]", "[2.0, 0.4]]");
        assert!(ExperimentConfig::from_toml(&bad_law, Path::new(".")).is_err());
        let unknown = format!("bogus = 1\n{BASE}");
        assert!(ExperimentConfig::from_toml(&unknown, Path::new(".")).is_err());
    }

    #[test]
    fn parses_profiles_and_pareto() {
        let text = r#"
            n_list = [8]
            t_grid = [1.0]
            x_grid = [0.5]
            [law]
            kind = "discrete"
            atoms = [[1.0, 0.5], [2.0, 0.5]]
            [profile]
            blocks = [[0.0, 0.5, [[1.0, 1.0]]], [0.5, 1.0, [[2.0, 1.0]]]]
        "#;
        let cfg = ExperimentConfig::from_toml(text, Path::new(".")).unwrap();
        assert_eq!(cfg.profile().unwrap().unwrap().blocks().len(), 2);

        let pareto = r#"
            n_list = [8]
            t_grid = [1.0]
            x_grid = [0.5]
            [law]
            kind = "pareto"
            a = 1.0
            b = 0.5
        "#;
        let cfg = ExperimentConfig::from_toml(pareto, Path::new(".")).unwrap();
        assert!(cfg.profile().unwrap().is_none());
    }

    #[test]
    fn reads_empirical_files() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("w.txt"), "1.5\n2.5\n\n1.5\n").unwrap();
        let text = r#"
            n_list = [8]
            t_grid = [1.0]
            x_grid = [0.5]
            [law]
            kind = "empirical"
            file = "w.txt"
        "#;
        let cfg = ExperimentConfig::from_toml(text, dir.path()).unwrap();
        let law = cfg.law().unwrap();
        assert_eq!(law.atomic().unwrap().atoms().len(), 2);
        std::fs::write(dir.path().join("w.txt"), "1.5\nabc\n").unwrap();
        assert!(ExperimentConfig::from_toml(text, dir.path()).is_err());
    }
}
