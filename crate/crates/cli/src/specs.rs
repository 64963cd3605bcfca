//! Config files for the `frontier` and `bounds` subcommands. Sweep
//! subcommands use [`distunlearn::harness::ExperimentConfig`].

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use distunlearn::bounds::Mechanism;
use distunlearn::harness::OutputSection;

pub fn read_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// The distribution pair whose frontier is traced.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum FrontierModel {
    /// Shared-covariance Gaussians, given only through `KL(p1 || p2)`.
    ClosedForm { divergence: f64 },
    Gaussian {
        mu1: Vec<f64>,
        mu2: Vec<f64>,
        covariance: Vec<Vec<f64>>,
    },
    Bernoulli { q1: f64, q2: f64 },
    Poisson { rate1: f64, rate2: f64 },
    Exponential { rate1: f64, rate2: f64 },
}

#[derive(Debug, Clone, Deserialize)]
pub struct FrontierSection {
    #[serde(flatten)]
    pub model: FrontierModel,
    /// Absolute removal levels.
    #[serde(default)]
    pub alphas: Vec<f64>,
    /// Removal levels as multiples of `KL(p1 || p2)`.
    #[serde(default)]
    pub alpha_multiples: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrontierFile {
    pub frontier: FrontierSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Either explicit budgets or `0, step, 2 step, ..., n1`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum BudgetList {
    List(Vec<usize>),
    Step { step: usize },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSection {
    pub n1: usize,
    pub n2: usize,
    pub delta: f64,
    pub divergence: f64,
    pub f: BudgetList,
    #[serde(default = "both_mechanisms")]
    pub mechanisms: Vec<String>,
    pub target_alpha: Option<f64>,
    pub target_epsilon: Option<f64>,
}

fn both_mechanisms() -> Vec<String> {
    vec!["random".into(), "selective".into()]
}

impl BoundsSection {
    pub fn budgets(&self) -> Result<Vec<usize>> {
        match &self.f {
            BudgetList::List(v) => {
                if let Some(f) = v.iter().find(|&&f| f > self.n1) {
                    bail!("budget {f} exceeds n1 = {}", self.n1);
                }
                Ok(v.clone())
            }
            BudgetList::Step { step: 0 } => bail!("budget step must be positive"),
            BudgetList::Step { step } => {
                let mut v: Vec<usize> = (0..=self.n1).step_by(*step).collect();
                if v.last() != Some(&self.n1) {
                    v.push(self.n1);
                }
                Ok(v)
            }
        }
    }

    pub fn mechanisms(&self) -> Result<Vec<Mechanism>> {
        self.mechanisms
            .iter()
            .map(|m| m.parse::<Mechanism>().map_err(Into::into))
            .collect()
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsFile {
    pub bounds: BoundsSection,
    #[serde(default)]
    pub output: OutputSection,
}
