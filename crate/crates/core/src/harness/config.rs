use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{SyntheticTextConfig, TfidfConfig};
use crate::error::{Error, Result};
use crate::harness::table::Format;
use crate::mechanisms::{ScoringParams, ScoringRule};

/// Either an explicit list or an even grid `0, step, 2 step, ..., 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BudgetGrid {
    List(Vec<f64>),
    Step { step: f64 },
}

impl BudgetGrid {
    pub fn fractions(&self) -> Result<Vec<f64>> {
        match self {
            BudgetGrid::List(v) => Ok(v.clone()),
            BudgetGrid::Step { step } => {
                if !(*step > 0.0 && *step <= 1.0) {
                    return Err(Error::Config(format!("budget step must lie in (0, 1], got {step}")));
                }
                let n = (1.0 / step + 1e-9).floor() as usize;
                let mut v: Vec<f64> = (0..=n).map(|i| ((i as f64 * step) * 1e12).round() / 1e12).collect();
                if *v.last().expect("non-empty") < 1.0 {
                    v.push(1.0);
                }
                Ok(v)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedList {
    Count(u64),
    List(Vec<u64>),
}

impl SeedList {
    pub fn seeds(&self) -> Vec<u64> {
        match self {
            SeedList::Count(n) => (0..*n).collect(),
            SeedList::List(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub rules: Vec<ScoringRule>,
    pub budget_fractions: BudgetGrid,
    pub seeds: SeedList,
    #[serde(default)]
    pub master_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
    /// Per-cell summary table written next to `path`.
    pub summary_path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaussianSetup {
    pub mu1: f64,
    pub mu2: f64,
    pub sigma: f64,
    pub n1: usize,
    pub n2: usize,
}

impl Default for GaussianSetup {
    fn default() -> Self {
        Self {
            mu1: 0.0,
            mu2: 0.5,
            sigma: 1.0,
            n1: 1000,
            n2: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DataSource {
    /// The UCI SMS collection: `ham|spam<TAB>text` per line.
    Sms { path: PathBuf },
    /// `id<TAB>label<TAB>text` per line.
    TextTsv { path: PathBuf, p1_label: usize },
    /// Headed CSV plus a `key = value` schema file.
    FeaturesCsv { path: PathBuf, schema: PathBuf },
    /// The built-in two-cluster spam corpus.
    Synthetic {
        #[serde(default)]
        corpus: SyntheticTextConfig,
    },
}

/// Regularization strength of the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum L2Strength {
    Fixed(f64),
    /// `"auto"`: `1 / n_train`, the per-sample form of a unit inverse penalty.
    Named(L2Name),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum L2Name {
    Auto,
}

impl L2Strength {
    pub fn resolve(&self, n_train: usize) -> f64 {
        match self {
            L2Strength::Fixed(v) => *v,
            L2Strength::Named(L2Name::Auto) => 1.0 / n_train.max(1) as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub train_fraction: f64,
    /// After deletion, cap p2 train rows at `ceil(ratio * remaining p1)`;
    /// no cap when absent.
    pub downsample_ratio: Option<f64>,
    pub l2: L2Strength,
    pub max_iter: usize,
    pub tol: f64,
    /// Label counted by the p1 recalls; defaults to the p1 label.
    pub positive_class: Option<usize>,
    pub tfidf: TfidfConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            train_fraction: 0.8,
            downsample_ratio: None,
            l2: L2Strength::Named(L2Name::Auto),
            max_iter: 5000,
            tol: 1e-6,
            positive_class: None,
            tfidf: TfidfConfig::sms(),
        }
    }
}

/// Everything a sweep needs, validated.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub rules: Vec<ScoringRule>,
    pub budget_fractions: Vec<f64>,
    pub seeds: Vec<u64>,
    pub master_seed: u64,
    pub scoring: ScoringParams,
}

impl SweepConfig {
    pub fn new(
        rules: Vec<ScoringRule>,
        budget_fractions: Vec<f64>,
        seeds: Vec<u64>,
        master_seed: u64,
        scoring: ScoringParams,
    ) -> Result<Self> {
        if rules.is_empty() {
            return Err(Error::Config("at least one rule is required".into()));
        }
        if seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if budget_fractions.is_empty() {
            return Err(Error::Config("at least one budget fraction is required".into()));
        }
        if let Some(b) = budget_fractions.iter().find(|b| !(0.0..=1.0).contains(*b)) {
            return Err(Error::Config(format!("budget fraction {b} is outside [0, 1]")));
        }
        if budget_fractions.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("budget fractions must be strictly ascending".into()));
        }
        let mut seen = seeds.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != seeds.len() {
            return Err(Error::Config("seeds must be distinct".into()));
        }
        let mut r = rules.clone();
        r.sort_unstable();
        r.dedup();
        if r.len() != rules.len() {
            return Err(Error::Config("rules must be distinct".into()));
        }
        Ok(Self {
            rules,
            budget_fractions,
            seeds,
            master_seed,
            scoring,
        })
    }
}

/// One experiment file. Sections: `[sweep]`, `[scoring]`, `[output]`, and
/// either `[gaussian]` or `[dataset]` with `[pipeline]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub sweep: SweepSection,
    #[serde(default)]
    pub scoring: ScoringParams,
    #[serde(default)]
    pub output: OutputSection,
    pub gaussian: Option<GaussianSetup>,
    pub dataset: Option<DataSource>,
    #[serde(default)]
    pub pipeline: PipelineConfig,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config; relative data and output paths resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        if let Some(dir) = path.parent() {
            cfg.rebase(dir);
        }
        Ok(cfg)
    }

    fn rebase(&mut self, dir: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        match &mut self.dataset {
            Some(DataSource::Sms { path }) | Some(DataSource::TextTsv { path, .. }) => fix(path),
            Some(DataSource::FeaturesCsv { path, schema }) => {
                fix(path);
                fix(schema);
            }
            _ => {}
        }
        for p in [&mut self.output.path, &mut self.output.summary_path].into_iter().flatten() {
            fix(p);
        }
    }

    pub fn sweep_config(&self) -> Result<SweepConfig> {
        SweepConfig::new(
            self.sweep.rules.clone(),
            self.sweep.budget_fractions.fractions()?,
            self.sweep.seeds.seeds(),
            self.sweep.master_seed,
            self.scoring.clone(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_file() {
        let text = r#"
[sweep]
rules = ["random", "lr-cos", "tfidf-norm"]
budget_fractions = { step = 0.05 }
seeds = 3
master_seed = 9

[scoring]
k = 5

[output]
path = "out.csv"
format = "json-lines"

[dataset]
source = "synthetic"

[pipeline]
l2 = "auto"
train_fraction = 0.75
[pipeline.tfidf]
max_features = 100
"#;
        let cfg = ExperimentConfig::parse(text).unwrap();
        let sweep = cfg.sweep_config().unwrap();
        assert_eq!(sweep.rules, vec![ScoringRule::Random, ScoringRule::LrCos, ScoringRule::TfidfNorm]);
        assert_eq!(sweep.budget_fractions.len(), 21);
        assert_eq!(sweep.budget_fractions[3], 0.15);
        assert_eq!(sweep.budget_fractions[20], 1.0);
        assert_eq!(sweep.seeds, vec![0, 1, 2]);
        assert_eq!(sweep.scoring.k, 5);
        assert_eq!(cfg.output.format, Some(Format::JsonLines));
        assert!(matches!(cfg.dataset, Some(DataSource::Synthetic { .. })));
        assert_eq!(cfg.pipeline.l2.resolve(200), 0.005);
        assert_eq!(cfg.pipeline.tfidf.max_features, 100);
        assert_eq!(cfg.pipeline.tfidf.ngram_max, 2);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ExperimentConfig::parse("[sweep]\nrules = [\"bogus\"]\nbudget_fractions = [0.0]\nseeds = 1\n").is_err());
        assert!(ExperimentConfig::parse("[sweep]\nrules = [\"random\"]\nbudget_fractions = [0.0]\nseeds = 1\ntypo = 2\n").is_err());
        let ok = |b: &str| {
            ExperimentConfig::parse(&format!("[sweep]\nrules = [\"random\"]\nbudget_fractions = {b}\nseeds = 2\n"))
                .unwrap()
                .sweep_config()
        };
        assert!(ok("[0.0, 0.5, 1.0]").is_ok());
        assert!(ok("[0.5, 0.2]").is_err());
        assert!(ok("[0.0, 1.5]").is_err());
        assert!(ok("{ step = 0.0 }").is_err());
        assert_eq!(ok("{ step = 0.3 }").unwrap().budget_fractions, vec![0.0, 0.3, 0.6, 0.9, 1.0]);
    }
}
