use std::collections::BTreeSet;

use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::data::{
    corpus_dataset, downsample_p2, load_features_csv, load_sms_collection, load_text_tsv,
    stratified_indices, synthetic_spam_corpus, FeatureSchema, Group, LabeledDataset, TextCorpus, TfidfConfig, TfidfModel,
};
use crate::downstream::{evaluate, train_logistic};
use crate::error::{Error, Result};
use crate::gaussian::{kl_gaussian, pooled_mean_1d, GaussianModel};
use crate::harness::config::{DataSource, GaussianSetup, PipelineConfig, SweepConfig};
use crate::harness::table::{Table, Value};
use crate::matrix::{DenseMatrix, FeatureMatrix};
use crate::mechanisms::{
    apply_plan, plan_from_scores, random_removal, score_features, RemovalPlan, ScoredSample, ScoringParams,
    ScoringRule,
};
use crate::rng::{derive_seed, fnv1a, rng_from_seed};

/// Sub-seed for one random stream.
///
/// `stream` names the purpose ("data", "split", "downsample", or a rule name
/// for plans and "train" for classifiers); the remaining tags are budget and
/// seed indices. See [`crate::rng::derive_seed`] for the fold.
pub fn cell_seed(master: u64, stream: &str, tags: &[u64]) -> u64 {
    let mut all = vec![fnv1a(stream)];
    all.extend_from_slice(tags);
    derive_seed(master, &all)
}

/// Worker pool sized by `DISTUNLEARN_WORKERS`, or rayon's default when unset.
pub fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("DISTUNLEARN_WORKERS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Config(format!("DISTUNLEARN_WORKERS must be a positive integer, got `{v}`")))?;
        b = b.num_threads(n);
    }
    b.build().map_err(|e| Error::Config(e.to_string()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub rule: ScoringRule,
    pub budget_index: usize,
    pub budget_fraction: f64,
    /// Number of p1 rows deleted.
    pub f: usize,
    pub seed: u64,
    /// Metric values in [`SweepResult::metric_names`] order, or the failure reason.
    pub outcome: std::result::Result<Vec<f64>, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub rule: ScoringRule,
    pub budget_fraction: f64,
    pub metric: String,
    pub mean: f64,
    /// Sample standard deviation over `sqrt(n)`; NaN when `n < 2`.
    pub std_err: f64,
    pub n: usize,
    pub n_failed: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepResult {
    pub metric_names: Vec<String>,
    pub rules: Vec<ScoringRule>,
    pub budget_fractions: Vec<f64>,
    /// Ordered by rule (config order), budget, then seed.
    pub cells: Vec<CellResult>,
    pub warnings: Vec<String>,
}

impl SweepResult {
    pub fn metric_index(&self, metric: &str) -> Result<usize> {
        self.metric_names
            .iter()
            .position(|m| m == metric)
            .ok_or_else(|| Error::Config(format!("unknown metric `{metric}`; have {:?}", self.metric_names)))
    }

    pub fn failed(&self) -> usize {
        self.cells.iter().filter(|c| c.outcome.is_err()).count()
    }

    /// Seed-mean of `metric` for each swept budget; `None` where no seed produced a finite value.
    pub fn mean_curve(&self, rule: ScoringRule, metric: &str) -> Result<Vec<(f64, Option<f64>)>> {
        let m = self.metric_index(metric)?;
        if !self.rules.contains(&rule) {
            return Err(Error::UnknownRule(rule.to_string()));
        }
        Ok(self
            .budget_fractions
            .iter()
            .enumerate()
            .map(|(b, &frac)| {
                let vals: Vec<f64> = self
                    .cells
                    .iter()
                    .filter(|c| c.rule == rule && c.budget_index == b)
                    .filter_map(|c| c.outcome.as_ref().ok().map(|v| v[m]))
                    .filter(|v| v.is_finite())
                    .collect();
                (frac, (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64))
            })
            .collect())
    }

    pub fn summary(&self) -> Vec<CellSummary> {
        let mut out = Vec::new();
        for &rule in &self.rules {
            for (b, &frac) in self.budget_fractions.iter().enumerate() {
                let cells: Vec<&CellResult> =
                    self.cells.iter().filter(|c| c.rule == rule && c.budget_index == b).collect();
                let n_failed = cells.iter().filter(|c| c.outcome.is_err()).count();
                for (m, name) in self.metric_names.iter().enumerate() {
                    let vals: Vec<f64> = cells
                        .iter()
                        .filter_map(|c| c.outcome.as_ref().ok().map(|v| v[m]))
                        .filter(|v| v.is_finite())
                        .collect();
                    let n = vals.len();
                    let mean = if n == 0 { f64::NAN } else { vals.iter().sum::<f64>() / n as f64 };
                    let std_err = if n < 2 {
                        f64::NAN
                    } else {
                        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                        (var / n as f64).sqrt()
                    };
                    out.push(CellSummary {
                        rule,
                        budget_fraction: frac,
                        metric: name.clone(),
                        mean,
                        std_err,
                        n,
                        n_failed,
                    });
                }
            }
        }
        out
    }

    /// One row per (rule, budget, seed).
    pub fn cells_table(&self) -> Table {
        let mut cols: Vec<String> = ["rule", "budget_fraction", "f", "seed", "status"].map(String::from).to_vec();
        cols.extend(self.metric_names.iter().cloned());
        cols.push("error".into());
        let mut t = Table::new(cols);
        for c in &self.cells {
            let mut row: Vec<Value> = vec![
                c.rule.name().into(),
                c.budget_fraction.into(),
                c.f.into(),
                c.seed.into(),
                if c.outcome.is_ok() { "ok" } else { "failed" }.into(),
            ];
            match &c.outcome {
                Ok(v) => {
                    row.extend(v.iter().map(|&x| Value::Float(x)));
                    row.push(Value::Null);
                }
                Err(e) => {
                    row.extend(self.metric_names.iter().map(|_| Value::Null));
                    row.push(e.clone().into());
                }
            }
            t.push(row);
        }
        t
    }

    pub fn summary_table(&self) -> Table {
        let mut t = Table::new(["rule", "budget_fraction", "metric", "mean", "std_err", "n", "n_failed"]);
        for s in self.summary() {
            t.push(vec![
                s.rule.name().into(),
                s.budget_fraction.into(),
                s.metric.into(),
                s.mean.into(),
                s.std_err.into(),
                s.n.into(),
                s.n_failed.into(),
            ]);
        }
        t
    }
}

fn budget_count(fraction: f64, n1: usize) -> usize {
    ((fraction * n1 as f64).round() as usize).min(n1)
}

fn column(v: &[f64]) -> FeatureMatrix {
    FeatureMatrix::Dense(DenseMatrix::new(v.len(), 1, v.to_vec()).expect("shape matches"))
}

/// Plans for every budget of one (rule, seed) pair. Score-based rules share
/// one ranking; random plans draw a fresh seed per budget.
fn plans_for(
    rule: ScoringRule,
    config: &SweepConfig,
    seed: u64,
    n1: usize,
    scores: impl FnOnce() -> Result<Vec<ScoredSample>>,
) -> Vec<(usize, Result<RemovalPlan>)> {
    let budgets: Vec<usize> = config.budget_fractions.iter().map(|&b| budget_count(b, n1)).collect();
    if rule == ScoringRule::Random {
        return budgets
            .iter()
            .enumerate()
            .map(|(b, &f)| {
                let s = cell_seed(config.master_seed, rule.name(), &[b as u64, seed]);
                (f, random_removal(n1, f, s))
            })
            .collect();
    }
    match scores() {
        Ok(sc) => budgets
            .iter()
            .map(|&f| (f, plan_from_scores(&sc, f, rule, 0)))
            .collect(),
        Err(e) => {
            let msg = e.to_string();
            budgets
                .iter()
                .map(|&f| (f, Err(Error::InvalidArgument(format!("scoring failed: {msg}")))))
                .collect()
        }
    }
}

fn assemble(
    config: &SweepConfig,
    metric_names: Vec<String>,
    mut per_task: Vec<((usize, usize), Vec<(usize, std::result::Result<Vec<f64>, String>)>)>,
    warnings: Vec<String>,
) -> SweepResult {
    // Keyed merge: order does not depend on scheduling.
    per_task.sort_by_key(|(k, _)| *k);
    let mut cells = Vec::new();
    for (r, rule) in config.rules.iter().enumerate() {
        for b in 0..config.budget_fractions.len() {
            for (s, &seed) in config.seeds.iter().enumerate() {
                let (_, task) = &per_task[r * config.seeds.len() + s];
                let (f, outcome) = task[b].clone();
                cells.push(CellResult {
                    rule: *rule,
                    budget_index: b,
                    budget_fraction: config.budget_fractions[b],
                    f,
                    seed,
                    outcome,
                });
            }
        }
    }
    SweepResult {
        metric_names,
        rules: config.rules.clone(),
        budget_fractions: config.budget_fractions.clone(),
        cells,
        warnings,
    }
}

/// Deletion sweep on two univariate Gaussians with known variance. Each cell
/// refits `N(mu_hat, sigma^2)` on the kept samples and reports
/// `alpha = KL(p1 || p)`, `epsilon = KL(p2 || p)` and `mu_hat`.
pub fn run_gaussian_sweep(setup: &GaussianSetup, config: &SweepConfig) -> Result<SweepResult> {
    if !setup.mu1.is_finite() || !setup.mu2.is_finite() {
        return Err(Error::invalid("Gaussian means must be finite"));
    }
    if setup.n1 == 0 || setup.n2 == 0 {
        return Err(Error::EmptySample);
    }
    let var = setup.sigma * setup.sigma;
    let p1 = GaussianModel::univariate(setup.mu1, var)?;
    let p2 = GaussianModel::univariate(setup.mu2, var)?;

    let samples: Vec<(Vec<f64>, Vec<f64>)> = config
        .seeds
        .iter()
        .map(|&s| {
            let mut rng = rng_from_seed(cell_seed(config.master_seed, "data", &[s]));
            let mut draw = |mu: f64, n: usize| -> Vec<f64> {
                (0..n).map(|_| mu + setup.sigma * rng.sample::<f64, _>(StandardNormal)).collect()
            };
            let a = draw(setup.mu1, setup.n1);
            let b = draw(setup.mu2, setup.n2);
            (a, b)
        })
        .collect();

    let tasks: Vec<(usize, usize)> = (0..config.rules.len())
        .flat_map(|r| (0..config.seeds.len()).map(move |s| (r, s)))
        .collect();
    let run = |&(r, s): &(usize, usize)| {
        let rule = config.rules[r];
        let (x1, x2) = &samples[s];
        let plans = plans_for(rule, config, config.seeds[s], setup.n1, || {
            let params = ScoringParams {
                seed: cell_seed(config.master_seed, rule.name(), &[config.seeds[s]]),
                ..config.scoring.clone()
            };
            Ok(score_features(&column(x1), &column(x2), rule, &params)?.samples)
        });
        let out = plans
            .into_iter()
            .map(|(f, plan)| {
                let outcome = plan.and_then(|plan| {
                    let mut drop = vec![false; x1.len()];
                    plan.removed_indices.iter().for_each(|&i| drop[i] = true);
                    let kept: Vec<f64> = (0..x1.len()).filter(|&i| !drop[i]).map(|i| x1[i]).collect();
                    let mu_hat = pooled_mean_1d(&kept, x2)?;
                    let p = GaussianModel::univariate(mu_hat, var)?;
                    Ok(vec![kl_gaussian(&p1, &p)?, kl_gaussian(&p2, &p)?, mu_hat])
                });
                (f, outcome.map_err(|e: Error| e.to_string()))
            })
            .collect();
        ((r, s), out)
    };
    let per_task = worker_pool()?.install(|| tasks.par_iter().map(run).collect());
    Ok(assemble(
        config,
        ["alpha", "epsilon", "mu_hat"].map(String::from).to_vec(),
        per_task,
        Vec::new(),
    ))
}

/// A loaded dataset before splitting.
#[derive(Debug, Clone)]
pub enum LoadedData {
    /// Raw text; the p1 group is every row labelled `p1_label`.
    Text { corpus: TextCorpus, p1_label: usize },
    Features(LabeledDataset),
}

impl LoadedData {
    pub fn load(source: &DataSource) -> Result<Self> {
        Ok(match source {
            DataSource::Sms { path } => LoadedData::Text {
                corpus: load_sms_collection(path)?,
                p1_label: 1,
            },
            DataSource::TextTsv { path, p1_label } => LoadedData::Text {
                corpus: load_text_tsv(path)?,
                p1_label: *p1_label,
            },
            DataSource::FeaturesCsv { path, schema } => {
                LoadedData::Features(load_features_csv(path, &FeatureSchema::load(schema)?)?)
            }
            DataSource::Synthetic { corpus } => LoadedData::Text {
                corpus: synthetic_spam_corpus(corpus)?,
                p1_label: 1,
            },
        })
    }

    /// Every row as one dataset; text is featurized with a TF-IDF model fit
    /// on the whole corpus.
    pub fn featurize(&self, tfidf: &TfidfConfig) -> Result<LabeledDataset> {
        match self {
            LoadedData::Text { corpus, p1_label } => {
                let model = TfidfModel::fit(&corpus.texts, tfidf)?;
                Ok(corpus_dataset(corpus, &model, *p1_label, self.n_classes())?.0)
            }
            LoadedData::Features(d) => Ok(d.clone()),
        }
    }

    fn groups_labels(&self) -> (Vec<Group>, Vec<usize>) {
        match self {
            LoadedData::Text { corpus, p1_label } => (corpus.groups(*p1_label), corpus.labels.clone()),
            LoadedData::Features(d) => (d.groups().to_vec(), d.labels().to_vec()),
        }
    }

    fn n_classes(&self) -> usize {
        match self {
            LoadedData::Text { corpus, .. } => corpus.labels.iter().max().map_or(2, |m| (m + 1).max(2)),
            LoadedData::Features(d) => d.n_classes(),
        }
    }

    /// Label counted by the p1 recalls when the config does not name one.
    fn default_positive(&self) -> usize {
        match self {
            LoadedData::Text { p1_label, .. } => *p1_label,
            LoadedData::Features(d) => {
                let mut counts = vec![0usize; d.n_classes()];
                for i in d.rows_in(Group::P1) {
                    counts[d.labels()[i]] += 1;
                }
                // Most frequent p1 label, lowest on ties.
                (0..counts.len()).rev().max_by_key(|&c| counts[c]).unwrap_or(1)
            }
        }
    }
}

/// Train and validation sets for one seed.
pub struct PreparedSplit {
    pub train: LabeledDataset,
    pub validation: LabeledDataset,
    pub warnings: Vec<String>,
}

/// Split and featurize for one seed index.
pub fn prepare_split(data: &LoadedData, pipeline: &PipelineConfig, master: u64, seed: u64) -> Result<PreparedSplit> {
    let (groups, labels) = data.groups_labels();
    let split = stratified_indices(&groups, &labels, pipeline.train_fraction, cell_seed(master, "split", &[seed]))?;
    let mut warnings = split.warnings.clone();
    let train_rows = split.train.clone();
    let (train, validation) = match data {
        LoadedData::Text { corpus, p1_label } => {
            let tr = corpus.subset(&train_rows);
            let va = corpus.subset(&split.validation);
            let model = TfidfModel::fit(&tr.texts, &pipeline.tfidf)?;
            let k = data.n_classes();
            let (train, e1) = corpus_dataset(&tr, &model, *p1_label, k)?;
            let (validation, e2) = corpus_dataset(&va, &model, *p1_label, k)?;
            if !e1.is_empty() || !e2.is_empty() {
                warnings.push(format!(
                    "seed {seed}: {} train and {} validation rows have no in-vocabulary terms",
                    e1.len(),
                    e2.len()
                ));
            }
            (train, validation)
        }
        LoadedData::Features(d) => (d.subset(&train_rows)?, d.subset(&split.validation)?),
    };
    Ok(PreparedSplit {
        train,
        validation,
        warnings,
    })
}

/// Metric column names of a dataset sweep.
pub fn dataset_metric_names(n_classes: usize) -> Vec<String> {
    let mut names: Vec<String> = ["recall_p1", "recall_p1_group", "macro_f1_p2", "accuracy", "logloss", "converged"]
        .map(String::from)
        .to_vec();
    if n_classes > 2 {
        names.extend((0..n_classes).map(|c| format!("accuracy_class_{c}")));
    }
    names
}

/// Full pipeline per (rule, budget, seed): split, featurize, score, delete,
/// downsample p2 against the remaining p1, retrain, evaluate on the
/// untouched validation split.
pub fn run_dataset_sweep(data: &LoadedData, pipeline: &PipelineConfig, config: &SweepConfig) -> Result<SweepResult> {
    let n_classes = data.n_classes();
    let positive = pipeline.positive_class.unwrap_or_else(|| data.default_positive());
    let pool = worker_pool()?;
    let splits: Vec<std::result::Result<PreparedSplit, String>> = pool.install(|| {
        config
            .seeds
            .par_iter()
            .map(|&s| prepare_split(data, pipeline, config.master_seed, s).map_err(|e| e.to_string()))
            .collect()
    });
    let mut warnings = Vec::new();
    for s in splits.iter().flatten() {
        warnings.extend(s.warnings.iter().cloned());
    }

    let tasks: Vec<(usize, usize)> = (0..config.rules.len())
        .flat_map(|r| (0..config.seeds.len()).map(move |s| (r, s)))
        .collect();
    let run = |&(r, s): &(usize, usize)| {
        let rule = config.rules[r];
        let seed = config.seeds[s];
        let split = match &splits[s] {
            Ok(sp) => sp,
            Err(e) => {
                let out = config.budget_fractions.iter().map(|_| (0, Err(format!("split failed: {e}")))).collect();
                return ((r, s), out);
            }
        };
        let train = &split.train;
        let p1_rows = train.rows_in(Group::P1);
        let p2_rows = train.rows_in(Group::P2);
        let plans = plans_for(rule, config, seed, p1_rows.len(), || {
            let params = ScoringParams {
                seed: cell_seed(config.master_seed, rule.name(), &[seed]),
                ..config.scoring.clone()
            };
            let p1 = train.features().select_rows(&p1_rows);
            let p2 = train.features().select_rows(&p2_rows);
            Ok(score_features(&p1, &p2, rule, &params)?.samples)
        });
        let out = plans
            .into_iter()
            .enumerate()
            .map(|(b, (f, plan))| {
                let outcome = plan.and_then(|plan| {
                    let mut kept = apply_plan(train, &plan)?;
                    if let Some(ratio) = pipeline.downsample_ratio {
                        // Same p2 subset for every rule at this budget.
                        let ds_seed = cell_seed(config.master_seed, "downsample", &[b as u64, seed]);
                        kept = downsample_p2(&kept, ratio, ds_seed)?;
                    }
                    let l2 = pipeline.l2.resolve(kept.len());
                    let train_seed = cell_seed(config.master_seed, "train", &[fnv1a(rule.name()), b as u64, seed]);
                    let model = train_logistic(&kept, l2, train_seed, pipeline.max_iter, pipeline.tol)?;
                    let m = evaluate(&model, &split.validation, positive)?;
                    let undefined = |v: Option<f64>| v.unwrap_or(f64::NAN);
                    let mut row = vec![
                        undefined(m.recall_p1),
                        undefined(m.recall_p1_group),
                        undefined(m.macro_f1_p2),
                        m.accuracy,
                        m.logloss,
                        if model.meta.converged { 1.0 } else { 0.0 },
                    ];
                    if n_classes > 2 {
                        row.extend((0..n_classes).map(|c| m.accuracy_per_class.get(&c).copied().unwrap_or(f64::NAN)));
                    }
                    Ok(row)
                });
                (f, outcome.map_err(|e: Error| e.to_string()))
            })
            .collect();
        ((r, s), out)
    };
    let per_task = pool.install(|| tasks.par_iter().map(run).collect());
    let mut result = assemble(config, dataset_metric_names(n_classes), per_task, warnings);
    let unconverged: BTreeSet<(ScoringRule, usize)> = result
        .cells
        .iter()
        .filter(|c| matches!(&c.outcome, Ok(v) if v[5] == 0.0))
        .map(|c| (c.rule, c.budget_index))
        .collect();
    if !unconverged.is_empty() {
        result.warnings.push(format!(
            "{} (rule, budget) cells contain classifiers that hit max_iter",
            unconverged.len()
        ));
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SyntheticTextConfig;

    fn config(rules: Vec<ScoringRule>, budgets: Vec<f64>, seeds: u64) -> SweepConfig {
        SweepConfig::new(rules, budgets, (0..seeds).collect(), 11, ScoringParams::default()).unwrap()
    }

    #[test]
    fn gaussian_sweep_edges() {
        let setup = GaussianSetup {
            n1: 200,
            n2: 5000,
            ..Default::default()
        };
        let rules = vec![ScoringRule::Random, ScoringRule::SelectiveGaussian, ScoringRule::TfidfNorm];
        let cfg = config(rules.clone(), vec![0.0, 0.5, 1.0], 3);
        let r = run_gaussian_sweep(&setup, &cfg).unwrap();
        assert_eq!(r.cells.len(), 3 * 3 * 3);
        assert_eq!(r.failed(), 0);
        for s in 0..3 {
            let at = |rule: ScoringRule, b: usize| {
                r.cells
                    .iter()
                    .find(|c| c.rule == rule && c.budget_index == b && c.seed == s)
                    .unwrap()
                    .outcome
                    .clone()
                    .unwrap()
            };
            assert_eq!(at(rules[0], 0), at(rules[1], 0));
            assert_eq!(at(rules[0], 0), at(rules[2], 0));
            assert_eq!(at(rules[0], 2), at(rules[1], 2));
            assert!(at(rules[0], 2)[1] < 1e-3);
        }
        assert_eq!(r, run_gaussian_sweep(&setup, &cfg).unwrap());
        let summary = r.summary();
        assert_eq!(summary.len(), 3 * 3 * 3);
        assert!(summary.iter().all(|s| s.n == 3 && s.std_err.is_finite()));
    }

    /// A small synthetic text sweep: budget 0 agrees across rules, full
    /// deletion leaves a single-class training set and is recorded as failed.
    #[test]
    fn dataset_sweep_edges() {
        let data = LoadedData::load(&DataSource::Synthetic {
            corpus: SyntheticTextConfig {
                n_ham: 200,
                n_spam: 60,
                ..Default::default()
            },
        })
        .unwrap();
        let rules = vec![ScoringRule::Random, ScoringRule::LrCos, ScoringRule::KnnRatio];
        let cfg = SweepConfig::new(
            rules,
            vec![0.0, 0.5, 1.0],
            vec![4],
            3,
            ScoringParams {
                k: 3,
                ..Default::default()
            },
        )
        .unwrap();
        let pipeline = PipelineConfig::default();
        let r = run_dataset_sweep(&data, &pipeline, &cfg).unwrap();
        let zero: Vec<&CellResult> = r.cells.iter().filter(|c| c.budget_index == 0).collect();
        assert!(zero.windows(2).all(|w| w[0].outcome == w[1].outcome));
        assert!(zero[0].outcome.as_ref().unwrap()[0] > 0.5);
        let full: Vec<&CellResult> = r.cells.iter().filter(|c| c.budget_index == 2).collect();
        assert!(full.iter().all(|c| c.outcome.as_ref().unwrap_err().contains("single class")));
        assert_eq!(r.failed(), 3);
        assert_eq!(r, run_dataset_sweep(&data, &pipeline, &cfg).unwrap());
        let table = r.cells_table();
        assert_eq!(table.rows.len(), 9);

        // Downsampling follows deletion and is shared across rules.
        let capped = PipelineConfig {
            downsample_ratio: Some(1.0),
            ..PipelineConfig::default()
        };
        let d = run_dataset_sweep(&data, &capped, &cfg).unwrap();
        let zero: Vec<&CellResult> = d.cells.iter().filter(|c| c.budget_index == 0).collect();
        assert!(zero.windows(2).all(|w| w[0].outcome == w[1].outcome));
        assert_ne!(zero[0].outcome, r.cells[0].outcome);
        assert!(d.cells.iter().filter(|c| c.budget_index == 2).all(|c| c.outcome.is_err()));
    }

    #[test]
    fn sub_seeds_differ_by_stream() {
        let a = cell_seed(1, "split", &[0]);
        assert_ne!(a, cell_seed(1, "downsample", &[0]));
        assert_ne!(a, cell_seed(1, "split", &[1]));
        assert_ne!(a, cell_seed(2, "split", &[0]));
        assert_eq!(a, cell_seed(1, "split", &[0]));
    }
}
