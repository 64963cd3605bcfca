use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use nalgebra::DMatrix;

use distunlearn::bounds::{bound_random, bound_selective, budget_random, budget_selective, Guarantee, Mechanism};
use distunlearn::data::Group;
use distunlearn::frontier::{frontier_expfamily, frontier_gaussian, ExpFamilySpec, ExponentialFamily};
use distunlearn::harness::{
    emit, half_target_budget, run_dataset_sweep, run_gaussian_sweep, saving, Direction, ExperimentConfig, Format,
    LoadedData, OutputSection, SweepResult, SeedList, Table, Value,
};
use distunlearn::mechanisms::{score_features, ScoringRule};

use crate::specs::{read_toml, BoundsFile, FrontierFile, FrontierModel, FrontierSection};
use crate::{OutputArgs, SweepArgs};

/// Writes to the flag path, else the config path, else stdout.
fn write_table(table: &Table, flags: &OutputArgs, config: &OutputSection) -> Result<()> {
    let path = flags.out.as_ref().or(config.path.as_ref());
    let format = flags
        .format
        .or(config.format)
        .or_else(|| path.map(|p| Format::from_path(p)))
        .unwrap_or(Format::Csv);
    match path {
        Some(p) => {
            emit(table, format, p)?;
            eprintln!("wrote {} rows to {}", table.rows.len(), p.display());
        }
        None => std::io::stdout().lock().write_all(table.render(format).as_bytes())?,
    }
    Ok(())
}

const FRONTIER_COLUMNS: [&str; 6] = ["alpha", "epsilon", "dominated", "lambda_star", "residual", "epsilon_closed_form"];

fn expfamily_rows<F: ExponentialFamily>(spec: ExpFamilySpec<F>, alphas: &[f64], multiples: &[f64]) -> Result<Table> {
    let d = spec.reference_divergence();
    let mut t = Table::new(FRONTIER_COLUMNS);
    for a in alphas.iter().copied().chain(multiples.iter().map(|m| m * d)) {
        let p = frontier_expfamily(&spec, a)?;
        t.push(vec![
            p.point.alpha.into(),
            p.point.epsilon.into(),
            p.point.dominated.into(),
            p.lambda_star.into(),
            p.residual.into(),
            p.epsilon_closed_form.into(),
        ]);
    }
    Ok(t)
}

pub fn frontier(
    config: Option<PathBuf>,
    divergence: Option<f64>,
    alphas: Vec<f64>,
    alpha_multiples: Vec<f64>,
    output: OutputArgs,
) -> Result<()> {
    let mut file = match &config {
        Some(p) => read_toml::<FrontierFile>(p)?,
        None => FrontierFile {
            frontier: FrontierSection {
                model: FrontierModel::ClosedForm {
                    divergence: divergence.ok_or_else(|| anyhow!("pass --config or --divergence"))?,
                },
                alphas: Vec::new(),
                alpha_multiples: Vec::new(),
            },
            output: OutputSection::default(),
        },
    };
    if let Some(d) = divergence {
        file.frontier.model = FrontierModel::ClosedForm { divergence: d };
    }
    if !alphas.is_empty() || !alpha_multiples.is_empty() {
        file.frontier.alphas = alphas;
        file.frontier.alpha_multiples = alpha_multiples;
    }
    let FrontierSection {
        model,
        alphas,
        alpha_multiples: mult,
    } = file.frontier;
    if alphas.is_empty() && mult.is_empty() {
        bail!("no removal levels: set `alphas` or `alpha_multiples`");
    }
    let table = match model {
        FrontierModel::ClosedForm { divergence } => {
            let mut t = Table::new(FRONTIER_COLUMNS);
            for a in alphas.iter().copied().chain(mult.iter().map(|m| m * divergence)) {
                let p = frontier_gaussian(divergence, a)?;
                t.push(vec![
                    p.alpha.into(),
                    p.epsilon.into(),
                    p.dominated.into(),
                    Value::Null,
                    Value::Null,
                    Value::Null,
                ]);
            }
            t
        }
        FrontierModel::Gaussian { mu1, mu2, covariance } => {
            let d = covariance.len();
            if covariance.iter().any(|r| r.len() != d) {
                bail!("covariance must be a square matrix");
            }
            let cov = DMatrix::from_row_iterator(d, d, covariance.into_iter().flatten());
            expfamily_rows(ExpFamilySpec::gaussian(&mu1, &mu2, cov)?, &alphas, &mult)?
        }
        FrontierModel::Bernoulli { q1, q2 } => expfamily_rows(ExpFamilySpec::bernoulli(q1, q2)?, &alphas, &mult)?,
        FrontierModel::Poisson { rate1, rate2 } => {
            expfamily_rows(ExpFamilySpec::poisson(rate1, rate2)?, &alphas, &mult)?
        }
        FrontierModel::Exponential { rate1, rate2 } => {
            expfamily_rows(ExpFamilySpec::exponential(rate1, rate2)?, &alphas, &mult)?
        }
    };
    write_table(&table, &output, &file.output)
}

pub fn bounds(config: &Path, output: OutputArgs) -> Result<()> {
    let file: BoundsFile = read_toml(config)?;
    let b = &file.bounds;
    let budgets = b.budgets()?;
    let mechanisms = b.mechanisms()?;
    let targets = match (b.target_alpha, b.target_epsilon) {
        (Some(a), Some(e)) => Some((a, e)),
        (None, None) => None,
        _ => bail!("set both target_alpha and target_epsilon, or neither"),
    };
    let mut t = Table::new(["mechanism", "f", "alpha_lower", "epsilon_upper", "vacuous", "binding_constraint"]);
    for &m in &mechanisms {
        for &f in &budgets {
            let bound = match m {
                Mechanism::Random => Some(bound_random(b.n1, b.n2, f, b.delta, b.divergence)?),
                Mechanism::Selective => match bound_selective(b.n1, b.n2, f, b.delta, b.divergence)? {
                    Guarantee::Bound(g) => Some(g),
                    Guarantee::Inapplicable { .. } => None,
                },
            };
            let binding = match (&bound, targets) {
                (None, _) => "inapplicable",
                (Some(_), None) => "",
                (Some(g), Some((a, e))) => match (g.alpha_lower >= a, g.epsilon_upper <= e) {
                    (true, true) => "none",
                    (false, true) => "removal",
                    (true, false) => "preservation",
                    (false, false) => "both",
                },
            };
            t.push(vec![
                m.to_string().into(),
                f.into(),
                bound.map(|g| g.alpha_lower).into(),
                bound.map(|g| g.epsilon_upper).into(),
                bound.map(|g| g.vacuous()).into(),
                binding.into(),
            ]);
        }
    }
    if let Some((a, e)) = targets {
        for &m in &mechanisms {
            let budget = match m {
                Mechanism::Random => budget_random(b.n1, b.n2, b.delta, b.divergence, a, e)?,
                Mechanism::Selective => budget_selective(b.n1, b.n2, b.delta, b.divergence, a, e)?,
            };
            let f = budget.f.map_or("unreachable".to_string(), |f| f.to_string());
            eprintln!("{m}: smallest certified budget {f} (binding: {})", budget.binding);
            for note in &budget.precondition_notes {
                eprintln!("  note: {note}");
            }
        }
    }
    write_table(&t, &output, &file.output)
}

fn load_experiment(args: &SweepArgs) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(s) = args.seed {
        cfg.sweep.master_seed = s;
    }
    if let Some(n) = args.seeds {
        cfg.sweep.seeds = SeedList::Count(n);
    }
    Ok(cfg)
}

/// Writes both tables, prints half-target budgets, and reports whether every cell succeeded.
fn finish(result: &SweepResult, cfg: &ExperimentConfig, args: &SweepArgs, metric: &str) -> Result<bool> {
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    write_table(&result.cells_table(), &args.output, &cfg.output)?;
    if let Some(p) = args.summary_out.as_ref().or(cfg.output.summary_path.as_ref()) {
        let format = args.output.format.or(cfg.output.format).unwrap_or_else(|| Format::from_path(p));
        emit(&result.summary_table(), format, p)?;
        eprintln!("wrote summary to {}", p.display());
    }
    let direction = Direction::for_metric(metric);
    for &rule in &result.rules {
        let half = half_target_budget(result, rule, metric, direction)?;
        let mut line = format!(
            "{rule}: half-target {metric} budget {}",
            half.map_or("not reached".into(), |h| format!("{h:.4}"))
        );
        if rule != ScoringRule::Random && result.rules.contains(&ScoringRule::Random) {
            match saving(result, ScoringRule::Random, rule, metric, direction) {
                Ok(Some(s)) => line.push_str(&format!(", saving vs random {s:.4}")),
                Ok(None) => line.push_str(", saving undefined"),
                Err(e) => line.push_str(&format!(", saving undefined ({e})")),
            }
        }
        eprintln!("{line}");
    }
    let failed = result.failed();
    if failed == 0 {
        return Ok(true);
    }
    eprintln!("{failed} of {} cells failed", result.cells.len());
    for c in result.cells.iter().filter(|c| c.outcome.is_err()).take(3) {
        if let Err(e) = &c.outcome {
            eprintln!("  {} at budget {} seed {}: {e}", c.rule, c.budget_fraction, c.seed);
        }
    }
    Ok(args.allow_partial)
}

pub fn simulate(args: SweepArgs, mu2: Option<f64>) -> Result<bool> {
    let mut cfg = load_experiment(&args)?;
    let mut setup = cfg
        .gaussian
        .clone()
        .ok_or_else(|| anyhow!("{}: simulate needs a [gaussian] section", args.config.display()))?;
    if let Some(m) = mu2 {
        setup.mu2 = m;
    }
    cfg.gaussian = Some(setup.clone());
    let result = run_gaussian_sweep(&setup, &cfg.sweep_config()?)?;
    finish(&result, &cfg, &args, "alpha")
}

fn dataset_of(cfg: &ExperimentConfig, config: &Path) -> Result<LoadedData> {
    let source = cfg
        .dataset
        .as_ref()
        .ok_or_else(|| anyhow!("{}: needs a [dataset] section", config.display()))?;
    LoadedData::load(source).context("loading dataset")
}

pub fn experiment(args: SweepArgs) -> Result<bool> {
    let cfg = load_experiment(&args)?;
    let data = dataset_of(&cfg, &args.config)?;
    let result = run_dataset_sweep(&data, &cfg.pipeline, &cfg.sweep_config()?)?;
    finish(&result, &cfg, &args, "recall_p1")
}

pub fn score(config: &Path, rules: Vec<ScoringRule>, output: OutputArgs) -> Result<()> {
    let cfg = ExperimentConfig::load(config)?;
    let rules = if rules.is_empty() { cfg.sweep.rules.clone() } else { rules };
    let dataset = dataset_of(&cfg, config)?.featurize(&cfg.pipeline.tfidf)?;
    let p1 = dataset.features().select_rows(&dataset.rows_in(Group::P1));
    let p2 = dataset.features().select_rows(&dataset.rows_in(Group::P2));
    let params = distunlearn::mechanisms::ScoringParams {
        seed: cfg.sweep.master_seed,
        ..cfg.scoring.clone()
    };
    let mut t = Table::new(["index", "score", "rule"]);
    for rule in rules {
        let scores = score_features(&p1, &p2, rule, &params)?;
        for w in &scores.warnings {
            eprintln!("warning: {rule}: {w}");
        }
        for s in &scores.samples {
            t.push(vec![s.index.into(), s.score.into(), rule.name().into()]);
        }
    }
    // The config's output section names the sweep tables, not this one.
    write_table(&t, &output, &OutputSection::default())
}
