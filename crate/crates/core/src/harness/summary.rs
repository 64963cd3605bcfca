use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::sweep::SweepResult;
use crate::mechanisms::ScoringRule;

/// Which way a removal metric moves as deletion grows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// Recall or accuracy on p1: the target is half the no-deletion value.
    Decreasing,
    /// Divergence from p1: the target is half the full-deletion value.
    Increasing,
}

impl Direction {
    /// The usual direction of a named metric.
    pub fn for_metric(metric: &str) -> Direction {
        match metric {
            "alpha" => Direction::Increasing,
            _ => Direction::Decreasing,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Decreasing => "decreasing",
            Direction::Increasing => "increasing",
        })
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "decreasing" => Ok(Direction::Decreasing),
            "increasing" => Ok(Direction::Increasing),
            other => Err(Error::Config(format!("unknown direction `{other}`"))),
        }
    }
}

/// Smallest budget fraction at which the seed-mean of `metric` reaches
/// `target`, interpolating linearly between the last budget short of it
/// and the first one past it. `None` if no swept budget qualifies. Budgets
/// where every seed failed are skipped.
pub fn budget_to_reach(
    result: &SweepResult,
    rule: ScoringRule,
    metric: &str,
    target: f64,
    direction: Direction,
) -> Result<Option<f64>> {
    let reached = |v: f64| match direction {
        Direction::Decreasing => v <= target,
        Direction::Increasing => v >= target,
    };
    let curve: Vec<(f64, f64)> = result
        .mean_curve(rule, metric)?
        .into_iter()
        .filter_map(|(b, m)| m.map(|m| (b, m)))
        .collect();
    for (j, &(b, m)) in curve.iter().enumerate() {
        if !reached(m) {
            continue;
        }
        if j == 0 || m == target {
            return Ok(Some(b));
        }
        let (b0, m0) = curve[j - 1];
        return Ok(Some(b0 + (target - m0) * (b - b0) / (m - m0)));
    }
    Ok(None)
}

/// The swept value of `metric` at `fraction`, or a missing-cell error.
fn anchor(result: &SweepResult, rule: ScoringRule, metric: &str, fraction: f64) -> Result<f64> {
    result
        .mean_curve(rule, metric)?
        .into_iter()
        .find(|(b, _)| *b == fraction)
        .and_then(|(_, m)| m)
        .ok_or(Error::MissingCell(fraction))
}

/// Budget fraction at which `metric` reaches half its anchor value: the
/// budget-0 mean for decreasing metrics, the budget-1 mean for increasing ones.
pub fn half_target_budget(
    result: &SweepResult,
    rule: ScoringRule,
    metric: &str,
    direction: Direction,
) -> Result<Option<f64>> {
    let base = match direction {
        Direction::Decreasing => anchor(result, rule, metric, 0.0)?,
        Direction::Increasing => anchor(result, rule, metric, 1.0)?,
    };
    budget_to_reach(result, rule, metric, 0.5 * base, direction)
}

/// `1 - half_target(rule) / half_target(baseline)`; `None` if either target is never reached.
pub fn saving(
    result: &SweepResult,
    baseline: ScoringRule,
    rule: ScoringRule,
    metric: &str,
    direction: Direction,
) -> Result<Option<f64>> {
    let b = half_target_budget(result, baseline, metric, direction)?;
    let r = half_target_budget(result, rule, metric, direction)?;
    match (b, r) {
        (Some(b), _) if b == 0.0 => Err(Error::invalid(format!(
            "baseline {baseline} reaches the target at budget 0; saving is undefined"
        ))),
        (Some(b), Some(r)) => Ok(Some(1.0 - r / b)),
        _ => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::sweep::CellResult;

    /// A result with one seed per cell and the given curves for `m`.
    fn result(budgets: &[f64], curves: &[(ScoringRule, Vec<f64>)]) -> SweepResult {
        let mut cells = Vec::new();
        for (rule, vals) in curves {
            for (b, &v) in vals.iter().enumerate() {
                cells.push(CellResult {
                    rule: *rule,
                    budget_index: b,
                    budget_fraction: budgets[b],
                    f: b,
                    seed: 0,
                    outcome: Ok(vec![v]),
                });
            }
        }
        SweepResult {
            metric_names: vec!["m".into()],
            rules: curves.iter().map(|c| c.0).collect(),
            budget_fractions: budgets.to_vec(),
            cells,
            warnings: vec![],
        }
    }

    const R: ScoringRule = ScoringRule::Random;
    const S: ScoringRule = ScoringRule::LrCos;

    #[test]
    fn examples() {
        let b = [0.0, 0.25, 0.5, 0.75, 1.0];
        let flat = result(&b, &[(R, vec![1.0; 5])]);
        assert_eq!(half_target_budget(&flat, R, "m", Direction::Decreasing).unwrap(), None);

        let exact = result(&b, &[(R, vec![1.0, 0.8, 0.5, 0.2, 0.0])]);
        assert_eq!(half_target_budget(&exact, R, "m", Direction::Decreasing).unwrap(), Some(0.5));

        let interp = result(&b, &[(R, vec![1.0, 0.9, 0.7, 0.3, 0.0])]);
        let got = half_target_budget(&interp, R, "m", Direction::Decreasing).unwrap().unwrap();
        assert!((got - 0.625).abs() < 1e-15);

        let up = result(&b, &[(R, vec![0.1, 0.2, 0.3, 0.4, 0.5])]);
        assert_eq!(half_target_budget(&up, R, "m", Direction::Increasing).unwrap(), Some(0.375));

        let same = result(&b, &[(R, vec![1.0, 0.8, 0.5, 0.2, 0.0]), (S, vec![1.0, 0.8, 0.5, 0.2, 0.0])]);
        assert_eq!(saving(&same, R, S, "m", Direction::Decreasing).unwrap(), Some(0.0));

        let no_zero = result(&[0.5, 1.0], &[(R, vec![1.0, 0.0])]);
        assert!(matches!(
            half_target_budget(&no_zero, R, "m", Direction::Decreasing),
            Err(Error::MissingCell(_))
        ));
        assert!(half_target_budget(&exact, R, "nope", Direction::Decreasing).is_err());
    }

    #[test]
    fn table_saving_arithmetic() {
        let b: Vec<f64> = (0..=20).map(|i| i as f64 * 0.05).collect();
        // Linear curves crossing one half at 0.65 and 0.18.
        let lin = |x0: f64| b.iter().map(|&x| (1.0 - 0.5 * x / x0).max(0.0)).collect::<Vec<_>>();
        let r = result(&b, &[(R, lin(0.65)), (S, lin(0.18))]);
        let s = saving(&r, R, S, "m", Direction::Decreasing).unwrap().unwrap();
        assert!((s - (1.0 - 0.18 / 0.65)).abs() < 1e-12);
        assert!((s - 0.723).abs() < 1e-3);
    }

    #[test]
    fn failed_cells_are_skipped() {
        let b = [0.0, 0.5, 1.0];
        let mut r = result(&b, &[(R, vec![1.0, 0.8, 0.0])]);
        r.cells[1].outcome = Err("single class".into());
        assert_eq!(half_target_budget(&r, R, "m", Direction::Decreasing).unwrap(), Some(0.5));
    }

    /// Refining the grid never moves the crossing later by more than one
    /// coarse grid step.
    #[test]
    fn refinement_is_monotone_consistent() {
        let f = |x: f64| (1.0 - x * x).max(0.0) + 0.05 * (9.0 * x).sin();
        let coarse: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let fine: Vec<f64> = (0..=40).map(|i| i as f64 / 40.0).collect();
        let at = |g: &[f64]| {
            let r = result(g, &[(R, g.iter().map(|&x| f(x)).collect())]);
            half_target_budget(&r, R, "m", Direction::Decreasing).unwrap().unwrap()
        };
        assert!(at(&fine) <= at(&coarse) + 0.1);
    }
}
