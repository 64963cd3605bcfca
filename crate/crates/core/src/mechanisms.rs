//! Deletion mechanisms and the scoring rules that rank forget samples.
//!
//! Every rule maps a p1 row to a score where larger means "delete earlier".
//! A budget of `f` deletes the top `f` rows after a stable sort by
//! (score descending, index ascending), so plans for growing budgets are
//! nested.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Group, LabeledDataset};
use crate::error::{Error, Result};
use crate::matrix::{FeatureMatrix, Row};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoringRule {
    Random,
    SelectiveGaussian,
    CosMu2,
    LrCos,
    KnnRatio,
    #[serde(alias = "norm")]
    TfidfNorm,
    MahaMu2,
    LrMaha,
}

impl ScoringRule {
    pub const ALL: [ScoringRule; 8] = [
        ScoringRule::Random,
        ScoringRule::SelectiveGaussian,
        ScoringRule::CosMu2,
        ScoringRule::LrCos,
        ScoringRule::KnnRatio,
        ScoringRule::TfidfNorm,
        ScoringRule::MahaMu2,
        ScoringRule::LrMaha,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ScoringRule::Random => "random",
            ScoringRule::SelectiveGaussian => "selective-gaussian",
            ScoringRule::CosMu2 => "cos-mu2",
            ScoringRule::LrCos => "lr-cos",
            ScoringRule::KnnRatio => "knn-ratio",
            ScoringRule::TfidfNorm => "tfidf-norm",
            ScoringRule::MahaMu2 => "maha-mu2",
            ScoringRule::LrMaha => "lr-maha",
        }
    }
}

impl fmt::Display for ScoringRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScoringRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "norm" {
            return Ok(ScoringRule::TfidfNorm);
        }
        ScoringRule::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::UnknownRule(s.to_string()))
    }
}

/// Which p1 rows to delete, in deletion order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RemovalPlan {
    pub rule: ScoringRule,
    pub budget_f: usize,
    /// Positions within the p1 partition.
    pub removed_indices: Vec<usize>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScoredSample {
    pub index: usize,
    pub score: f64,
}

/// Scores plus non-fatal conditions met while computing them.
#[derive(Debug, Clone, PartialEq)]
pub struct Scores {
    pub rule: ScoringRule,
    pub samples: Vec<ScoredSample>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoringParams {
    /// Neighbor rank for `knn-ratio`.
    pub k: usize,
    /// Kernel bandwidth for `knn-ratio`; median pairwise distance when `None`.
    pub sigma: Option<f64>,
    /// At most this many evenly spaced pooled rows enter the median.
    pub sigma_sample_cap: usize,
    /// Diagonal ridge for Mahalanobis rules, relative to `trace / d`.
    pub ridge: f64,
    /// Dense covariance is refused above this dimension.
    pub max_maha_dim: usize,
    /// Seed for the `random` rule.
    pub seed: u64,
}

impl Default for ScoringParams {
    fn default() -> Self {
        Self {
            k: 10,
            sigma: None,
            sigma_sample_cap: 1000,
            ridge: 1e-6,
            max_maha_dim: 4096,
            seed: 0,
        }
    }
}

/// Uniform sample of `f` positions out of `n1`, without replacement. The
/// positions are the first `f` of a seeded shuffle, so growing `f` under
/// one seed only appends.
pub fn random_removal(n1: usize, f: usize, seed: u64) -> Result<RemovalPlan> {
    if f > n1 {
        return Err(Error::BudgetTooLarge { f, n1 });
    }
    let mut order: Vec<usize> = (0..n1).collect();
    order.shuffle(&mut rng_from_seed(seed));
    order.truncate(f);
    Ok(RemovalPlan {
        rule: ScoringRule::Random,
        budget_f: f,
        removed_indices: order,
        seed,
    })
}

/// Deletes the `f` samples farthest from the p2 sample mean, lower index first on ties.
pub fn selective_removal_gaussian(samples_p1: &[f64], samples_p2: &[f64], f: usize) -> Result<RemovalPlan> {
    if samples_p2.is_empty() {
        return Err(Error::EmptySample);
    }
    let mu2 = samples_p2.iter().sum::<f64>() / samples_p2.len() as f64;
    let scores: Vec<ScoredSample> = samples_p1
        .iter()
        .enumerate()
        .map(|(index, x)| ScoredSample {
            index,
            score: (x - mu2).abs(),
        })
        .collect();
    plan_from_scores(&scores, f, ScoringRule::SelectiveGaussian, 0)
}

/// Positions sorted by deletion priority.
pub fn deletion_order(scores: &[ScoredSample]) -> Vec<usize> {
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.index.cmp(&b.index)));
    sorted.into_iter().map(|s| s.index).collect()
}

pub fn plan_from_scores(scores: &[ScoredSample], f: usize, rule: ScoringRule, seed: u64) -> Result<RemovalPlan> {
    if f > scores.len() {
        return Err(Error::BudgetTooLarge { f, n1: scores.len() });
    }
    let mut order = deletion_order(scores);
    order.truncate(f);
    Ok(RemovalPlan {
        rule,
        budget_f: f,
        removed_indices: order,
        seed,
    })
}

/// Drops the planned p1 rows; everything else keeps its relative order.
pub fn apply_plan(dataset: &LabeledDataset, plan: &RemovalPlan) -> Result<LabeledDataset> {
    let p1 = dataset.rows_in(Group::P1);
    let mut drop = vec![false; dataset.len()];
    for &pos in &plan.removed_indices {
        let row = *p1.get(pos).ok_or(Error::IndexOutOfRange {
            index: pos,
            len: p1.len(),
        })?;
        drop[row] = true;
    }
    let keep: Vec<usize> = (0..dataset.len()).filter(|&i| !drop[i]).collect();
    dataset.subset(&keep)
}

fn sq_dist(a: &Row<'_>, b: &Row<'_>, na: f64, nb: f64) -> f64 {
    match (a, b) {
        (Row::Dense(x), Row::Dense(y)) => x.iter().zip(*y).map(|(p, q)| (p - q) * (p - q)).sum(),
        _ => (na + nb - 2.0 * a.dot_row(b)).max(0.0),
    }
}

fn cosine_distance(row: &Row<'_>, row_norm: f64, center: &[f64], center_norm: f64) -> Option<f64> {
    if row_norm == 0.0 || center_norm == 0.0 {
        return None;
    }
    Some(1.0 - row.dot(center) / (row_norm * center_norm))
}

fn dense_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn mean_rows(m: &FeatureMatrix) -> Vec<f64> {
    let rows: Vec<usize> = (0..m.rows()).collect();
    m.mean_of(&rows)
}

/// Median Euclidean distance over all pairs of an evenly spaced subsample of
/// the pooled rows.
pub fn median_pairwise_distance(p1: &FeatureMatrix, p2: &FeatureMatrix, cap: usize) -> f64 {
    let total = p1.rows() + p2.rows();
    let m = total.min(cap.max(2));
    let pick = |i: usize| -> Row<'_> {
        let j = i * total / m;
        if j < p1.rows() {
            p1.row(j)
        } else {
            p2.row(j - p1.rows())
        }
    };
    let rows: Vec<Row<'_>> = (0..m).map(pick).collect();
    let norms: Vec<f64> = rows.iter().map(|r| r.sq_norm()).collect();
    let mut d: Vec<f64> = (0..m)
        .into_par_iter()
        .flat_map_iter(|i| {
            let rows = &rows;
            let norms = &norms;
            (i + 1..m).map(move |j| sq_dist(&rows[i], &rows[j], norms[i], norms[j]).sqrt())
        })
        .collect();
    if d.is_empty() {
        return 0.0;
    }
    let mid = d.len() / 2;
    let (_, hi, _) = d.select_nth_unstable_by(mid, f64::total_cmp);
    let hi = *hi;
    if d.len() % 2 == 1 {
        hi
    } else {
        let lo = d[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lo + hi)
    }
}

fn kth_smallest(mut v: Vec<f64>, k: usize) -> f64 {
    let (_, x, _) = v.select_nth_unstable_by(k - 1, f64::total_cmp);
    *x
}

/// Empirical covariance (divisor `n - 1`) plus `ridge * trace / d` on the diagonal.
fn ridge_covariance(p2: &FeatureMatrix, mu2: &[f64], ridge: f64) -> Result<DMatrix<f64>> {
    let (n, d) = (p2.rows(), p2.cols());
    if n < 2 {
        return Err(Error::SingularCovariance(format!("need at least 2 p2 rows, got {n}")));
    }
    let mut centered = DMatrix::<f64>::zeros(n, d);
    for i in 0..n {
        let row = p2.row(i).to_dense(d);
        for j in 0..d {
            centered[(i, j)] = row[j] - mu2[j];
        }
    }
    let mut cov = centered.transpose() * &centered / (n as f64 - 1.0);
    let trace = cov.trace();
    if !(trace > 0.0) {
        return Err(Error::SingularCovariance("p2 covariance has zero trace".into()));
    }
    let shift = ridge * trace / d as f64;
    for j in 0..d {
        cov[(j, j)] += shift;
    }
    Ok(cov)
}

/// Scores every p1 row under `rule`.
pub fn score_features(
    p1: &FeatureMatrix,
    p2: &FeatureMatrix,
    rule: ScoringRule,
    params: &ScoringParams,
) -> Result<Scores> {
    let n1 = p1.rows();
    if n1 == 0 {
        return Err(Error::EmptySample);
    }
    if p1.cols() != p2.cols() {
        return Err(Error::DimensionMismatch {
            expected: p1.cols(),
            found: p2.cols(),
        });
    }
    let needs_p2 = !matches!(rule, ScoringRule::Random | ScoringRule::TfidfNorm);
    if needs_p2 && p2.rows() == 0 {
        return Err(Error::EmptySample);
    }
    let mut warnings = Vec::new();
    let values: Vec<f64> = match rule {
        ScoringRule::Random => {
            let mut rng = rng_from_seed(params.seed);
            (0..n1).map(|_| rng.random::<f64>()).collect()
        }
        ScoringRule::TfidfNorm => p1.iter_rows().map(|r| r.norm()).collect(),
        ScoringRule::SelectiveGaussian => {
            let mu2 = mean_rows(p2);
            p1.iter_rows().map(|r| r.sq_dist_dense(&mu2).sqrt()).collect()
        }
        ScoringRule::CosMu2 | ScoringRule::LrCos => {
            let mu2 = mean_rows(p2);
            let mu1 = mean_rows(p1);
            let (n_mu2, n_mu1) = (dense_norm(&mu2), dense_norm(&mu1));
            if n_mu2 == 0.0 {
                warnings.push("p2 mean is the zero vector; cosine distances set to 0".into());
            }
            if rule == ScoringRule::LrCos && n_mu1 == 0.0 {
                warnings.push("p1 mean is the zero vector; cosine distances set to 0".into());
            }
            let mut zero_rows = Vec::new();
            let scores = p1
                .iter_rows()
                .enumerate()
                .map(|(i, r)| {
                    let norm = r.norm();
                    if norm == 0.0 {
                        zero_rows.push(i);
                    }
                    let d2 = cosine_distance(&r, norm, &mu2, n_mu2).unwrap_or(0.0);
                    if rule == ScoringRule::CosMu2 {
                        d2
                    } else {
                        d2 - cosine_distance(&r, norm, &mu1, n_mu1).unwrap_or(0.0)
                    }
                })
                .collect();
            if !zero_rows.is_empty() {
                warnings.push(format!(
                    "{} zero-norm p1 row(s) scored 0 (first: {})",
                    zero_rows.len(),
                    zero_rows[0]
                ));
            }
            scores
        }
        ScoringRule::KnnRatio => knn_ratio(p1, p2, params, &mut warnings)?,
        ScoringRule::MahaMu2 | ScoringRule::LrMaha => {
            let d = p1.cols();
            if d > params.max_maha_dim {
                return Err(Error::SingularCovariance(format!(
                    "dimension {d} exceeds the dense covariance limit {}",
                    params.max_maha_dim
                )));
            }
            let mu2 = mean_rows(p2);
            let cov = ridge_covariance(p2, &mu2, params.ridge)?;
            let chol = cov
                .cholesky()
                .ok_or_else(|| Error::SingularCovariance("covariance not positive definite after ridge".into()))?;
            let mu1 = mean_rows(p1);
            let dist = |x: &[f64], mu: &[f64]| -> f64 {
                let diff = DVector::from_iterator(d, x.iter().zip(mu).map(|(a, b)| a - b));
                let z = chol.l().solve_lower_triangular(&diff).expect("cholesky factor is invertible");
                z.norm()
            };
            (0..n1)
                .into_par_iter()
                .map(|i| {
                    let x = p1.row(i).to_dense(d);
                    let m2 = dist(&x, &mu2);
                    if rule == ScoringRule::MahaMu2 {
                        m2
                    } else {
                        m2 - dist(&x, &mu1)
                    }
                })
                .collect()
        }
    };
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("non-finite {rule} score for p1 row {i}")));
    }
    Ok(Scores {
        rule,
        samples: values
            .into_iter()
            .enumerate()
            .map(|(index, score)| ScoredSample { index, score })
            .collect(),
        warnings,
    })
}

/// `p1_hat(x) / p2_hat(x)` with `p_hat_i(x) = exp(-|x - NN_k^i(x)|^2 / sigma^2)`.
/// The query row itself is excluded from its own p1 neighbors.
fn knn_ratio(p1: &FeatureMatrix, p2: &FeatureMatrix, params: &ScoringParams, warnings: &mut Vec<String>) -> Result<Vec<f64>> {
    let k = params.k;
    let max = (p1.rows() - 1).min(p2.rows());
    if k == 0 || k > max {
        return Err(Error::NeighborCountOutOfRange { k, max });
    }
    let sigma = match params.sigma {
        Some(s) => s,
        None => median_pairwise_distance(p1, p2, params.sigma_sample_cap),
    };
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::invalid(format!("knn-ratio bandwidth must be positive, got {sigma}")));
    }
    let s2 = sigma * sigma;
    let n1_norms: Vec<f64> = p1.iter_rows().map(|r| r.sq_norm()).collect();
    let n2_norms: Vec<f64> = p2.iter_rows().map(|r| r.sq_norm()).collect();
    let log_ratio: Vec<f64> = (0..p1.rows())
        .into_par_iter()
        .map(|i| {
            let x = p1.row(i);
            let d1: Vec<f64> = (0..p1.rows())
                .filter(|&j| j != i)
                .map(|j| sq_dist(&x, &p1.row(j), n1_norms[i], n1_norms[j]))
                .collect();
            let d2: Vec<f64> = (0..p2.rows())
                .map(|j| sq_dist(&x, &p2.row(j), n1_norms[i], n2_norms[j]))
                .collect();
            (kth_smallest(d2, k) - kth_smallest(d1, k)) / s2
        })
        .collect();
    if log_ratio.iter().any(|&z| z > f64::MAX.ln()) {
        warnings.push("knn-ratio overflows; scores are log density ratios".into());
        Ok(log_ratio)
    } else {
        Ok(log_ratio.into_iter().map(f64::exp).collect())
    }
}
