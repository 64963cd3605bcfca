//! Predictive consequences of unlearning: the log-loss decomposition on
//! finite joints, an l2-regularized logistic classifier and the evaluation
//! metrics used by the dataset sweeps.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::data::{Group, LabeledDataset};
use crate::error::{Error, Result};
use crate::matrix::{FeatureMatrix, Row};

/// A joint distribution on a finite `X × Y` grid, stored row-major by `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteJoint {
    nx: usize,
    ny: usize,
    probs: Vec<f64>,
}

impl FiniteJoint {
    pub fn new(nx: usize, ny: usize, probs: Vec<f64>) -> Result<Self> {
        if nx < 1 || ny < 2 {
            return Err(Error::invalid(format!("need |X| >= 1 and |Y| >= 2, got {nx} x {ny}")));
        }
        if probs.len() != nx * ny {
            return Err(Error::DimensionMismatch {
                expected: nx * ny,
                found: probs.len(),
            });
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::invalid(format!("probability entry {p} is not a non-negative real")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("joint mass is {total}, not 1")));
        }
        Ok(Self { nx, ny, probs })
    }

    /// Normalizes non-negative weights into a joint.
    pub fn from_weights(nx: usize, ny: usize, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::invalid("weights must have positive finite mass"));
        }
        Self::new(nx, ny, weights.into_iter().map(|w| w / total).collect())
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.probs[x * self.ny + y]
    }

    pub fn marginal_x(&self) -> Vec<f64> {
        self.probs.chunks(self.ny).map(|r| r.iter().sum()).collect()
    }

    /// `p(y | x)`, or `None` when `x` has zero mass.
    pub fn conditional(&self, x: usize) -> Option<Vec<f64>> {
        let row = &self.probs[x * self.ny..(x + 1) * self.ny];
        let m: f64 = row.iter().sum();
        (m > 0.0).then(|| row.iter().map(|p| p / m).collect())
    }

    fn check_shape(&self, other: &Self) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch {
                expected: self.nx * self.ny,
                found: other.nx * other.ny,
            });
        }
        Ok(())
    }
}

fn kl_discrete(q: &[f64], p: &[f64], what: &str) -> Result<f64> {
    let mut kl = 0.0;
    for (i, (&a, &b)) in q.iter().zip(p).enumerate() {
        if a > 0.0 {
            if b <= 0.0 {
                return Err(Error::SupportViolation(format!("{what}: mass {a} at cell {i} where the reference has none")));
            }
            kl += a * (a / b).ln();
        }
    }
    Ok(kl)
}

/// `KL(q || p)` over the joint grid.
pub fn joint_kl(q: &FiniteJoint, p: &FiniteJoint) -> Result<f64> {
    q.check_shape(p)?;
    kl_discrete(&q.probs, &p.probs, "joint KL")
}

/// `KL(q^X || p^X)`.
pub fn marginal_kl(q: &FiniteJoint, p: &FiniteJoint) -> Result<f64> {
    q.check_shape(p)?;
    kl_discrete(&q.marginal_x(), &p.marginal_x(), "marginal KL")
}

/// Expected log-loss under `q` of the predictor `h(y | x)`.
fn expected_logloss(q: &FiniteJoint, h: impl Fn(usize) -> Option<Vec<f64>>) -> Result<f64> {
    let mut loss = 0.0;
    for x in 0..q.nx {
        let row = &q.probs[x * q.ny..(x + 1) * q.ny];
        if row.iter().all(|&m| m == 0.0) {
            continue;
        }
        let hx = h(x).ok_or_else(|| Error::SupportViolation(format!("predictor undefined at x = {x}")))?;
        for (y, &m) in row.iter().enumerate() {
            if m > 0.0 {
                if hx[y] <= 0.0 {
                    return Err(Error::SupportViolation(format!("predictor gives zero mass to (x={x}, y={y})")));
                }
                loss -= m * hx[y].ln();
            }
        }
    }
    Ok(loss)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LoglossDecomposition {
    /// `L(h_p; q) - L(h_q; q)` with `h_r` the Bayes predictor `r(y | x)`.
    pub excess_loss: f64,
    pub joint_kl: f64,
    pub marginal_kl: f64,
}

impl LoglossDecomposition {
    /// `excess_loss - (joint_kl - marginal_kl)`; zero up to rounding.
    pub fn gap(&self) -> f64 {
        self.excess_loss - (self.joint_kl - self.marginal_kl)
    }
}

/// Excess log-loss of `p`'s Bayes predictor on `q`, computed from the two
/// expected losses, alongside the two divergences it should equal the
/// difference of.
pub fn logloss_decomposition(q: &FiniteJoint, p: &FiniteJoint) -> Result<LoglossDecomposition> {
    q.check_shape(p)?;
    let joint = joint_kl(q, p)?;
    let marginal = marginal_kl(q, p)?;
    let l_p = expected_logloss(q, |x| p.conditional(x))?;
    let l_q = expected_logloss(q, |x| q.conditional(x))?;
    Ok(LoglossDecomposition {
        excess_loss: l_p - l_q,
        joint_kl: joint,
        marginal_kl: marginal,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExcessLossReport {
    pub alpha: f64,
    pub epsilon: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub removal_excess: f64,
    pub preservation_excess: f64,
}

impl ExcessLossReport {
    /// Largest deviation of either excess loss from its divergence expression.
    pub fn max_gap(&self) -> f64 {
        (self.removal_excess - (self.alpha - self.delta1))
            .abs()
            .max((self.preservation_excess - (self.epsilon - self.delta2)).abs())
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.max_gap() <= tol
    }
}

/// Excess losses of the Bayes predictor of `p` on `p1` and `p2`, and the
/// divergence quantities that bound them.
pub fn check_prop2(p1: &FiniteJoint, p2: &FiniteJoint, p: &FiniteJoint) -> Result<ExcessLossReport> {
    let d1 = logloss_decomposition(p1, p)?;
    let d2 = logloss_decomposition(p2, p)?;
    Ok(ExcessLossReport {
        alpha: d1.joint_kl,
        epsilon: d2.joint_kl,
        delta1: d1.marginal_kl,
        delta2: d2.marginal_kl,
        removal_excess: d1.excess_loss,
        preservation_excess: d2.excess_loss,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainingMeta {
    pub seed: u64,
    pub iterations: usize,
    pub final_objective: f64,
    pub gradient_norm: f64,
    pub converged: bool,
    /// Objective after every accepted iterate, starting at the zero model.
    pub objective_history: Vec<f64>,
}

/// Linear classifier. Two classes use one sigmoid row scoring class 1;
/// more classes use one softmax row per class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifierModel {
    pub n_classes: usize,
    pub n_features: usize,
    /// Row-major, `rows() x n_features`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub l2_strength: f64,
    pub meta: TrainingMeta,
}

impl ClassifierModel {
    pub fn rows(&self) -> usize {
        self.bias.len()
    }

    pub fn weight_row(&self, k: usize) -> &[f64] {
        &self.weights[k * self.n_features..(k + 1) * self.n_features]
    }

    /// Class probabilities for one feature row.
    pub fn predict_proba(&self, row: &Row<'_>) -> Vec<f64> {
        let logits: Vec<f64> = (0..self.rows()).map(|k| row.dot(self.weight_row(k)) + self.bias[k]).collect();
        if self.n_classes == 2 {
            let p1 = sigmoid(logits[0]);
            vec![1.0 - p1, p1]
        } else {
            softmax(&logits)
        }
    }

    /// Arg-max class; lowest index wins ties.
    pub fn predict(&self, row: &Row<'_>) -> usize {
        argmax(&self.predict_proba(row))
    }

    /// Flattened `[weights, bias]`, the layout of [`LogisticObjective`].
    pub fn params(&self) -> Vec<f64> {
        [self.weights.as_slice(), self.bias.as_slice()].concat()
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn softmax(v: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(v);
    v.iter().map(|x| (x - lse).exp()).collect()
}

/// Average log-loss plus `(l2 / 2) * |W|^2`; the bias is not penalized.
pub struct LogisticObjective<'a> {
    features: &'a FeatureMatrix,
    labels: &'a [usize],
    n_classes: usize,
    l2: f64,
}

impl<'a> LogisticObjective<'a> {
    pub fn new(train: &'a LabeledDataset, l2_strength: f64) -> Self {
        Self {
            features: train.features(),
            labels: train.labels(),
            n_classes: train.n_classes().max(2),
            l2: l2_strength,
        }
    }

    pub fn rows(&self) -> usize {
        if self.n_classes == 2 {
            1
        } else {
            self.n_classes
        }
    }

    pub fn dim(&self) -> usize {
        self.rows() * (self.features.cols() + 1)
    }

    /// Objective value and gradient at `params`.
    pub fn value_grad(&self, params: &[f64]) -> (f64, Vec<f64>) {
        let d = self.features.cols();
        let rows = self.rows();
        let (w, b) = params.split_at(rows * d);
        let mut grad = vec![0.0; params.len()];
        let n = self.labels.len() as f64;
        let mut loss = 0.0;
        let mut logits = vec![0.0; rows];
        for (i, row) in self.features.iter_rows().enumerate() {
            let y = self.labels[i];
            for k in 0..rows {
                logits[k] = row.dot(&w[k * d..(k + 1) * d]) + b[k];
            }
            if rows == 1 {
                let z = logits[0];
                let t = if y == 1 { 1.0 } else { 0.0 };
                loss += softplus(z) - t * z;
                let r = (sigmoid(z) - t) / n;
                row.add_scaled_to(r, &mut grad[..d]);
                grad[d] += r;
            } else {
                let lse = log_sum_exp(&logits);
                loss += lse - logits[y];
                for k in 0..rows {
                    let r = ((logits[k] - lse).exp() - if k == y { 1.0 } else { 0.0 }) / n;
                    row.add_scaled_to(r, &mut grad[k * d..(k + 1) * d]);
                    grad[rows * d + k] += r;
                }
            }
        }
        let mut penalty = 0.0;
        for (g, &wi) in grad.iter_mut().zip(w) {
            penalty += wi * wi;
            *g += self.l2 * wi;
        }
        (loss / n + 0.5 * self.l2 * penalty, grad)
    }

    /// Upper bound on the gradient's Lipschitz constant.
    fn lipschitz(&self) -> f64 {
        let n = self.labels.len() as f64;
        let mean_sq = self.features.iter_rows().map(|r| r.sq_norm() + 1.0).sum::<f64>() / n;
        let curvature = if self.rows() == 1 { 0.25 } else { 0.5 };
        curvature * mean_sq + self.l2
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Fits the classifier by full-batch accelerated gradient descent with step
/// `1 / L` from the zero model. A momentum step that raises the objective is
/// replaced by a plain gradient step and the momentum is reset, so recorded
/// objectives never increase.
pub fn train_logistic(
    train: &LabeledDataset,
    l2_strength: f64,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> Result<ClassifierModel> {
    if !(l2_strength > 0.0) || !l2_strength.is_finite() {
        return Err(Error::invalid(format!("l2_strength must be positive, got {l2_strength}")));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("tol must be positive, got {tol}")));
    }
    if train.is_empty() {
        return Err(Error::EmptySample);
    }
    let present: BTreeSet<usize> = train.labels().iter().copied().collect();
    if present.len() < 2 {
        return Err(Error::SingleClass(*present.first().expect("non-empty")));
    }
    for (i, row) in train.features().iter_rows().enumerate() {
        if !row.is_finite() {
            return Err(Error::NonFiniteFeature { row: i, col: 0 });
        }
    }

    let obj = LogisticObjective::new(train, l2_strength);
    let step = 1.0 / obj.lipschitz();
    let mut x = vec![0.0; obj.dim()];
    let (mut fx, mut gx) = obj.value_grad(&x);
    let mut x_prev = x.clone();
    let mut t = 1.0_f64;
    let mut history = vec![fx];
    let mut iterations = 0;
    let mut gnorm = norm(&gx);
    while gnorm > tol && iterations < max_iter {
        iterations += 1;
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        let y: Vec<f64> = x.iter().zip(&x_prev).map(|(a, b)| a + beta * (a - b)).collect();
        let (_, gy) = obj.value_grad(&y);
        let cand: Vec<f64> = y.iter().zip(&gy).map(|(a, g)| a - step * g).collect();
        let (fc, gc) = obj.value_grad(&cand);
        let (next, f_next, g_next) = if fc <= fx {
            t = t_next;
            (cand, fc, gc)
        } else {
            t = 1.0;
            let plain: Vec<f64> = x.iter().zip(&gx).map(|(a, g)| a - step * g).collect();
            let (fp, gp) = obj.value_grad(&plain);
            if fp > fx {
                // No descent left at working precision.
                break;
            }
            (plain, fp, gp)
        };
        x_prev = std::mem::replace(&mut x, next);
        fx = f_next;
        gx = g_next;
        gnorm = norm(&gx);
        history.push(fx);
    }
    let rows = obj.rows();
    let d = train.features().cols();
    let bias = x.split_off(rows * d);
    if x.iter().chain(&bias).any(|v| !v.is_finite()) {
        return Err(Error::invalid("training diverged to non-finite weights"));
    }
    Ok(ClassifierModel {
        n_classes: obj.n_classes,
        n_features: d,
        weights: x,
        bias,
        l2_strength,
        meta: TrainingMeta {
            seed,
            iterations,
            final_objective: fx,
            gradient_norm: gnorm,
            converged: gnorm <= tol,
            objective_history: history,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    /// Share of positive-class p1 rows predicted positive; `None` if there are none.
    pub recall_p1: Option<f64>,
    /// Share of all p1 rows predicted positive, treating the group tag as the truth.
    pub recall_p1_group: Option<f64>,
    /// Unweighted mean F1 over the classes present in the p2 slice.
    pub macro_f1_p2: Option<f64>,
    pub accuracy_per_class: BTreeMap<usize, f64>,
    pub accuracy: f64,
    pub logloss: f64,
    pub n_p1: usize,
    pub n_p2: usize,
}

/// Per-class F1 averaged over the classes present in `truth`. Predictions of
/// other classes still count against recall.
pub fn macro_f1(truth: &[usize], pred: &[usize]) -> Option<f64> {
    if truth.is_empty() {
        return None;
    }
    let classes: BTreeSet<usize> = truth.iter().copied().collect();
    let total: f64 = classes
        .iter()
        .map(|&c| {
            let tp = truth.iter().zip(pred).filter(|(t, p)| **t == c && **p == c).count() as f64;
            let fp = truth.iter().zip(pred).filter(|(t, p)| **t != c && **p == c).count() as f64;
            let fn_ = truth.iter().zip(pred).filter(|(t, p)| **t == c && **p != c).count() as f64;
            2.0 * tp / (2.0 * tp + fp + fn_)
        })
        .sum();
    Some(total / classes.len() as f64)
}

/// Scores `model` on `test`. `positive_class` is the label counted by the p1 recalls.
pub fn evaluate(model: &ClassifierModel, test: &LabeledDataset, positive_class: usize) -> Result<Metrics> {
    if test.features().cols() != model.n_features {
        return Err(Error::DimensionMismatch {
            expected: model.n_features,
            found: test.features().cols(),
        });
    }
    let mut pred = Vec::with_capacity(test.len());
    let mut logloss = 0.0;
    for (i, row) in test.features().iter_rows().enumerate() {
        let probs = model.predict_proba(&row);
        let y = test.labels()[i];
        let p = probs.get(y).copied().unwrap_or(0.0);
        logloss -= p.ln();
        pred.push(argmax(&probs));
    }
    let labels = test.labels();
    let p1 = test.rows_in(Group::P1);
    let p2 = test.rows_in(Group::P2);

    let p1_pos: Vec<usize> = p1.iter().copied().filter(|&i| labels[i] == positive_class).collect();
    let share = |rows: &[usize]| {
        (!rows.is_empty())
            .then(|| rows.iter().filter(|&&i| pred[i] == positive_class).count() as f64 / rows.len() as f64)
    };
    let p2_truth: Vec<usize> = p2.iter().map(|&i| labels[i]).collect();
    let p2_pred: Vec<usize> = p2.iter().map(|&i| pred[i]).collect();

    let mut per_class: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for (&y, &yh) in labels.iter().zip(&pred) {
        let e = per_class.entry(y).or_default();
        e.0 += 1;
        e.1 += usize::from(y == yh);
    }
    let correct: usize = per_class.values().map(|e| e.1).sum();
    Ok(Metrics {
        recall_p1: share(&p1_pos),
        recall_p1_group: share(&p1),
        macro_f1_p2: macro_f1(&p2_truth, &p2_pred),
        accuracy_per_class: per_class.into_iter().map(|(c, (n, k))| (c, k as f64 / n as f64)).collect(),
        accuracy: correct as f64 / test.len() as f64,
        logloss: logloss / test.len() as f64,
        n_p1: p1.len(),
        n_p2: p2.len(),
    })
}
