//! Finite-sample guarantees for random and selective removal followed by a
//! pooled Gaussian MLE, and the deletion budgets they imply.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::{g_inverse, normal_cdf};

/// Deletion mechanism a guarantee refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mechanism {
    Random,
    Selective,
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mechanism::Random => "random",
            Mechanism::Selective => "selective",
        })
    }
}

impl std::str::FromStr for Mechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Mechanism::Random),
            "selective" => Ok(Mechanism::Selective),
            other => Err(Error::invalid(format!("unknown mechanism `{other}`"))),
        }
    }
}

/// High-probability `(alpha_lower, epsilon_upper)` after deleting `f` of `n1`
/// forget samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GuaranteeBound {
    pub mechanism: Mechanism,
    pub alpha_lower: f64,
    pub epsilon_upper: f64,
    pub delta: f64,
    pub f: usize,
    pub n1: usize,
    pub n2: usize,
    pub divergence: f64,
}

impl GuaranteeBound {
    /// The removal side certifies nothing.
    pub fn vacuous(&self) -> bool {
        self.alpha_lower <= 0.0
    }

    pub fn meets(&self, alpha: f64, epsilon: f64) -> bool {
        self.alpha_lower >= alpha && self.epsilon_upper <= epsilon
    }
}

/// Selective guarantees need the quantile level in `(0, 1)`; small budgets
/// fall outside it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Guarantee {
    Bound(GuaranteeBound),
    Inapplicable {
        mechanism: Mechanism,
        f: usize,
        n1: usize,
        n2: usize,
        delta: f64,
        divergence: f64,
        quantile: f64,
    },
}

impl Guarantee {
    pub fn bound(&self) -> Option<&GuaranteeBound> {
        match self {
            Guarantee::Bound(b) => Some(b),
            Guarantee::Inapplicable { .. } => None,
        }
    }
}

fn check_args(n1: usize, n2: usize, f: usize, delta: f64, divergence: f64) -> Result<()> {
    if n2 == 0 {
        return Err(Error::invalid("n2 must be at least 1"));
    }
    if f > n1 {
        return Err(Error::BudgetTooLarge { f, n1 });
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::ProbabilityOutOfRange(delta));
    }
    if !(divergence >= 0.0) || !divergence.is_finite() {
        return Err(Error::invalid(format!(
            "divergence must be finite and >= 0, got {divergence}"
        )));
    }
    Ok(())
}

/// Guarantee for uniformly random deletion of `f` forget samples.
///
/// With `r = (n1 - f) / n2` and `L = ln(4 / delta)`:
/// `alpha >= (1/2 - 3 r^2) D - (3 L / 2 n2)(1 + r)` and
/// `epsilon <= 3 r^2 D + (3 L / n2)(1 + r)`.
pub fn bound_random(n1: usize, n2: usize, f: usize, delta: f64, divergence: f64) -> Result<GuaranteeBound> {
    check_args(n1, n2, f, delta, divergence)?;
    let r = (n1 - f) as f64 / n2 as f64;
    let l = (4.0 / delta).ln();
    let n2f = n2 as f64;
    Ok(GuaranteeBound {
        mechanism: Mechanism::Random,
        alpha_lower: (0.5 - 3.0 * r * r) * divergence - 3.0 * l / (2.0 * n2f) * (1.0 + r),
        epsilon_upper: 3.0 * r * r * divergence + 3.0 * l / n2f * (1.0 + r),
        delta,
        f,
        n1,
        n2,
        divergence,
    })
}

/// Quantile level `1 - f/n1 + sqrt(ln(4/delta) / 2 n1)` used by the selective bound.
pub fn selective_quantile(n1: usize, f: usize, delta: f64) -> f64 {
    let l = (4.0 / delta).ln();
    1.0 - f as f64 / n1 as f64 + (l / (2.0 * n1 as f64)).sqrt()
}

/// Guarantee for deleting the `f` forget samples farthest from the retained mean.
///
/// With `G = g^{-1}(q; D)` at the quantile level `q` above:
/// `alpha >= D/2 - r^2 G^2 / 2 - L / n2` and `epsilon <= r^2 G^2 + 2 L / n2`.
pub fn bound_selective(n1: usize, n2: usize, f: usize, delta: f64, divergence: f64) -> Result<Guarantee> {
    check_args(n1, n2, f, delta, divergence)?;
    if n1 == 0 {
        return Err(Error::invalid("n1 must be at least 1"));
    }
    let q = selective_quantile(n1, f, delta);
    if !(q > 0.0 && q < 1.0) {
        return Ok(Guarantee::Inapplicable {
            mechanism: Mechanism::Selective,
            f,
            n1,
            n2,
            delta,
            divergence,
            quantile: q,
        });
    }
    let g = g_inverse(q, divergence)?;
    let r = (n1 - f) as f64 / n2 as f64;
    let l = (4.0 / delta).ln();
    let n2f = n2 as f64;
    let spread = r * r * g * g;
    Ok(Guarantee::Bound(GuaranteeBound {
        mechanism: Mechanism::Selective,
        alpha_lower: 0.5 * divergence - 0.5 * spread - l / n2f,
        epsilon_upper: spread + 2.0 * l / n2f,
        delta,
        f,
        n1,
        n2,
        divergence,
    }))
}

/// Which requirement fixed the returned budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Binding {
    /// Nothing needed deleting.
    None,
    Removal,
    Preservation,
    /// The selective quantile level only becomes valid at this budget.
    Quantile,
    /// The target cannot be certified even at `f = n1`.
    Unreachable,
}

impl fmt::Display for Binding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Binding::None => "none",
            Binding::Removal => "removal",
            Binding::Preservation => "preservation",
            Binding::Quantile => "quantile",
            Binding::Unreachable => "unreachable",
        })
    }
}

/// Deletion budget for target `(alpha, epsilon)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Budget {
    pub mechanism: Mechanism,
    /// Smallest `f` whose guarantee meets both targets; `None` when even
    /// `f = n1` does not.
    pub f: Option<usize>,
    pub binding: Binding,
    /// Closed-form sufficient budget, ceiling of the largest term below,
    /// clamped to `[0, n1]`; `None` when a term is undefined.
    pub closed_form_f: Option<usize>,
    /// Named real-valued lower bounds on `f` from the closed form.
    pub closed_form_terms: Vec<(String, f64)>,
    /// Whether the closed form's side conditions on `n2` and `D` hold.
    pub preconditions_hold: bool,
    pub precondition_notes: Vec<String>,
}

fn check_targets(n1: usize, n2: usize, delta: f64, divergence: f64, alpha: f64, epsilon: f64) -> Result<()> {
    check_args(n1, n2, 0, delta, divergence)?;
    if n1 == 0 {
        return Err(Error::invalid("n1 must be at least 1"));
    }
    if !(divergence > 0.0) {
        return Err(Error::invalid("budgets need a positive divergence"));
    }
    if !(alpha > 0.0 && alpha.is_finite()) || !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid("targets must be positive and finite"));
    }
    Ok(())
}

/// Smallest `f` in `lo..=hi` with `ok(f)`, given that `ok` is monotone.
fn first_true(lo: usize, hi: usize, ok: impl Fn(usize) -> bool) -> Option<usize> {
    if lo > hi || !ok(hi) {
        return None;
    }
    let (mut a, mut b) = (lo, hi);
    while a < b {
        let mid = a + (b - a) / 2;
        if ok(mid) {
            b = mid;
        } else {
            a = mid + 1;
        }
    }
    Some(a)
}

fn clamp_ceil(x: f64, n1: usize) -> usize {
    x.ceil().clamp(0.0, n1 as f64) as usize
}

fn resolve(f_alpha: Option<usize>, f_eps: Option<usize>, floor: usize) -> (Option<usize>, Binding) {
    match (f_alpha, f_eps) {
        (Some(a), Some(e)) => {
            let f = a.max(e);
            let binding = if f == 0 {
                Binding::None
            } else if a >= e && a > floor {
                Binding::Removal
            } else if e > a && e > floor {
                Binding::Preservation
            } else {
                Binding::Quantile
            };
            (Some(f), binding)
        }
        _ => (None, Binding::Unreachable),
    }
}

/// Budget for random removal.
pub fn budget_random(
    n1: usize,
    n2: usize,
    delta: f64,
    divergence: f64,
    alpha: f64,
    epsilon: f64,
) -> Result<Budget> {
    check_targets(n1, n2, delta, divergence, alpha, epsilon)?;
    let bound = |f| bound_random(n1, n2, f, delta, divergence).expect("validated");
    let f_alpha = first_true(0, n1, |f| bound(f).alpha_lower >= alpha);
    let f_eps = first_true(0, n1, |f| bound(f).epsilon_upper <= epsilon);
    let (f, binding) = resolve(f_alpha, f_eps, 0);

    let (n1f, n2f, d) = (n1 as f64, n2 as f64, divergence);
    let removal = n1f - n2f * ((2.0 * d - alpha) / (12.0 * d)).sqrt();
    let preservation = n1f - n2f * (epsilon / (6.0 * d)).sqrt().min(1.0);
    let closed_form_f = (removal.is_finite() && preservation.is_finite())
        .then(|| clamp_ceil(removal.max(preservation), n1));

    let l = (4.0 / delta).ln();
    let mut notes = Vec::new();
    let need_n2 = 12.0 * l / alpha.min(epsilon);
    if n2f < need_n2 {
        notes.push(format!("n2 = {n2} below 12 ln(4/delta) / min(alpha, epsilon) = {need_n2:.3}"));
    }
    if d < 8.0 * alpha {
        notes.push(format!("D = {d} below 8 alpha = {}", 8.0 * alpha));
    }
    Ok(Budget {
        mechanism: Mechanism::Random,
        f,
        binding,
        closed_form_f,
        closed_form_terms: vec![("removal".into(), removal), ("preservation".into(), preservation)],
        preconditions_hold: notes.is_empty(),
        precondition_notes: notes,
    })
}

/// Budget for selective removal.
pub fn budget_selective(
    n1: usize,
    n2: usize,
    delta: f64,
    divergence: f64,
    alpha: f64,
    epsilon: f64,
) -> Result<Budget> {
    check_targets(n1, n2, delta, divergence, alpha, epsilon)?;
    let l = (4.0 / delta).ln();
    let (n1f, n2f, d) = (n1 as f64, n2 as f64, divergence);
    // q < 1 exactly when f exceeds n1 * sqrt(L / 2 n1).
    let f_min = (0..=n1)
        .find(|&f| selective_quantile(n1, f, delta) < 1.0)
        .unwrap_or(n1 + 1);
    let bound = |f| match bound_selective(n1, n2, f, delta, divergence).expect("validated") {
        Guarantee::Bound(b) => Some(b),
        Guarantee::Inapplicable { .. } => None,
    };
    let f_alpha = first_true(f_min, n1, |f| bound(f).is_some_and(|b| b.alpha_lower >= alpha));
    let f_eps = first_true(f_min, n1, |f| bound(f).is_some_and(|b| b.epsilon_upper <= epsilon));
    let (f, binding) = resolve(f_alpha, f_eps, f_min);

    let scale = (n1f * n2f).sqrt() * (-d).exp();
    let floor = n1f * (1.5 + (l / (2.0 * n1f)).sqrt() - normal_cdf(2.0 * (2.0 * d).sqrt()));
    let eps_term = n1f - scale * (epsilon / (16.0 * std::f64::consts::PI)).powf(0.25);
    let alpha_term = n1f - scale * ((d - 4.0 * alpha) / (8.0 * std::f64::consts::PI)).powf(0.25);
    let terms = [floor, eps_term, alpha_term];
    let closed_form_f = terms
        .iter()
        .all(|t| t.is_finite())
        .then(|| clamp_ceil(terms.iter().copied().fold(f64::NEG_INFINITY, f64::max), n1));

    let mut notes = Vec::new();
    let need_n2 = 2.0
        * l
        * [1.0 / epsilon, 1.0 / epsilon.sqrt(), 1.0 / alpha, (d - 4.0 * alpha).max(0.0).sqrt()]
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
    if n2f < need_n2 {
        notes.push(format!("n2 = {n2} below the required {need_n2:.3}"));
    }
    if d < 4.0 * alpha {
        notes.push(format!("D = {d} below 4 alpha = {}", 4.0 * alpha));
    }
    Ok(Budget {
        mechanism: Mechanism::Selective,
        f,
        binding,
        closed_form_f,
        closed_form_terms: vec![
            ("floor".into(), floor),
            ("epsilon".into(), eps_term),
            ("alpha".into(), alpha_term),
        ],
        preconditions_hold: notes.is_empty(),
        precondition_notes: notes,
    })
}

/// Hoeffding radius `sigma sqrt(2 ln(2/delta) / n)` for a Gaussian mean and
/// DKW radius `sqrt(ln(2/delta) / 2n)` for an empirical CDF.
pub fn deviation_terms(n: usize, delta: f64, sigma: f64) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::ProbabilityOutOfRange(delta));
    }
    if !(sigma > 0.0) {
        return Err(Error::invalid("sigma must be positive"));
    }
    let l = (2.0 / delta).ln();
    let n = n as f64;
    Ok((sigma * (2.0 * l / n).sqrt(), (l / (2.0 * n)).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::normal_quantile;
    use crate::rng::rng_from_seed;
    use rand::Rng as _;
    use rand_distr::StandardNormal;

    #[test]
    fn random_examples() {
        let l = 40.0_f64.ln();
        let b = bound_random(1000, 1000, 1000, 0.1, 2.0).unwrap();
        assert!((b.alpha_lower - (1.0 - 3.0 * l / 2000.0)).abs() < 1e-14);
        assert!((b.epsilon_upper - 3.0 * l / 1000.0).abs() < 1e-14);
        let b = bound_random(1000, 1000, 0, 0.1, 2.0).unwrap();
        assert!((b.alpha_lower - (-5.0 - 3.0 * l / 1000.0)).abs() < 1e-12);
        assert!((b.alpha_lower + 5.011).abs() < 1e-3);
        assert!(b.vacuous());
        let mut prev = bound_random(1000, 800, 0, 0.1, 1.0).unwrap();
        for f in 1..=1000 {
            let b = bound_random(1000, 800, f, 0.1, 1.0).unwrap();
            assert!(b.epsilon_upper <= prev.epsilon_upper);
            assert!(b.alpha_lower >= prev.alpha_lower);
            prev = b;
        }
        assert!(bound_random(10, 10, 11, 0.1, 1.0).is_err());
        assert!(bound_random(10, 0, 1, 0.1, 1.0).is_err());
        assert!(bound_random(10, 10, 1, 1.0, 1.0).is_err());
    }

    #[test]
    fn selective_zero_divergence_reduces_to_half_normal() {
        let (n1, f, delta) = (1000, 900, 0.1);
        let q = selective_quantile(n1, f, delta);
        let g = normal_quantile((q + 1.0) / 2.0).unwrap();
        let b = *bound_selective(n1, 500, f, delta, 0.0).unwrap().bound().unwrap();
        let r = 100.0 / 500.0;
        let l = 40.0_f64.ln();
        assert!((b.epsilon_upper - (r * r * g * g + 2.0 * l / 500.0)).abs() < 1e-12);
        assert!((b.alpha_lower - (-0.5 * r * r * g * g - l / 500.0)).abs() < 1e-12);
    }

    #[test]
    fn selective_matches_monte_carlo_quantile() {
        let (n1, n2, f, delta, d) = (1000, 1000, 900, 0.1, 0.125_f64);
        let q = selective_quantile(n1, f, delta);
        assert!((q - 0.1434).abs() < 1e-3);
        let c = (2.0 * d).sqrt();
        let mut rng = rng_from_seed(17);
        let mut draws: Vec<f64> = (0..10_000_000)
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                (z + c).abs()
            })
            .collect();
        let k = (q * draws.len() as f64) as usize;
        let (_, mc, _) = draws.select_nth_unstable_by(k, f64::total_cmp);
        let mc = *mc;
        let r = (n1 - f) as f64 / n2 as f64;
        let l = 40.0_f64.ln();
        let expected = r * r * mc * mc + 2.0 * l / n2 as f64;
        let b = *bound_selective(n1, n2, f, delta, d).unwrap().bound().unwrap();
        assert!((b.epsilon_upper - expected).abs() < 1e-3);
        assert!((g_inverse(q, d).unwrap() - mc).abs() < 1e-3);
    }

    #[test]
    fn selective_inapplicable_for_small_budgets() {
        let g = bound_selective(1000, 1000, 10, 0.1, 0.5).unwrap();
        assert!(matches!(g, Guarantee::Inapplicable { quantile, .. } if quantile >= 1.0));
        let mut prev = f64::INFINITY;
        for f in 50..=1000 {
            if let Guarantee::Bound(b) = bound_selective(1000, 700, f, 0.1, 0.5).unwrap() {
                assert!(b.epsilon_upper <= prev + 1e-15);
                prev = b.epsilon_upper;
            }
        }
        assert!(prev.is_finite());
    }

    /// The improvement of selective over random at a fixed budget holds once
    /// at least 70% of the forget set is deleted; closer to one half it
    /// depends on D.
    #[test]
    fn selective_versus_random_grid() {
        let (n1, n2, delta) = (1000, 1000, 0.1);
        let mut report = Vec::new();
        for &d in &[0.05, 0.125, 0.25, 0.5] {
            for f in (500..=1000).step_by(50) {
                let r = bound_random(n1, n2, f, delta, d).unwrap();
                let s = *bound_selective(n1, n2, f, delta, d).unwrap().bound().unwrap();
                report.push((d, f, s.epsilon_upper <= r.epsilon_upper));
                if f >= 700 {
                    assert!(s.epsilon_upper <= r.epsilon_upper, "D={d} f={f}");
                }
            }
        }
        let better = report.iter().filter(|r| r.2).count();
        println!("selective tighter on {better}/{} grid points", report.len());
    }

    #[test]
    fn random_budget_closed_form_examples() {
        let (n1, n2, delta, alpha) = (1000, 2000, 0.1, 0.01);
        let b = budget_random(n1, n2, delta, 8.0 * alpha, alpha, alpha).unwrap();
        let removal = b.closed_form_terms[0].1;
        assert!((removal - (1000.0 - 2000.0 * (5.0_f64 / 32.0).sqrt())).abs() < 1e-9);

        let b = budget_random(n1, n2, delta, 0.1, 0.001, 1.0).unwrap();
        assert_eq!(b.closed_form_terms[1].1, 1000.0 - 2000.0);

        let b = budget_random(1000, 10_000_000, delta, 1.0, 0.01, 0.5).unwrap();
        assert_eq!(b.closed_form_f, Some(0));
        assert_eq!(b.f, Some(0));
        assert_eq!(b.binding, Binding::None);
    }

    #[test]
    fn selective_budget_closed_form_examples() {
        let (n1, delta) = (1000, 0.1);
        let l = 40.0_f64.ln();
        let b = budget_selective(n1, 1000, delta, 30.0, 0.01, 0.1).unwrap();
        let floor = b.closed_form_terms[0].1;
        assert!((floor - 1000.0 * (0.5 + (l / 2000.0).sqrt())).abs() < 1e-9);

        let b = budget_selective(n1, 1000, delta, 0.08, 0.02, 0.1).unwrap();
        assert_eq!(b.closed_form_terms[2].1, 1000.0);
        assert_eq!(b.closed_form_f, Some(1000));

        let (n2, d, alpha, epsilon) = (1000, 0.1, 0.02, 0.05);
        let s = budget_selective(n1, n2, delta, d, alpha, epsilon).unwrap();
        let r = budget_random(n1, n2, delta, d, alpha, epsilon).unwrap();
        assert!(s.f.unwrap() <= r.f.unwrap(), "{s:?} {r:?}");
        assert_eq!((s.f, r.f), (Some(644), Some(724)));
    }

    #[test]
    fn budgets_meet_targets_and_are_minimal() {
        let mut rng = rng_from_seed(99);
        let mut checked = 0;
        while checked < 100 {
            let n1 = rng.random_range(100..3000);
            let n2 = rng.random_range(100..30000);
            let delta = rng.random_range(0.01..0.2);
            let d = rng.random_range(0.02..3.0);
            let alpha = rng.random_range(0.001..d / 4.0);
            let epsilon = rng.random_range(0.001..1.0);
            for budget in [
                budget_random(n1, n2, delta, d, alpha, epsilon).unwrap(),
                budget_selective(n1, n2, delta, d, alpha, epsilon).unwrap(),
            ] {
                let eval = |f: usize| match budget.mechanism {
                    Mechanism::Random => Some(bound_random(n1, n2, f, delta, d).unwrap()),
                    Mechanism::Selective => bound_selective(n1, n2, f, delta, d).unwrap().bound().copied(),
                };
                match budget.f {
                    Some(f) => {
                        assert!(eval(f).unwrap().meets(alpha, epsilon));
                        if f > 0 {
                            assert!(!eval(f - 1).is_some_and(|b| b.meets(alpha, epsilon)));
                        }
                    }
                    None => {
                        assert_eq!(budget.binding, Binding::Unreachable);
                        assert!(!eval(n1).unwrap().meets(alpha, epsilon));
                    }
                }
            }
            checked += 1;
        }
    }

    #[test]
    fn precondition_reporting() {
        let b = budget_random(1000, 10, 0.1, 0.05, 0.01, 0.01).unwrap();
        assert!(!b.preconditions_hold);
        assert_eq!(b.precondition_notes.len(), 2);
        let b = budget_selective(1000, 10, 0.1, 0.05, 0.02, 0.01).unwrap();
        assert!(!b.preconditions_hold);
        assert!(budget_random(1000, 10, 0.1, 0.0, 0.01, 0.01).is_err());
        assert!(budget_random(1000, 10, 0.1, 1.0, 0.0, 0.01).is_err());
    }

    #[test]
    fn deviation_examples() {
        let delta = 2.0 * (-5.0_f64).exp();
        let (h, _) = deviation_terms(10, delta, 1.0).unwrap();
        assert!((h - 1.0).abs() < 1e-15);
        let (h, _) = deviation_terms(1000, 0.05, 1.0).unwrap();
        assert!((h - (2.0 * 40.0_f64.ln() / 1000.0).sqrt()).abs() < 1e-15);
        assert!((h - 0.0859).abs() < 1e-4);
        let (_, a) = deviation_terms(100, 0.1, 1.0).unwrap();
        let (_, b) = deviation_terms(400, 0.1, 1.0).unwrap();
        assert!((a / b - 2.0).abs() < 1e-12);
        assert!(deviation_terms(0, 0.1, 1.0).is_err());
        assert!(deviation_terms(10, 0.1, 0.0).is_err());
    }
}
