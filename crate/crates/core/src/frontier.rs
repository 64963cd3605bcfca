//! Removal/preservation trade-off frontiers.
//!
//! For a target `alpha` on the removal divergence `KL(p1 || p)`, the frontier
//! gives the smallest achievable preservation divergence `KL(p2 || p)` over
//! the model family. Shared-covariance Gaussians have the closed form
//! `(sqrt(alpha) - sqrt(D))^2` with `D = KL(p1 || p2)`; general regular
//! exponential families go through a one-dimensional search for the KKT
//! multiplier `lambda*` in `(0, 1)`.

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::{kl_gaussian, GaussianModel};
use crate::rng::rng_from_seed;

/// A pair of forward-KL divergences `(alpha, epsilon)` in nats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TradeoffPoint {
    pub alpha: f64,
    pub epsilon: f64,
    /// True when the point is beaten by `(D, 0)`, i.e. `alpha < D`.
    pub dominated: bool,
}

/// Closed-form frontier for shared-covariance Gaussians.
///
/// Below the reference divergence the point is dominated by `(D, 0)` and is
/// returned with `epsilon = 0`.
pub fn frontier_gaussian(divergence: f64, alpha: f64) -> Result<TradeoffPoint> {
    if !(divergence >= 0.0) || !divergence.is_finite() {
        return Err(Error::invalid(format!(
            "reference divergence must be finite and >= 0, got {divergence}"
        )));
    }
    if !(alpha >= 0.0) {
        return Err(Error::invalid(format!("alpha must be >= 0, got {alpha}")));
    }
    if alpha < divergence {
        return Ok(TradeoffPoint {
            alpha,
            epsilon: 0.0,
            dominated: true,
        });
    }
    let gap = alpha.sqrt() - divergence.sqrt();
    Ok(TradeoffPoint {
        alpha,
        epsilon: gap * gap,
        dominated: false,
    })
}

/// Outcome of checking `(alpha, epsilon)`-distributional unlearning for a model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UnlearningCheck {
    /// `KL(p1 || p)`.
    pub removal: f64,
    /// `KL(p2 || p)`.
    pub preservation: f64,
    pub satisfied: bool,
}

/// Does `p` satisfy `KL(p1 || p) >= alpha` and `KL(p2 || p) <= epsilon`?
pub fn check_unlearning(
    p1: &GaussianModel,
    p2: &GaussianModel,
    p: &GaussianModel,
    alpha: f64,
    epsilon: f64,
) -> Result<UnlearningCheck> {
    let removal = kl_gaussian(p1, p)?;
    let preservation = kl_gaussian(p2, p)?;
    Ok(UnlearningCheck {
        removal,
        preservation,
        satisfied: removal >= alpha && preservation <= epsilon,
    })
}

/// Point on the curve traced by moving a unit-variance model `N(mu, sigma^2)`
/// along the real line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub mu: f64,
    pub alpha: f64,
    pub epsilon: f64,
}

/// Achieved `(KL(p1 || p), KL(p2 || p))` for each candidate mean `mu`, with
/// `p1 = N(mu1, sigma^2)`, `p2 = N(mu2, sigma^2)`, `p = N(mu, sigma^2)`.
pub fn tradeoff_curve_gaussian(mu1: f64, mu2: f64, sigma: f64, mus: &[f64]) -> Result<Vec<CurvePoint>> {
    if !(sigma > 0.0) {
        return Err(Error::invalid("sigma must be positive"));
    }
    let two_var = 2.0 * sigma * sigma;
    Ok(mus
        .iter()
        .map(|&mu| CurvePoint {
            mu,
            alpha: (mu1 - mu).powi(2) / two_var,
            epsilon: (mu2 - mu).powi(2) / two_var,
        })
        .collect())
}

/// Empirical frontier of a point cloud: for each point, the smallest
/// `epsilon` among points with removal at least as large. Returned sorted by
/// ascending `alpha`.
pub fn lower_envelope(points: &[CurvePoint]) -> Vec<(f64, f64)> {
    let mut sorted: Vec<(f64, f64)> = points.iter().map(|p| (p.alpha, p.epsilon)).collect();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.total_cmp(&b.1)));
    let mut best = f64::INFINITY;
    let mut out: Vec<(f64, f64)> = sorted
        .into_iter()
        .map(|(a, e)| {
            best = best.min(e);
            (a, best)
        })
        .collect();
    out.reverse();
    out
}

/// `reference` weakly improves on `point` in both objectives and strictly in one.
pub fn dominates(reference: (f64, f64), point: (f64, f64)) -> bool {
    let (ra, re) = reference;
    let (pa, pe) = point;
    ra >= pa && re <= pe && (ra > pa || re < pe)
}

/// A regular minimal exponential family `h(x) exp(theta^T T(x) - A(theta))`
/// described by its log-partition and mean map.
pub trait ExponentialFamily: Send + Sync {
    fn dim(&self) -> usize;

    /// `A(theta)`.
    fn log_partition(&self, theta: &[f64]) -> f64;

    /// `grad A(theta) = E_theta[T]`.
    fn mean_map(&self, theta: &[f64]) -> Vec<f64>;

    /// Natural parameter with the given mean, or `None` outside the mean space.
    fn inverse_mean_map(&self, mean: &[f64]) -> Option<Vec<f64>>;

    /// `KL(p_from || p_to)` as the Bregman divergence of `A`:
    /// `A(to) - A(from) - (to - from)^T grad A(from)`.
    fn kl(&self, from: &[f64], to: &[f64]) -> f64 {
        let grad = self.mean_map(from);
        let inner: f64 = to
            .iter()
            .zip(from)
            .zip(&grad)
            .map(|((t, f), g)| (t - f) * g)
            .sum();
        self.log_partition(to) - self.log_partition(from) - inner
    }
}

/// `N(mu, Sigma)` with `Sigma` fixed: `theta = Sigma^{-1} mu`,
/// `A(theta) = theta^T Sigma theta / 2`.
#[derive(Debug, Clone)]
pub struct GaussianFamily {
    covariance: DMatrix<f64>,
    precision: DMatrix<f64>,
}

impl GaussianFamily {
    pub fn new(covariance: DMatrix<f64>) -> Result<Self> {
        // Reuse the model constructor for the SPD check.
        GaussianModel::new(DVector::zeros(covariance.nrows()), covariance.clone())?;
        let precision = covariance
            .clone()
            .cholesky()
            .ok_or(Error::NotPositiveDefinite)?
            .inverse();
        Ok(Self {
            covariance,
            precision,
        })
    }

    pub fn natural_from_mean(&self, mean: &[f64]) -> Vec<f64> {
        (&self.precision * DVector::from_column_slice(mean))
            .iter()
            .copied()
            .collect()
    }
}

impl ExponentialFamily for GaussianFamily {
    fn dim(&self) -> usize {
        self.covariance.nrows()
    }

    fn log_partition(&self, theta: &[f64]) -> f64 {
        let t = DVector::from_column_slice(theta);
        0.5 * t.dot(&(&self.covariance * &t))
    }

    fn mean_map(&self, theta: &[f64]) -> Vec<f64> {
        (&self.covariance * DVector::from_column_slice(theta))
            .iter()
            .copied()
            .collect()
    }

    fn inverse_mean_map(&self, mean: &[f64]) -> Option<Vec<f64>> {
        if mean.iter().all(|m| m.is_finite()) {
            Some(self.natural_from_mean(mean))
        } else {
            None
        }
    }
}

/// Bernoulli(q) with `theta = logit(q)`, `A(theta) = log(1 + e^theta)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct BernoulliFamily;

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl ExponentialFamily for BernoulliFamily {
    fn dim(&self) -> usize {
        1
    }

    fn log_partition(&self, theta: &[f64]) -> f64 {
        softplus(theta[0])
    }

    fn mean_map(&self, theta: &[f64]) -> Vec<f64> {
        vec![sigmoid(theta[0])]
    }

    fn inverse_mean_map(&self, mean: &[f64]) -> Option<Vec<f64>> {
        let q = mean[0];
        (q > 0.0 && q < 1.0).then(|| vec![(q / (1.0 - q)).ln()])
    }
}

/// Poisson(rate) with `theta = log(rate)`, `A(theta) = e^theta`.
#[derive(Debug, Clone, Copy, Default)]
pub struct PoissonFamily;

impl ExponentialFamily for PoissonFamily {
    fn dim(&self) -> usize {
        1
    }

    fn log_partition(&self, theta: &[f64]) -> f64 {
        theta[0].exp()
    }

    fn mean_map(&self, theta: &[f64]) -> Vec<f64> {
        vec![theta[0].exp()]
    }

    fn inverse_mean_map(&self, mean: &[f64]) -> Option<Vec<f64>> {
        (mean[0] > 0.0 && mean[0].is_finite()).then(|| vec![mean[0].ln()])
    }
}

/// Exponential(rate) with `T(x) = x`, `theta = -rate`, `A(theta) = -log(-theta)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExponentialRateFamily;

impl ExponentialFamily for ExponentialRateFamily {
    fn dim(&self) -> usize {
        1
    }

    fn log_partition(&self, theta: &[f64]) -> f64 {
        if theta[0] < 0.0 {
            -(-theta[0]).ln()
        } else {
            f64::INFINITY
        }
    }

    fn mean_map(&self, theta: &[f64]) -> Vec<f64> {
        vec![-1.0 / theta[0]]
    }

    fn inverse_mean_map(&self, mean: &[f64]) -> Option<Vec<f64>> {
        (mean[0] > 0.0 && mean[0].is_finite()).then(|| vec![-1.0 / mean[0]])
    }
}

/// A family together with the natural parameters of `p1` and `p2`.
pub struct ExpFamilySpec<F> {
    family: F,
    theta1: Vec<f64>,
    theta2: Vec<f64>,
}

impl<F: ExponentialFamily> ExpFamilySpec<F> {
    /// Validates dimensions, `theta1 != theta2`, mean-map consistency and
    /// convexity of `A` along segments.
    pub fn new(family: F, theta1: Vec<f64>, theta2: Vec<f64>) -> Result<Self> {
        let d = family.dim();
        for t in [&theta1, &theta2] {
            if t.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: t.len(),
                });
            }
            if t.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid("natural parameters must be finite"));
            }
        }
        if theta1 == theta2 {
            return Err(Error::invalid("theta1 and theta2 must differ"));
        }
        let spec = Self {
            family,
            theta1,
            theta2,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn family(&self) -> &F {
        &self.family
    }

    pub fn theta1(&self) -> &[f64] {
        &self.theta1
    }

    pub fn theta2(&self) -> &[f64] {
        &self.theta2
    }

    /// `KL(p1 || p2)`.
    pub fn reference_divergence(&self) -> f64 {
        self.family.kl(&self.theta1, &self.theta2)
    }

    fn validate(&self) -> Result<()> {
        let fam = &self.family;
        let m1 = fam.mean_map(&self.theta1);
        let m2 = fam.mean_map(&self.theta2);
        let probes: Vec<Vec<f64>> = [0.0, 0.25, 0.5, 0.75, 1.0]
            .iter()
            .map(|&w| m1.iter().zip(&m2).map(|(a, b)| (1.0 - w) * a + w * b).collect())
            .collect();
        for m in &probes {
            let theta = fam
                .inverse_mean_map(m)
                .ok_or_else(|| Error::invalid("inverse mean map undefined between the two means"))?;
            let back = fam.mean_map(&theta);
            let err = back
                .iter()
                .zip(m)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if err > 1e-9 * m.iter().fold(1.0_f64, |acc, v| acc.max(v.abs())) {
                return Err(Error::invalid(format!(
                    "mean map and its inverse disagree by {err:e}"
                )));
            }
        }
        // Second differences of A along segments through theta1 and theta2.
        let mut rng = rng_from_seed(0x5eed);
        let d = fam.dim();
        let scale = self
            .theta1
            .iter()
            .zip(&self.theta2)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
            .max(1e-3);
        for k in 0..16 {
            let base = if k % 2 == 0 { &self.theta1 } else { &self.theta2 };
            let dir: Vec<f64> = if k == 0 {
                self.theta2.iter().zip(&self.theta1).map(|(a, b)| a - b).collect()
            } else {
                (0..d).map(|_| rng.random_range(-1.0..1.0) * scale).collect()
            };
            let h = 0.05;
            let at = |t: f64| -> Vec<f64> { base.iter().zip(&dir).map(|(b, v)| b + t * v).collect() };
            let (a_m, a_0, a_p) = (
                fam.log_partition(&at(-h)),
                fam.log_partition(&at(0.0)),
                fam.log_partition(&at(h)),
            );
            if !(a_m.is_finite() && a_p.is_finite()) {
                continue;
            }
            if a_p - 2.0 * a_0 + a_m < -1e-8 {
                return Err(Error::invalid("log-partition is not convex along a probe segment"));
            }
        }
        Ok(())
    }
}

impl ExpFamilySpec<GaussianFamily> {
    /// Shared-covariance Gaussian instance from the two means.
    pub fn gaussian(mu1: &[f64], mu2: &[f64], covariance: DMatrix<f64>) -> Result<Self> {
        let family = GaussianFamily::new(covariance)?;
        let theta1 = family.natural_from_mean(mu1);
        let theta2 = family.natural_from_mean(mu2);
        Self::new(family, theta1, theta2)
    }
}

impl ExpFamilySpec<BernoulliFamily> {
    pub fn bernoulli(q1: f64, q2: f64) -> Result<Self> {
        let fam = BernoulliFamily;
        let t1 = fam
            .inverse_mean_map(&[q1])
            .ok_or_else(|| Error::invalid("q1 must lie in (0, 1)"))?;
        let t2 = fam
            .inverse_mean_map(&[q2])
            .ok_or_else(|| Error::invalid("q2 must lie in (0, 1)"))?;
        Self::new(fam, t1, t2)
    }
}

impl ExpFamilySpec<PoissonFamily> {
    pub fn poisson(rate1: f64, rate2: f64) -> Result<Self> {
        let fam = PoissonFamily;
        let t1 = fam
            .inverse_mean_map(&[rate1])
            .ok_or_else(|| Error::invalid("rate1 must be positive"))?;
        let t2 = fam
            .inverse_mean_map(&[rate2])
            .ok_or_else(|| Error::invalid("rate2 must be positive"))?;
        Self::new(fam, t1, t2)
    }
}

impl ExpFamilySpec<ExponentialRateFamily> {
    pub fn exponential(rate1: f64, rate2: f64) -> Result<Self> {
        if !(rate1 > 0.0 && rate2 > 0.0) {
            return Err(Error::invalid("rates must be positive"));
        }
        Self::new(ExponentialRateFamily, vec![-rate1], vec![-rate2])
    }
}

/// Solution of the exponential-family frontier problem at one `alpha`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpFrontierPoint {
    pub point: TradeoffPoint,
    /// KKT multiplier; `0` when `alpha <= KL(p1 || p2)` (the optimum is `p2`).
    pub lambda_star: f64,
    pub theta_star: Vec<f64>,
    pub mean_star: Vec<f64>,
    /// `|KL(p1 || p*) - alpha|` at the returned multiplier; `0` when the
    /// removal constraint is slack.
    pub residual: f64,
    /// `KL(p2 || p1) + alpha + (theta2 - theta1)^T (E2 - E1) / (lambda* - 1)`.
    /// Equals `point.epsilon` when the mean map is linear (Gaussian), and
    /// overstates it otherwise.
    pub epsilon_closed_form: f64,
}

impl ExpFrontierPoint {
    /// Max-abs residual of `(1 - lambda) E*[T] = E2[T] - lambda E1[T]`.
    pub fn stationarity_residual<F: ExponentialFamily>(&self, spec: &ExpFamilySpec<F>) -> f64 {
        let lam = self.lambda_star;
        let e1 = spec.family.mean_map(&spec.theta1);
        let e2 = spec.family.mean_map(&spec.theta2);
        let es = spec.family.mean_map(&self.theta_star);
        es.iter()
            .zip(e1.iter().zip(&e2))
            .map(|(s, (a, b))| ((1.0 - lam) * s - (b - lam * a)).abs())
            .fold(0.0, f64::max)
    }
}

const LAMBDA_LO: f64 = 1e-9;
const LAMBDA_HI: f64 = 1.0 - 1e-9;
const MAX_ITER: usize = 200;

/// Frontier value `v(alpha)` for an exponential family.
///
/// Finds `lambda* in (0, 1)` with `H(lambda) = KL(p1 || p*(lambda)) = alpha`,
/// where `p*(lambda)` has mean `(lambda E1 - E2) / (lambda - 1)`, by
/// sign-change bisection. No monotonicity direction is assumed; when the
/// bracket shows no sign change the solver falls back to golden-section
/// minimisation of `|H - alpha|`. Points with `alpha <= KL(p1 || p2)` come
/// back with `epsilon = 0`.
pub fn frontier_expfamily<F: ExponentialFamily>(
    spec: &ExpFamilySpec<F>,
    alpha: f64,
) -> Result<ExpFrontierPoint> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::invalid(format!("alpha must be finite and >= 0, got {alpha}")));
    }
    let fam = &spec.family;
    let d12 = spec.reference_divergence();
    if alpha <= d12 {
        return Ok(ExpFrontierPoint {
            point: TradeoffPoint {
                alpha,
                epsilon: 0.0,
                dominated: alpha < d12,
            },
            lambda_star: 0.0,
            theta_star: spec.theta2.clone(),
            mean_star: fam.mean_map(&spec.theta2),
            residual: 0.0,
            epsilon_closed_form: 0.0,
        });
    }
    let e1 = fam.mean_map(&spec.theta1);
    let e2 = fam.mean_map(&spec.theta2);
    let theta_at = |lam: f64| -> Option<Vec<f64>> {
        let m: Vec<f64> = e1
            .iter()
            .zip(&e2)
            .map(|(a, b)| (lam * a - b) / (lam - 1.0))
            .collect();
        fam.inverse_mean_map(&m)
    };
    // Leaving the mean space means p* has run off to the boundary, where the
    // divergence from p1 is infinite.
    let excess = |lam: f64| -> f64 {
        match theta_at(lam) {
            Some(t) => {
                let h = fam.kl(&spec.theta1, &t);
                if h.is_nan() {
                    f64::INFINITY
                } else {
                    h - alpha
                }
            }
            None => f64::INFINITY,
        }
    };
    let tol = 1e-9 * alpha.max(1.0);

    let (mut lo, mut hi) = (LAMBDA_LO, LAMBDA_HI);
    let (f_lo, f_hi) = (excess(lo), excess(hi));
    let lambda = if f_lo.signum() != f_hi.signum() && f_lo != 0.0 {
        let lo_negative = f_lo < 0.0;
        let mut best = if f_lo.abs() < f_hi.abs() { lo } else { hi };
        let mut best_res = f_lo.abs().min(f_hi.abs());
        for _ in 0..MAX_ITER {
            let mid = 0.5 * (lo + hi);
            let f_mid = excess(mid);
            if f_mid.abs() < best_res {
                best = mid;
                best_res = f_mid.abs();
            }
            if best_res <= tol && hi - lo < 1e-15 {
                break;
            }
            if (f_mid < 0.0) == lo_negative {
                lo = mid;
            } else {
                hi = mid;
            }
            if mid <= lo.min(hi) && mid >= lo.max(hi) {
                break;
            }
        }
        best
    } else if f_lo == 0.0 {
        lo
    } else {
        golden_section(|l| excess(l).abs(), lo, hi)
    };
    let residual = excess(lambda).abs();
    if !(residual <= tol) {
        return Err(Error::BracketFailure {
            iterations: MAX_ITER,
            reason: format!("|H(lambda) - alpha| = {residual:e} at lambda = {lambda}"),
        });
    }
    let theta_star = theta_at(lambda).ok_or_else(|| Error::BracketFailure {
        iterations: MAX_ITER,
        reason: "multiplier left the mean space".into(),
    })?;
    let mean_star = fam.mean_map(&theta_star);
    let cross: f64 = spec
        .theta2
        .iter()
        .zip(&spec.theta1)
        .zip(e2.iter().zip(&e1))
        .map(|((t2, t1), (m2, m1))| (t2 - t1) * (m2 - m1))
        .sum();
    let d21 = fam.kl(&spec.theta2, &spec.theta1);
    let epsilon_closed_form = d21 + alpha + cross / (lambda - 1.0);
    let epsilon = fam.kl(&spec.theta2, &theta_star);
    Ok(ExpFrontierPoint {
        point: TradeoffPoint {
            alpha,
            epsilon,
            dominated: false,
        },
        lambda_star: lambda,
        theta_star,
        mean_star,
        residual,
        epsilon_closed_form,
    })
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..MAX_ITER {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        c
    } else {
        d
    }
}
