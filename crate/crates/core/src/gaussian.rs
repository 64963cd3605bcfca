//! Shared-covariance Gaussian machinery.
//!
//! The model class is `{ N(mu, Sigma) : mu in R^d }` with `Sigma` known and
//! fixed. Within that class the forward KL divergence is half the squared
//! Mahalanobis distance between means, and refitting after a deletion is just
//! the pooled empirical mean of whatever samples survive.
//!
//! This module also hosts the folded-normal CDF `g(u; kappa)` and its inverse,
//! which drive the selective-removal guarantee.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

const COVARIANCE_TOLERANCE: f64 = 1e-12;

/// A Gaussian with known covariance. The Cholesky factor is computed once at
/// construction and reused by every divergence evaluation.
#[derive(Debug, Clone)]
pub struct GaussianModel {
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
}

impl GaussianModel {
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if d == 0 {
            return Err(Error::invalid("mean must have at least one coordinate"));
        }
        if covariance.nrows() != d || covariance.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: covariance.nrows(),
            });
        }
        if mean.iter().chain(covariance.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("model parameters must be finite"));
        }
        let scale = covariance.amax().max(1.0);
        for i in 0..d {
            for j in 0..i {
                if (covariance[(i, j)] - covariance[(j, i)]).abs() > COVARIANCE_TOLERANCE * scale {
                    return Err(Error::NotPositiveDefinite);
                }
            }
        }
        let chol = Cholesky::new(covariance.clone()).ok_or(Error::NotPositiveDefinite)?;
        if chol.l_dirty().diagonal().iter().any(|&v| v <= 0.0) {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(Self {
            mean,
            covariance,
            chol,
        })
    }

    /// `N(mean, variance)` on the real line.
    pub fn univariate(mean: f64, variance: f64) -> Result<Self> {
        if !(variance > 0.0) {
            return Err(Error::NotPositiveDefinite);
        }
        Self::new(
            DVector::from_element(1, mean),
            DMatrix::from_element(1, 1, variance),
        )
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    /// Squared Mahalanobis distance `(x - mean)^T Sigma^{-1} (x - mean)`.
    pub fn mahalanobis_sq(&self, x: &DVector<f64>) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        let diff = x - &self.mean;
        let y = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&diff)
            .ok_or(Error::NotPositiveDefinite)?;
        Ok(y.norm_squared())
    }

    /// Log-density at `x`.
    pub fn log_pdf(&self, x: &DVector<f64>) -> Result<f64> {
        let m = self.mahalanobis_sq(x)?;
        let log_det: f64 = self
            .chol
            .l_dirty()
            .diagonal()
            .iter()
            .map(|v| 2.0 * v.ln())
            .sum();
        let d = self.dim() as f64;
        Ok(-0.5 * (m + log_det + d * (2.0 * std::f64::consts::PI).ln()))
    }
}

/// Forward KL divergence `KL(p || q)` between two members of the
/// shared-covariance family: `0.5 (mu_p - mu_q)^T Sigma^{-1} (mu_p - mu_q)`.
pub fn kl_gaussian(p: &GaussianModel, q: &GaussianModel) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: q.dim(),
        });
    }
    let max_abs_diff = (&p.covariance - &q.covariance).amax();
    if max_abs_diff > COVARIANCE_TOLERANCE {
        return Err(Error::CovarianceMismatch { max_abs_diff });
    }
    Ok(0.5 * q.mahalanobis_sq(&p.mean)?)
}

/// Maximum-likelihood refit on the retained samples: the pooled empirical mean
/// of the kept p1 rows and all p2 rows, with the covariance held fixed.
pub fn pooled_mle<R: AsRef<[f64]>>(
    kept_p1: &[R],
    samples_p2: &[R],
    covariance: DMatrix<f64>,
) -> Result<GaussianModel> {
    let d = covariance.nrows();
    let n = kept_p1.len() + samples_p2.len();
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let mut sum = DVector::zeros(d);
    for row in kept_p1.iter().chain(samples_p2) {
        let row = row.as_ref();
        if row.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: row.len(),
            });
        }
        for (s, &x) in sum.iter_mut().zip(row) {
            *s += x;
        }
    }
    GaussianModel::new(sum / n as f64, covariance)
}

/// Univariate convenience wrapper around [`pooled_mle`]; returns the pooled mean.
pub fn pooled_mean_1d(kept_p1: &[f64], samples_p2: &[f64]) -> Result<f64> {
    let n = kept_p1.len() + samples_p2.len();
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let total: f64 = kept_p1.iter().chain(samples_p2).sum();
    Ok(total / n as f64)
}

/// Standard normal CDF through the complementary error function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal quantile (Wichura's AS241, PPND16; ~1e-16 relative).
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::ProbabilityOutOfRange(p));
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        let num = poly(
            r,
            &[
                3.387_132_872_796_366_608,
                1.331_416_678_917_843_774_5e2,
                1.971_590_950_306_551_442_7e3,
                1.373_169_376_550_946_112_5e4,
                4.592_195_393_154_987_145_7e4,
                6.726_577_092_700_870_085_3e4,
                3.343_057_558_358_812_810_5e4,
                2.509_080_928_730_122_672_7e3,
            ],
        );
        let den = poly(
            r,
            &[
                1.0,
                4.231_333_070_160_091_125_2e1,
                6.871_870_074_920_579_083e2,
                5.394_196_021_424_751_107_7e3,
                2.121_379_430_158_659_586_7e4,
                3.930_789_580_009_271_061e4,
                2.872_908_573_572_194_267_4e4,
                5.226_495_278_852_854_561e3,
            ],
        );
        return Ok(q * num / den);
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-tail.ln()).sqrt();
    let val = if r <= 5.0 {
        r -= 1.6;
        poly(
            r,
            &[
                1.423_437_110_749_683_577_34,
                4.630_337_846_156_545_295_9,
                5.769_497_221_460_691_405_5,
                3.647_848_324_763_204_605_04,
                1.270_458_252_452_368_382_58,
                2.417_807_251_774_506_117_7e-1,
                2.272_384_498_926_918_458_33e-2,
                7.745_450_142_783_414_076_4e-4,
            ],
        ) / poly(
            r,
            &[
                1.0,
                2.053_191_626_637_758_821_87,
                1.676_384_830_183_803_849_4,
                6.897_673_349_851_000_045_5e-1,
                1.481_039_764_274_800_745_9e-1,
                1.519_866_656_361_645_719_66e-2,
                5.475_938_084_995_344_946e-4,
                1.050_750_071_644_416_843_24e-9,
            ],
        )
    } else {
        r -= 5.0;
        poly(
            r,
            &[
                6.657_904_643_501_103_777_2,
                5.463_784_911_164_114_369_9,
                1.784_826_539_917_291_335_8,
                2.965_605_718_285_048_912_3e-1,
                2.653_218_952_657_612_309_3e-2,
                1.242_660_947_388_078_438_6e-3,
                2.711_555_568_743_487_578_15e-5,
                2.010_334_399_292_288_132_65e-7,
            ],
        ) / poly(
            r,
            &[
                1.0,
                5.998_322_065_558_879_376_9e-1,
                1.369_298_809_227_358_053_1e-1,
                1.487_536_129_085_061_485_25e-2,
                7.868_691_311_456_132_591e-4,
                1.846_318_317_510_054_681_8e-5,
                1.421_511_758_316_445_888_7e-7,
                2.044_263_103_389_939_785_64e-15,
            ],
        )
    };
    Ok(if q < 0.0 { -val } else { val })
}

fn poly(x: f64, coeffs: &[f64]) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Arguments of the folded-normal CDF: `u` is the standardized distance and
/// `kappa` the divergence parameter (the fold sits at `sqrt(2 kappa)`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldedNormalSpec {
    pub u: f64,
    pub kappa: f64,
}

impl FoldedNormalSpec {
    pub fn new(u: f64, kappa: f64) -> Result<Self> {
        if !(u >= 0.0) || !(kappa >= 0.0) {
            return Err(Error::invalid(format!(
                "folded normal needs u >= 0 and kappa >= 0 (got u = {u}, kappa = {kappa})"
            )));
        }
        Ok(Self { u, kappa })
    }

    pub fn cdf(&self) -> f64 {
        g_folded(self.u, self.kappa)
    }
}

/// `g(u; kappa) = Phi(u - sqrt(2 kappa)) + Phi(u + sqrt(2 kappa)) - 1`, i.e.
/// `P(|X - sqrt(2 kappa)| <= u)` for standard normal `X`.
///
/// Evaluated as `Phi(u - c) - Phi(-u - c)` so small values do not lose digits
/// to the `- 1` and `g(0; kappa)` is exactly zero.
pub fn g_folded(u: f64, kappa: f64) -> f64 {
    let c = (2.0 * kappa).sqrt();
    normal_cdf(u - c) - normal_cdf(-u - c)
}

/// Inverse of [`g_folded`] in `u`: the `p`-quantile of the folded normal.
///
/// Bisection on `[0, sqrt(2 kappa) + Phi^{-1}(1 - (1 - p)/4) + 10]`, run until
/// the bracket collapses to adjacent floating-point values.
pub fn g_inverse(p: f64, kappa: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::ProbabilityOutOfRange(p));
    }
    if !(kappa >= 0.0) || !kappa.is_finite() {
        return Err(Error::invalid(format!("kappa must be >= 0, got {kappa}")));
    }
    let c = (2.0 * kappa).sqrt();
    let mut lo = 0.0_f64;
    let mut hi = c + normal_quantile(1.0 - (1.0 - p) / 4.0)? + 10.0;
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g_folded(mid, kappa) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Both ends bracket p; return whichever lands closer.
    let u = if (g_folded(lo, kappa) - p).abs() <= (g_folded(hi, kappa) - p).abs() {
        lo
    } else {
        hi
    };
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uni(mean: f64) -> GaussianModel {
        GaussianModel::univariate(mean, 1.0).unwrap()
    }

    /// Riemann sum of `p log(p/q)` on a fine grid.
    fn kl_by_quadrature(mp: f64, mq: f64) -> f64 {
        let (lo, hi, n) = (-20.0, 20.0, 400_000);
        let h = (hi - lo) / n as f64;
        (0..=n)
            .map(|i| {
                let x = lo + i as f64 * h;
                let lp = -0.5 * (x - mp).powi(2);
                let lq = -0.5 * (x - mq).powi(2);
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                w * h * normal_pdf(x - mp) * (lp - lq)
            })
            .sum()
    }

    #[test]
    fn kl_examples() {
        assert!((kl_gaussian(&uni(0.0), &uni(2.0)).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(kl_gaussian(&uni(0.0), &uni(0.0)).unwrap(), 0.0);
        let closed = kl_gaussian(&uni(0.0), &uni(0.5)).unwrap();
        assert!((closed - 0.125).abs() < 1e-15);
        assert!((kl_by_quadrature(0.0, 0.5) - closed).abs() < 1e-6);
    }

    #[test]
    fn kl_is_symmetric_in_shared_covariance_family() {
        let cov = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let p = GaussianModel::new(DVector::from_vec(vec![1.0, -1.0]), cov.clone()).unwrap();
        let q = GaussianModel::new(DVector::from_vec(vec![0.5, 2.0]), cov.clone()).unwrap();
        let a = kl_gaussian(&p, &q).unwrap();
        let b = kl_gaussian(&q, &p).unwrap();
        assert!((a - b).abs() < 1e-14);
        // Direct inverse as a second route.
        let inv = cov.try_inverse().unwrap();
        let diff = p.mean() - q.mean();
        let direct = 0.5 * (diff.transpose() * inv * &diff)[(0, 0)];
        assert!((a - direct).abs() < 1e-12);
    }

    #[test]
    fn kl_rejects_incomparable_models() {
        let p = uni(0.0);
        let q = GaussianModel::univariate(0.0, 2.0).unwrap();
        assert!(matches!(kl_gaussian(&p, &q), Err(Error::CovarianceMismatch { .. })));
        let r = GaussianModel::new(DVector::zeros(2), DMatrix::identity(2, 2)).unwrap();
        assert!(matches!(kl_gaussian(&p, &r), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn construction_checks_covariance() {
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(GaussianModel::new(DVector::zeros(2), asym).is_err());
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(GaussianModel::new(DVector::zeros(2), indefinite).is_err());
        assert!(GaussianModel::univariate(0.0, 0.0).is_err());
        assert!(GaussianModel::new(DVector::zeros(2), DMatrix::identity(3, 3)).is_err());
    }

    #[test]
    fn pooled_mle_examples() {
        let cov = DMatrix::identity(1, 1);
        let empty: Vec<[f64; 1]> = vec![];
        let m = pooled_mle(&empty, &[[1.0], [3.0]], cov.clone()).unwrap();
        assert_eq!(m.mean()[0], 2.0);
        let m = pooled_mle(&[[0.0], [0.0]], &[[3.0], [3.0]], cov.clone()).unwrap();
        assert_eq!(m.mean()[0], 1.5);
        let m = pooled_mle(&[[1.0]], &[[4.0], [4.0], [4.0]], cov.clone()).unwrap();
        assert_eq!(m.mean()[0], 3.25);
        assert!(matches!(
            pooled_mle(&empty, &empty, cov),
            Err(Error::EmptySample)
        ));
        assert_eq!(pooled_mean_1d(&[1.0], &[4.0, 4.0, 4.0]).unwrap(), 3.25);
        assert!(pooled_mean_1d(&[], &[]).is_err());
    }

    // Reference values computed with mpmath at 40 digits.
    const PHI_TABLE: &[(f64, f64)] = &[
        (-8.0, 6.220_960_574_271_784_1e-16),
        (-6.0, 9.865_876_450_376_981_4e-10),
        (-5.0, 2.866_515_718_791_939_1e-7),
        (-3.66, 1.261_076_241_384_866_7e-4),
        (-2.5, 6.209_665_325_776_135_2e-3),
        (-1.5, 0.066_807_201_268_858_066),
        (-1.0, 0.158_655_253_931_457_05),
        (-0.3, 0.382_088_577_811_047_37),
        (0.0, 0.5),
        (0.2, 0.579_259_709_439_103_03),
        (0.7, 0.758_036_347_776_926_97),
        (1.3, 0.903_199_515_414_389_67),
        (2.0, 0.977_249_868_051_820_79),
        (3.1, 0.999_032_396_786_781_64),
        (4.5, 0.999_996_602_326_875_27),
        (6.0, 0.999_999_999_013_412_35),
        (8.0, 0.999_999_999_999_999_38),
    ];

    #[test]
    fn normal_cdf_matches_high_precision_table() {
        for &(x, phi) in PHI_TABLE {
            assert!((normal_cdf(x) - phi).abs() < 1e-15, "x = {x}");
        }
    }

    #[test]
    fn normal_quantile_against_statrs() {
        use statrs::distribution::{ContinuousCDF, Normal};
        let n = Normal::new(0.0, 1.0).unwrap();
        for &p in &[1e-12, 1e-6, 0.01, 0.1, 0.3, 0.5, 0.75, 0.9, 0.975, 0.999, 1.0 - 1e-9] {
            let ours = normal_quantile(p).unwrap();
            let theirs = n.inverse_cdf(p);
            assert!((ours - theirs).abs() <= 1e-12 * theirs.abs().max(1.0), "p = {p}");
        }
        assert!(normal_quantile(0.0).is_err());
        assert!(normal_quantile(1.0).is_err());
    }

    #[test]
    fn g_folded_examples() {
        assert_eq!(g_folded(0.0, 0.0), 0.0);
        // 2 Phi(1.96) - 1 with Phi(1.96) = 0.9750021048517795 (high-precision table value).
        assert!((g_folded(1.96, 0.0) - (2.0 * 0.975_002_104_851_779_5 - 1.0)).abs() < 1e-14);
        let expected = normal_cdf(-1.0) + normal_cdf(3.0) - 1.0;
        assert!((g_folded(1.0, 2.0) - expected).abs() < 1e-15);
        for &k in &[0.0, 0.3, 2.0, 20.0] {
            assert_eq!(g_folded(0.0, k), 0.0);
        }
    }

    #[test]
    fn g_folded_monte_carlo() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let (u, kappa) = (1.0, 2.0);
        let c = (2.0_f64 * kappa).sqrt();
        let n = 10_000_000;
        let hits = (0..n)
            .filter(|_| {
                let x: f64 = StandardNormal.sample(&mut rng);
                (x - c).abs() <= u
            })
            .count();
        let mc = hits as f64 / n as f64;
        assert!((mc - g_folded(u, kappa)).abs() < 5e-4);
    }

    #[test]
    fn g_inverse_examples() {
        let p = 2.0 * normal_cdf(1.0) - 1.0;
        assert!((g_inverse(p, 0.0).unwrap() - 1.0).abs() < 1e-10);
        assert!((g_inverse(0.5, 0.0).unwrap() - 0.674_489_750_196_081_7).abs() < 1e-10);
        for &p in &[0.1, 0.5, 0.9] {
            for &k in &[0.0, 1.0, 5.0] {
                let u = g_inverse(p, k).unwrap();
                assert!((g_folded(u, k) - p).abs() < 1e-12, "p = {p}, kappa = {k}");
            }
        }
        assert!(g_inverse(0.0, 1.0).is_err());
        assert!(g_inverse(1.0, 1.0).is_err());
        assert!(g_inverse(0.5, -1.0).is_err());
    }

    #[test]
    fn folded_spec_validates() {
        assert!(FoldedNormalSpec::new(-1.0, 0.0).is_err());
        assert!(FoldedNormalSpec::new(1.0, -0.1).is_err());
        let s = FoldedNormalSpec::new(1.0, 2.0).unwrap();
        assert_eq!(s.cdf(), g_folded(1.0, 2.0));
    }
}
