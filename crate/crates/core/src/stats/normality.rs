use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};

use super::{mean, sample_variance};
use crate::{Error, Result};

/// Standard normal CDF, accurate in both tails.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalLevel {
    pub significance: f64,
    pub critical_value: f64,
    pub reject: bool,
}

/// Outcome of a goodness-of-fit or unit-root test.
///
/// `levels` is ordered from the loosest to the strictest significance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofTestResult {
    pub statistic: f64,
    pub p_value: Option<f64>,
    pub levels: Vec<CriticalLevel>,
    /// Set when the p-value ignores parameter estimation.
    pub approximate: bool,
    pub n: usize,
    /// Lag order used by the test regression, when there is one.
    pub lags: Option<usize>,
}

impl GofTestResult {
    pub fn rejects_at(&self, significance: f64) -> Option<bool> {
        self.levels
            .iter()
            .find(|l| (l.significance - significance).abs() < 1e-12)
            .map(|l| l.reject)
    }

    pub fn critical_value(&self, significance: f64) -> Option<f64> {
        self.levels
            .iter()
            .find(|l| (l.significance - significance).abs() < 1e-12)
            .map(|l| l.critical_value)
    }

    /// Rejection at a stricter level implies rejection at every looser one.
    pub fn is_monotone(&self) -> bool {
        self.levels.windows(2).all(|w| !w[1].reject || w[0].reject)
    }
}

pub(crate) const LEVELS: [f64; 3] = [0.10, 0.05, 0.01];

fn standardized_sorted(x: &[f64]) -> Result<Vec<f64>> {
    if x.len() < 8 {
        return Err(Error::InsufficientData {
            needed: 8,
            got: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(
            "non-finite value in normality test input".into(),
        ));
    }
    let m = mean(x);
    let sd = sample_variance(x).sqrt();
    if sd == 0.0 || !sd.is_finite() || super::is_constant(x) {
        return Err(Error::ZeroVariance("normality test input"));
    }
    let mut z: Vec<f64> = x.iter().map(|v| (v - m) / sd).collect();
    z.sort_by(f64::total_cmp);
    Ok(z)
}

/// Survival function of the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample KS test against a normal with the sample mean and variance.
///
/// The p-value comes from the Kolmogorov limit law and ignores that the
/// parameters were estimated, so it is marked approximate.
pub fn ks_test_normal(x: &[f64]) -> Result<GofTestResult> {
    let z = standardized_sorted(x)?;
    let n = z.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &v) in z.iter().enumerate() {
        let f = normal_cdf(v);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let scale = n.sqrt() + 0.12 + 0.11 / n.sqrt();
    let p = kolmogorov_survival(scale * d);
    let levels = LEVELS
        .iter()
        .map(|&a| {
            let cv = kolmogorov_quantile(a) / scale;
            CriticalLevel {
                significance: a,
                critical_value: cv,
                reject: d > cv,
            }
        })
        .collect();
    Ok(GofTestResult {
        statistic: d,
        p_value: Some(p),
        levels,
        approximate: true,
        n: z.len(),
        lags: None,
    })
}

/// Upper quantile of the Kolmogorov distribution by bisection.
fn kolmogorov_quantile(alpha: f64) -> f64 {
    let (mut lo, mut hi) = (0.2, 5.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if kolmogorov_survival(mid) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Asymptotic AD critical points for the normal case with estimated mean and variance.
const AD_ASYMPTOTIC: [(f64, f64); 3] = [(0.10, 0.656), (0.05, 0.787), (0.01, 1.092)];

/// Anderson–Darling normality test with estimated mean and variance.
///
/// `statistic` is the raw A². Critical values are the asymptotic points divided by
/// `1 + 4/N - 25/N²`. The p-value uses the modified statistic
/// `A²·(1 + 0.75/N + 2.25/N²)`.
pub fn anderson_darling_normal(x: &[f64]) -> Result<GofTestResult> {
    let z = standardized_sorted(x)?;
    let n = z.len();
    let nf = n as f64;
    let mut s = 0.0;
    for i in 0..n {
        let lower = normal_cdf(z[i]).max(f64::MIN_POSITIVE).ln();
        let upper = normal_cdf(-z[n - 1 - i]).max(f64::MIN_POSITIVE).ln();
        s += (2.0 * i as f64 + 1.0) * (lower + upper);
    }
    let a2 = -nf - s / nf;
    let adjust = 1.0 + 4.0 / nf - 25.0 / (nf * nf);
    let levels = AD_ASYMPTOTIC
        .iter()
        .map(|&(a, c)| {
            let cv = c / adjust;
            CriticalLevel {
                significance: a,
                critical_value: cv,
                reject: a2 > cv,
            }
        })
        .collect();
    let modified = a2 * (1.0 + 0.75 / nf + 2.25 / (nf * nf));
    Ok(GofTestResult {
        statistic: a2,
        p_value: Some(ad_p_value(modified)),
        levels,
        approximate: false,
        n,
        lags: None,
    })
}

/// D'Agostino–Stephens approximation for the modified normal-case statistic.
fn ad_p_value(a: f64) -> f64 {
    let p = if a >= 0.6 {
        (1.2937 - 5.709 * a + 0.0186 * a * a).exp()
    } else if a >= 0.34 {
        (0.9177 - 4.279 * a - 1.38 * a * a).exp()
    } else if a >= 0.2 {
        1.0 - (-8.318 + 42.796 * a - 59.938 * a * a).exp()
    } else {
        1.0 - (-13.436 + 101.14 * a - 223.73 * a * a).exp()
    };
    p.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal, StudentT};

    fn sample<D: Distribution<f64>>(d: D, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
        (0..n).map(|_| d.sample(&mut rng)).collect()
    }

    #[test]
    fn normal_helpers() {
        assert!((normal_cdf(1.959963984540054) - 0.975).abs() < 1e-10);
        assert!((normal_quantile(0.975) - 1.959963984540054).abs() < 1e-9);
        assert!(normal_cdf(-37.0) > 0.0);
    }

    #[test]
    fn kolmogorov_reference_points() {
        // Tabulated asymptotic critical values.
        assert!((kolmogorov_quantile(0.05) - 1.3581).abs() < 1e-3);
        assert!((kolmogorov_quantile(0.01) - 1.6276).abs() < 1e-3);
        assert!((kolmogorov_survival(1.0) - 0.26999967).abs() < 1e-6);
    }

    #[test]
    fn ad_critical_values_large_n() {
        let x = sample(StandardNormal, 100_000, 11);
        let r = anderson_darling_normal(&x).unwrap();
        for (a, c) in [(0.10, 0.656), (0.05, 0.787), (0.01, 1.092)] {
            assert!((r.critical_value(a).unwrap() - c).abs() < 1e-3);
        }
        assert!(r.is_monotone());
    }

    #[test]
    fn ad_p_value_matches_modified_statistic_points() {
        // Upper points of the modified statistic A²(1 + 0.75/N + 2.25/N²).
        assert!((ad_p_value(0.752) - 0.05).abs() < 0.002);
        assert!((ad_p_value(1.035) - 0.01).abs() < 0.001);
    }

    #[test]
    fn gaussian_rarely_rejected() {
        let mut ks_ok = 0;
        let mut ad_ok = 0;
        for seed in 0..20 {
            let x = sample(StandardNormal, 100_000, 100 + seed);
            ks_ok += usize::from(!ks_test_normal(&x).unwrap().rejects_at(0.05).unwrap());
            ad_ok += usize::from(
                !anderson_darling_normal(&x)
                    .unwrap()
                    .rejects_at(0.01)
                    .unwrap(),
            );
        }
        assert!(ks_ok >= 18, "KS kept {ks_ok}/20");
        assert!(ad_ok >= 18, "AD kept {ad_ok}/20");
    }

    #[test]
    fn student_t_rejected() {
        let x = sample(StudentT::new(3.0).unwrap(), 10_000, 7);
        assert!(ks_test_normal(&x).unwrap().rejects_at(0.01).unwrap());
        assert!(anderson_darling_normal(&x)
            .unwrap()
            .rejects_at(0.01)
            .unwrap());
    }

    #[test]
    fn errors() {
        assert!(matches!(
            ks_test_normal(&[1.0; 10]),
            Err(Error::ZeroVariance(_))
        ));
        assert!(matches!(
            anderson_darling_normal(&[1.0; 10]),
            Err(Error::ZeroVariance(_))
        ));
        assert!(matches!(
            ks_test_normal(&[1.0, 2.0]),
            Err(Error::InsufficientData { .. })
        ));
    }

    proptest! {
        #[test]
        fn affine_invariant(x in prop::collection::vec(-100f64..100.0, 8..200), b in -50f64..50.0) {
            prop_assume!(x.iter().any(|v| (v - x[0]).abs() > 1e-2));
            let y: Vec<f64> = x.iter().map(|v| 4.0 * v + b).collect();
            let (kx, ky) = (ks_test_normal(&x).unwrap(), ks_test_normal(&y).unwrap());
            prop_assert!((kx.statistic - ky.statistic).abs() < 1e-9);
            let (ax, ay) = (anderson_darling_normal(&x).unwrap(), anderson_darling_normal(&y).unwrap());
            prop_assert!((ax.statistic - ay.statistic).abs() < 1e-8 * ax.statistic.max(1.0));
            prop_assert!(kx.is_monotone() && ax.is_monotone());
        }
    }
}
