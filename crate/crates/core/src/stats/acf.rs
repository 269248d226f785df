use serde::{Deserialize, Serialize};

use super::{mean, z_for_confidence};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcfEstimate {
    /// Lags `1..=max_lag`; lag 0 is implicitly 1.
    pub lags: Vec<usize>,
    pub values: Vec<f64>,
    pub bartlett_se: Vec<f64>,
    pub confidence_level: f64,
}

impl AcfEstimate {
    /// Half-width of the confidence band at position `i` (lag `lags[i]`).
    pub fn band(&self, i: usize) -> f64 {
        z_for_confidence(self.confidence_level) * self.bartlett_se[i]
    }

    pub fn value_at(&self, lag: usize) -> Option<f64> {
        if lag == 0 {
            return Some(1.0);
        }
        self.lags
            .iter()
            .position(|&l| l == lag)
            .map(|i| self.values[i])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCorrEstimate {
    pub lags: Vec<i64>,
    pub values: Vec<f64>,
    pub se: Vec<f64>,
    pub confidence_level: f64,
}

impl CrossCorrEstimate {
    pub fn band(&self, i: usize) -> f64 {
        z_for_confidence(self.confidence_level) * self.se[i]
    }
}

fn check_confidence(confidence_level: f64) -> Result<()> {
    if !(confidence_level > 0.0 && confidence_level < 1.0) {
        return Err(Error::InvalidInput(format!(
            "confidence level {confidence_level} outside (0, 1)"
        )));
    }
    Ok(())
}

/// Sample autocorrelation at lags `1..=max_lag` with Bartlett standard errors.
///
/// Auto-covariances are normalised by `N - 1` at every lag; the factor cancels in
/// the ratio, so only the sums over the shrinking overlap matter.
pub fn estimate_acf(x: &[f64], max_lag: usize, confidence_level: f64) -> Result<AcfEstimate> {
    check_confidence(confidence_level)?;
    if max_lag == 0 {
        return Err(Error::InvalidInput("max_lag must be at least 1".into()));
    }
    let n = x.len();
    if n <= max_lag + 1 {
        return Err(Error::InsufficientData {
            needed: max_lag + 2,
            got: n,
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite value in ACF input".into()));
    }
    let m = mean(x);
    let d: Vec<f64> = x.iter().map(|v| v - m).collect();
    let norm = 1.0 / (n as f64 - 1.0);
    let c0 = d.iter().map(|v| v * v).sum::<f64>() * norm;
    if c0 == 0.0 || super::is_constant(x) {
        return Err(Error::ZeroVariance("ACF input"));
    }
    let mut values = Vec::with_capacity(max_lag);
    let mut bartlett_se = Vec::with_capacity(max_lag);
    let mut sum_sq = 0.0;
    for l in 1..=max_lag {
        let cl = d[..n - l]
            .iter()
            .zip(&d[l..])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * norm;
        let rho = cl / c0;
        bartlett_se.push(((1.0 + 2.0 * sum_sq) / n as f64).sqrt());
        sum_sq += rho * rho;
        values.push(rho);
    }
    Ok(AcfEstimate {
        lags: (1..=max_lag).collect(),
        values,
        bartlett_se,
        confidence_level,
    })
}

/// `Corr(x_t, y_{t+l})` over the overlapping pairs, for each lag in `lags`.
pub fn estimate_cross_correlation(
    x: &[f64],
    y: &[f64],
    lags: &[i64],
    confidence_level: f64,
) -> Result<CrossCorrEstimate> {
    check_confidence(confidence_level)?;
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "lengths differ: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    let max_abs = lags
        .iter()
        .map(|l| l.unsigned_abs() as usize)
        .max()
        .unwrap_or(0);
    if n <= max_abs + 1 {
        return Err(Error::InsufficientData {
            needed: max_abs + 2,
            got: n,
        });
    }
    if super::is_constant(x) {
        return Err(Error::ZeroVariance("x"));
    }
    if super::is_constant(y) {
        return Err(Error::ZeroVariance("y"));
    }
    let mut values = Vec::with_capacity(lags.len());
    let mut se = Vec::with_capacity(lags.len());
    for &l in lags {
        let k = l.unsigned_abs() as usize;
        let (xs, ys) = if l >= 0 {
            (&x[..n - k], &y[k..])
        } else {
            (&x[k..], &y[..n - k])
        };
        let value = match super::pearson_correlation(xs, ys) {
            Ok(v) => v,
            // A constant overlap carries no linear association.
            Err(Error::ZeroVariance(_)) => 0.0,
            Err(e) => return Err(e),
        };
        values.push(value);
        se.push(1.0 / (xs.len() as f64).sqrt());
    }
    Ok(CrossCorrEstimate {
        lags: lags.to_vec(),
        values,
        se,
        confidence_level,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn brute_acf(x: &[f64], l: usize) -> f64 {
        let n = x.len();
        let m = x.iter().sum::<f64>() / n as f64;
        let mut num = 0.0;
        let mut den = 0.0;
        for t in 0..n {
            den += (x[t] - m) * (x[t] - m);
            if t + l < n {
                num += (x[t] - m) * (x[t + l] - m);
            }
        }
        (num / (n as f64 - 1.0)) / (den / (n as f64 - 1.0))
    }

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn white_noise_band() {
        let n = 100_000;
        let x = noise(n, 1);
        let acf = estimate_acf(&x, 50, 0.95).unwrap();
        assert_eq!(acf.value_at(0), Some(1.0));
        assert!((acf.bartlett_se[0] - 1.0 / (n as f64).sqrt()).abs() < 1e-12);
        let inside = acf
            .values
            .iter()
            .filter(|v| v.abs() <= 1.96 / (n as f64).sqrt())
            .count();
        assert!(inside >= 44, "{inside} of 50 inside");
    }

    #[test]
    fn ar1_matches_geometric_decay() {
        let e = noise(100_000, 2);
        let mut x = vec![0.0; e.len()];
        for t in 1..e.len() {
            x[t] = 0.5 * x[t - 1] + e[t];
        }
        let acf = estimate_acf(&x, 10, 0.95).unwrap();
        for (i, &l) in acf.lags.iter().enumerate() {
            let expect = 0.5f64.powi(l as i32);
            assert!(
                (acf.values[i] - expect).abs() < 3.0 * acf.bartlett_se[i],
                "lag {l}"
            );
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(
            estimate_acf(&[1.0; 20], 3, 0.95),
            Err(Error::ZeroVariance(_))
        ));
        assert!(matches!(
            estimate_acf(&[1.0, 2.0, 3.0], 2, 0.95),
            Err(Error::InsufficientData { .. })
        ));
        assert!(estimate_acf(&[1.0, 2.0, 3.0, 5.0], 0, 0.95).is_err());
        assert!(estimate_acf(&[1.0, 2.0, 3.0, 5.0], 1, 1.0).is_err());
        assert!(estimate_cross_correlation(&[1.0, 2.0, 3.0], &[1.0; 3], &[0], 0.95).is_err());
    }

    #[test]
    fn cross_correlation_examples() {
        let x = noise(1000, 3);
        let c = estimate_cross_correlation(&x, &x, &[0], 0.95).unwrap();
        assert!((c.values[0] - 1.0).abs() < 1e-12);
        let mut y = vec![0.0; x.len()];
        for t in 1..x.len() {
            y[t] = -x[t - 1];
        }
        let c = estimate_cross_correlation(&x, &y, &[-1, 0, 1], 0.95).unwrap();
        assert!((c.values[2] + 1.0).abs() < 1e-12);
        assert!((c.se[2] - 1.0 / 999f64.sqrt()).abs() < 1e-15);

        let n = 100_000;
        let (a, b) = (noise(n, 4), noise(n, 5));
        let lags: Vec<i64> = (-20..=20).collect();
        let c = estimate_cross_correlation(&a, &b, &lags, 0.95).unwrap();
        let inside = (0..lags.len())
            .filter(|&i| c.values[i].abs() <= c.band(i))
            .count();
        assert!(inside >= 36, "{inside} of 41 inside");
    }

    proptest! {
        #[test]
        fn matches_brute_force(x in prop::collection::vec(-1e3f64..1e3, 12..300), lag in 1usize..10) {
            prop_assume!(x.iter().any(|v| (v - x[0]).abs() > 1e-6));
            let acf = estimate_acf(&x, lag, 0.95).unwrap();
            for l in 1..=lag {
                prop_assert!((acf.values[l - 1] - brute_acf(&x, l)).abs() < 1e-12);
            }
            for v in &acf.values {
                prop_assert!(v.abs() <= 1.0 + 1e-9);
            }
        }

        #[test]
        fn affine_invariant(x in prop::collection::vec(-10f64..10.0, 20..200),
                            a in prop::sample::select(vec![-4.0, -0.5, 0.25, 2.0, 8.0]),
                            b in -5f64..5.0) {
            prop_assume!(x.iter().any(|v| (v - x[0]).abs() > 1e-3));
            let y: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            let ax = estimate_acf(&x, 5, 0.95).unwrap();
            let ay = estimate_acf(&y, 5, 0.95).unwrap();
            for (u, v) in ax.values.iter().zip(&ay.values) {
                prop_assert!((u - v).abs() < 1e-12);
            }
        }
    }
}
