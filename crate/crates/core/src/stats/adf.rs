use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::normality::{normal_cdf, CriticalLevel, GofTestResult, LEVELS};
use crate::linalg::spd_solve;
use crate::{Error, Result};

/// How the augmentation lag order of the ADF regression is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AdfLagPolicy {
    /// Minimise AIC over lags up to `⌊12 (N/100)^{1/4}⌋`.
    #[default]
    Aic,
    /// Minimise AIC over lags up to the given bound.
    AicUpTo(usize),
    Fixed(usize),
}

/// Response-surface coefficients for the constant-only Dickey–Fuller distribution,
/// one row per significance level: `τ∞, β1, β2, β3`.
const CRIT_SURFACE: [(f64, [f64; 4]); 3] = [
    (0.10, [-2.56677, -1.5384, -2.809, 0.0]),
    (0.05, [-2.86154, -2.8903, -4.234, -40.040]),
    (0.01, [-3.43035, -6.5393, -16.786, -79.433]),
];

pub fn mackinnon_critical_value(significance: f64, nobs: usize) -> Option<f64> {
    let t = nobs as f64;
    CRIT_SURFACE
        .iter()
        .find(|(a, _)| (a - significance).abs() < 1e-12)
        .map(|(_, b)| b[0] + b[1] / t + b[2] / (t * t) + b[3] / (t * t * t))
}

/// Approximate asymptotic p-value for the constant-only ADF statistic.
pub fn mackinnon_p_value(tau: f64) -> f64 {
    const TAU_MAX: f64 = 2.74;
    const TAU_MIN: f64 = -18.83;
    const TAU_STAR: f64 = -1.61;
    const SMALL: [f64; 3] = [2.1659, 1.4412, 0.038269];
    const LARGE: [f64; 4] = [1.7339, 0.93202, -0.12745, -0.010368];
    if tau > TAU_MAX {
        return 1.0;
    }
    if tau < TAU_MIN {
        return 0.0;
    }
    let coef: &[f64] = if tau <= TAU_STAR { &SMALL } else { &LARGE };
    let z = coef.iter().rev().fold(0.0, |acc, c| acc * tau + c);
    normal_cdf(z)
}

#[derive(Clone, Copy)]
enum Col {
    One,
    Level,
    /// `Δy` lagged by `j`; `Diff(0)` is the regressand.
    Diff(usize),
}

/// Cross-product matrix of `[1, y_i, Δy_{i-1}, …, Δy_{i-p}, Δy_i]` over `i ∈ [lo, hi]`.
///
/// `d[i] = y[i+1] - y[i]`. Products of lagged differences reuse one running sum per
/// lag distance, so the cost is linear in `N·p`.
fn cross_products(y: &[f64], d: &[f64], p: usize, lo: usize, hi: usize) -> DMatrix<f64> {
    let mut cols = vec![Col::One, Col::Level];
    cols.extend((1..=p).map(Col::Diff));
    cols.push(Col::Diff(0));
    let k = cols.len();

    // lagprod[q][s] = Σ_{u=q}^{s-1} d_u d_{u-q}
    let lagprod: Vec<Vec<f64>> = (0..=p)
        .map(|q| {
            let mut pre = vec![0.0; hi + 2];
            for s in 0..=hi {
                pre[s + 1] = pre[s] + if s >= q { d[s] * d[s - q] } else { 0.0 };
            }
            pre
        })
        .collect();
    let window = lo..=hi;
    let sum_level: f64 = window.clone().map(|i| y[i]).sum();
    let sum_level_sq: f64 = window.clone().map(|i| y[i] * y[i]).sum();
    let sum_diff: Vec<f64> = (0..=p)
        .map(|j| window.clone().map(|i| d[i - j]).sum())
        .collect();
    let level_diff: Vec<f64> = (0..=p)
        .map(|j| window.clone().map(|i| y[i] * d[i - j]).sum())
        .collect();

    let entry = |a: Col, b: Col| -> f64 {
        match (a, b) {
            (Col::One, Col::One) => (hi - lo + 1) as f64,
            (Col::One, Col::Level) | (Col::Level, Col::One) => sum_level,
            (Col::One, Col::Diff(j)) | (Col::Diff(j), Col::One) => sum_diff[j],
            (Col::Level, Col::Level) => sum_level_sq,
            (Col::Level, Col::Diff(j)) | (Col::Diff(j), Col::Level) => level_diff[j],
            (Col::Diff(j), Col::Diff(m)) => {
                let (j, m) = (j.min(m), j.max(m));
                // Σ_i d_{i-j} d_{i-m} = Σ_{s=lo-j}^{hi-j} d_s d_{s-(m-j)}
                let pre = &lagprod[m - j];
                pre[hi - j + 1] - pre[lo - j]
            }
        }
    };
    DMatrix::from_fn(k, k, |r, c| entry(cols[r], cols[c]))
}

struct LagFit {
    coef: Vec<f64>,
    inverse: DMatrix<f64>,
    rss: f64,
    nobs: usize,
}

fn fit_block(m: &DMatrix<f64>, size: usize, nobs: usize) -> Option<LagFit> {
    let k = m.nrows() - 1;
    let xtx = m.view((0, 0), (size, size)).into_owned();
    let xty: Vec<f64> = (0..size).map(|r| m[(r, k)]).collect();
    let (coef, inverse) = spd_solve(xtx, &xty)?;
    let explained: f64 = coef.iter().zip(&xty).map(|(b, v)| b * v).sum();
    let rss = m[(k, k)] - explained;
    let scale = m[(k, k)].abs().max(f64::MIN_POSITIVE);
    if !(rss > 1e-13 * scale) {
        return None;
    }
    Some(LagFit {
        coef,
        inverse,
        rss,
        nobs,
    })
}

/// Augmented Dickey–Fuller test with a constant and no trend.
///
/// `statistic` is the t-ratio of the lagged level; rejection means the series is
/// judged stationary.
pub fn adf_test(x: &[f64], policy: AdfLagPolicy) -> Result<GofTestResult> {
    let n = x.len();
    if n < 50 {
        return Err(Error::InsufficientData { needed: 50, got: n });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite value in ADF input".into()));
    }
    // Centring changes only the intercept.
    let m = super::mean(x);
    let y: Vec<f64> = x.iter().map(|v| v - m).collect();
    let d: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    let hi = d.len() - 1;
    let room = (d.len() / 2).saturating_sub(3);
    let schwert = (12.0 * (n as f64 / 100.0).powf(0.25)).floor() as usize;
    let degenerate = || Error::DegenerateRegression("ADF regression matrix is singular".into());

    let lag = match policy {
        AdfLagPolicy::Fixed(p) => {
            if p > room {
                return Err(Error::InvalidInput(format!(
                    "ADF lag {p} too large for {n} points"
                )));
            }
            p
        }
        AdfLagPolicy::Aic | AdfLagPolicy::AicUpTo(_) => {
            let cap = match policy {
                AdfLagPolicy::AicUpTo(c) => c,
                _ => schwert,
            };
            let pmax = cap.min(room);
            let cp = cross_products(&y, &d, pmax, pmax, hi);
            let nobs = hi - pmax + 1;
            let mut best: Option<(f64, usize)> = None;
            for p in 0..=pmax {
                let k = p + 2;
                let mut cols: Vec<usize> = (0..k).collect();
                cols.push(pmax + 2);
                let sub = cp.select_rows(&cols).select_columns(&cols);
                let Some(fit) = fit_block(&sub, k, nobs) else {
                    continue;
                };
                let aic = nobs as f64 * (fit.rss / nobs as f64).ln() + 2.0 * k as f64;
                if best.is_none_or(|(b, _)| aic < b) {
                    best = Some((aic, p));
                }
            }
            best.ok_or_else(degenerate)?.1
        }
    };

    let cp = cross_products(&y, &d, lag, lag, hi);
    let nobs = hi - lag + 1;
    let k = lag + 2;
    let fit = fit_block(&cp, k, nobs).ok_or_else(degenerate)?;
    let s2 = fit.rss / (fit.nobs - k) as f64;
    let se = (s2 * fit.inverse[(1, 1)]).sqrt();
    if !(se > 0.0 && se.is_finite()) {
        return Err(degenerate());
    }
    let tau = fit.coef[1] / se;
    let levels = LEVELS
        .iter()
        .map(|&a| {
            let cv = mackinnon_critical_value(a, nobs).expect("tabulated level");
            CriticalLevel {
                significance: a,
                critical_value: cv,
                reject: tau < cv,
            }
        })
        .collect();
    Ok(GofTestResult {
        statistic: tau,
        p_value: Some(mackinnon_p_value(tau)),
        levels,
        approximate: false,
        n,
        lags: Some(lag),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ols;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    fn ar1(phi: f64, n: usize, seed: u64) -> Vec<f64> {
        let e = noise(n, seed);
        let mut x = vec![0.0; n];
        for t in 1..n {
            x[t] = phi * x[t - 1] + e[t];
        }
        x
    }

    #[test]
    fn mackinnon_surface() {
        assert!((mackinnon_p_value(-2.86) - 0.05).abs() < 0.002);
        assert!((mackinnon_p_value(-3.43) - 0.01).abs() < 0.001);
        assert!((mackinnon_critical_value(0.05, 1_000_000).unwrap() + 2.8615).abs() < 1e-3);
        assert_eq!(mackinnon_p_value(5.0), 1.0);
        assert_eq!(mackinnon_p_value(-25.0), 0.0);
    }

    #[test]
    fn matches_direct_regression() {
        let x = ar1(0.7, 400, 3);
        let p = 3;
        let r = adf_test(&x, AdfLagPolicy::Fixed(p)).unwrap();
        let d: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let rows: Vec<usize> = (p..d.len()).collect();
        let target: Vec<f64> = rows.iter().map(|&i| d[i]).collect();
        let one = vec![1.0; rows.len()];
        let level: Vec<f64> = rows.iter().map(|&i| x[i]).collect();
        let lags: Vec<Vec<f64>> = (1..=p)
            .map(|j| rows.iter().map(|&i| d[i - j]).collect())
            .collect();
        let mut cols: Vec<&[f64]> = vec![&one, &level];
        cols.extend(lags.iter().map(|v| v.as_slice()));
        let fit = ols(&cols, &target).unwrap();
        assert!((r.statistic - fit.coef[1] / fit.se[1]).abs() < 1e-8);
    }

    #[test]
    fn random_walk_not_rejected() {
        let mut kept = 0;
        for seed in 0..20 {
            let e = noise(10_000, 50 + seed);
            let mut s = 0.0;
            let x: Vec<f64> = e
                .iter()
                .map(|v| {
                    s += v;
                    s
                })
                .collect();
            let r = adf_test(&x, AdfLagPolicy::Aic).unwrap();
            assert!(r.is_monotone());
            kept += usize::from(!r.rejects_at(0.05).unwrap());
        }
        assert!(kept >= 18, "kept {kept}/20");
    }

    #[test]
    fn stationary_ar_rejected() {
        for seed in 0..10 {
            let r = adf_test(&ar1(0.5, 10_000, 90 + seed), AdfLagPolicy::Aic).unwrap();
            assert!(r.rejects_at(0.01).unwrap());
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(
            adf_test(&[3.0; 100], AdfLagPolicy::Aic),
            Err(Error::DegenerateRegression(_))
        ));
        assert!(matches!(
            adf_test(&[1.0; 20], AdfLagPolicy::Aic),
            Err(Error::InsufficientData { .. })
        ));
    }
}
