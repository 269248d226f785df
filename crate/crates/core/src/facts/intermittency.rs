use serde::{Deserialize, Serialize};

use super::bootstrap::quantile;
use super::returns::acf_curve;
use super::{inconclusive_from, Curve, FactConfig, FactId, FactVerdict};
use crate::fitting::{fit_garch11, fit_ou};
use crate::series::{compute_log_returns, PriceSeries};
use crate::simulate::{simulate, simulate_ou_levels, ModelParams, SimSpec};
use crate::stats::{adf_test, estimate_acf, AdfLagPolicy};
use crate::{Error, Result};

/// Quantile levels at which volatility excursions are profiled.
pub const EXCURSION_LEVELS: [f64; 7] = [0.01, 0.05, 0.25, 0.50, 0.90, 0.95, 0.99];

/// Lengths of the maximal runs of consecutive values strictly above `threshold`,
/// in order of appearance.
pub fn excursion_lengths(x: &[f64], threshold: f64) -> Vec<usize> {
    let mut out = Vec::new();
    let mut run = 0;
    for &v in x {
        if v > threshold {
            run += 1;
        } else if run > 0 {
            out.push(run);
            run = 0;
        }
    }
    if run > 0 {
        out.push(run);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcursionProfile {
    pub level: f64,
    pub threshold: f64,
    pub count: usize,
    pub mean_length: f64,
    pub max_length: usize,
}

fn excursion_profiles(x: &[f64]) -> Vec<ExcursionProfile> {
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    EXCURSION_LEVELS
        .iter()
        .map(|&level| {
            let threshold = quantile(&sorted, level);
            let runs = excursion_lengths(x, threshold);
            let total: usize = runs.iter().sum();
            ExcursionProfile {
                level,
                threshold,
                count: runs.len(),
                mean_length: if runs.is_empty() {
                    0.0
                } else {
                    total as f64 / runs.len() as f64
                },
                max_length: runs.iter().copied().max().unwrap_or(0),
            }
        })
        .collect()
}

/// Sample standard deviation of each run of `n` consecutive returns.
fn rolling_std(returns: &[f64], n: usize) -> Vec<f64> {
    returns
        .windows(n)
        .map(|w| {
            let m = w.iter().sum::<f64>() / n as f64;
            (w.iter().map(|r| (r - m) * (r - m)).sum::<f64>() / (n - 1) as f64).sqrt()
        })
        .collect()
}

const CDF_POINTS: usize = 200;

fn cdf(sorted: &[f64], v: f64) -> f64 {
    sorted.partition_point(|&x| x <= v) as f64 / sorted.len() as f64
}

/// Mean of `|F_data − F_model|` over the data values above the data median.
fn upper_cdf_distance(data_sorted: &[f64], model_sorted: &[f64]) -> f64 {
    let upper = &data_sorted[data_sorted.len() / 2..];
    upper
        .iter()
        .map(|&v| (cdf(data_sorted, v) - cdf(model_sorted, v)).abs())
        .sum::<f64>()
        / upper.len() as f64
}

fn sorted(mut x: Vec<f64>) -> Vec<f64> {
    x.sort_by(f64::total_cmp);
    x
}

/// Longest suffix of `N, N/2, N/4, …` returns whose rolling volatility the ADF
/// test judges stationary, with the test result.
fn stationary_segment(
    returns: &[f64],
    window: usize,
    cfg: &super::F3Config,
) -> Result<Option<(usize, f64, f64)>> {
    let mut len = returns.len();
    let mut tried = false;
    while len >= cfg.min_segment.max(window + 50) {
        let vol = rolling_std(&returns[returns.len() - len..], window);
        tried = true;
        let adf = adf_test(&vol, AdfLagPolicy::Aic)?;
        let rejects = adf
            .rejects_at(cfg.adf_level)
            .unwrap_or_else(|| adf.p_value.is_some_and(|p| p < cfg.adf_level));
        if rejects {
            return Ok(Some((len, adf.statistic, adf.p_value.unwrap_or(f64::NAN))));
        }
        len /= 2;
    }
    if !tried {
        return Err(Error::InsufficientData {
            needed: cfg.min_segment.max(window + 50),
            got: returns.len(),
        });
    }
    Ok(None)
}

/// F3: bursts of volatility that a fitted GARCH reproduces markedly better than
/// a fitted Ornstein–Uhlenbeck benchmark.
pub fn test_intermittency(series: &PriceSeries, config: &FactConfig) -> FactVerdict {
    let fact = FactId::F3;
    let cfg = &config.f3;
    let returns = match compute_log_returns(series) {
        Ok(r) => r.values,
        Err(e) => return inconclusive_from(fact, series.len(), &e),
    };
    let n = returns.len();
    let window = config.window_for(series).max(2);
    let (len, adf_stat, adf_p) = match stationary_segment(&returns, window, cfg) {
        Ok(Some(s)) => s,
        Ok(None) => {
            return FactVerdict::inconclusive(fact, n, "no segment with stationary volatility")
        }
        Err(e) => return inconclusive_from(fact, n, &e),
    };
    let segment = &returns[n - len..];
    let log_closes: Vec<f64> = series.closes()[n - len..].iter().map(|c| c.ln()).collect();

    let garch = match fit_garch11(segment) {
        Ok(f) => f,
        Err(e) => return inconclusive_from(fact, n, &e),
    };
    let ou = match fit_ou(&log_closes) {
        Ok(p) => p,
        Err(e) => return inconclusive_from(fact, n, &e),
    };
    let garch_returns = match simulate(&SimSpec::new(
        ModelParams::Garch11(garch.params),
        len,
        config.seed_for("f3-garch"),
    )) {
        Ok(out) => match compute_log_returns(&out.prices) {
            Ok(r) => r.values,
            Err(e) => return inconclusive_from(fact, n, &e),
        },
        Err(e) => return inconclusive_from(fact, n, &e),
    };
    let ou_returns: Vec<f64> =
        match simulate_ou_levels(&ou, len + 1, Some(log_closes[0]), config.seed_for("f3-ou")) {
            Ok(levels) => levels.windows(2).map(|w| w[1] - w[0]).collect(),
            Err(e) => return inconclusive_from(fact, n, &e),
        };

    let data_vol = rolling_std(segment, window);
    let data_sorted = sorted(data_vol.clone());
    let garch_sorted = sorted(rolling_std(&garch_returns, window));
    let ou_sorted = sorted(rolling_std(&ou_returns, window));
    let d_garch = upper_cdf_distance(&data_sorted, &garch_sorted);
    let d_ou = upper_cdf_distance(&data_sorted, &ou_sorted);

    let mut v = FactVerdict::new(fact);
    v.metric("n", n as f64);
    v.metric("window", window as f64);
    v.metric("segment_length", len as f64);
    v.metric("adf_statistic", adf_stat);
    v.metric("adf_p_value", adf_p);
    v.metric("garch_omega", garch.params.omega);
    v.metric("garch_alpha", garch.params.alpha);
    v.metric("garch_beta", garch.params.beta);
    v.metric("ou_theta", ou.theta);
    v.metric("ou_sigma", ou.sigma);
    v.metric("distance_garch", d_garch);
    v.metric("distance_ou", d_ou);
    v.metric("distance_ratio", cfg.distance_ratio);

    let mut cdf_curve = Curve::new("cdf_comparison", &["volatility", "data", "garch", "ou"]);
    for i in 0..=CDF_POINTS {
        let x = quantile(&data_sorted, i as f64 / CDF_POINTS as f64);
        cdf_curve.push(vec![
            x,
            cdf(&data_sorted, x),
            cdf(&garch_sorted, x),
            cdf(&ou_sorted, x),
        ]);
    }
    v.curves.push(cdf_curve);

    let mut profile_curve = Curve::new(
        "excursions",
        &["level", "threshold", "count", "mean_length", "max_length"],
    );
    for p in excursion_profiles(&data_vol) {
        let pct = (p.level * 100.0).round();
        v.metric(&format!("excursion_mean_length_q{pct}"), p.mean_length);
        profile_curve.push(vec![
            p.level,
            p.threshold,
            p.count as f64,
            p.mean_length,
            p.max_length as f64,
        ]);
    }
    v.curves.push(profile_curve);
    let max_lag = cfg.vol_acf_max_lag.min(data_vol.len() / 4);
    if max_lag > 0 {
        if let Ok(acf) = estimate_acf(&data_vol, max_lag, 0.95) {
            let mid = acf.lags.len() / 2;
            v.metric(&format!("vol_acf_lag{}", acf.lags[mid]), acf.values[mid]);
            v.curves.push(acf_curve("acf_rolling_vol", &acf));
        }
    }
    v.decide(d_garch < cfg.distance_ratio * d_ou)
}
