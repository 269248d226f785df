use super::bootstrap::{circular_block_indices, default_block_length, quantile};
use super::returns::acf_curve;
use super::{first_lag_inside, inconclusive_from, Curve, FactConfig, FactId, FactVerdict};
use crate::rng::stream;
use crate::series::{compute_log_returns, PriceSeries};
use crate::stats::{estimate_acf, estimate_cross_correlation, is_constant, pearson_correlation};
use crate::volatility::{rolling_volatility, VolScale, VolatilityEstimatorKind, VolatilityWindow};

/// F4: block volatility stays autocorrelated for the first `k0` window lags
/// under every estimator that carries information.
pub fn test_volatility_clustering(series: &PriceSeries, config: &FactConfig) -> FactVerdict {
    let fact = FactId::F4;
    let cfg = &config.f4;
    let n = series.len().saturating_sub(1);
    let window = config.window_for(series);
    let mut v = FactVerdict::new(fact);
    v.metric("n", n as f64);
    v.metric("window", window as f64);
    let mut supported = true;
    let mut used = 0;
    for kind in VolatilityEstimatorKind::ALL {
        let vol = match rolling_volatility(
            series,
            kind,
            VolatilityWindow::blocks(window),
            VolScale::Std,
        ) {
            Ok(s) => s,
            Err(e) => return inconclusive_from(fact, n, &e),
        };
        if vol.len() < cfg.min_windows.max(cfg.k0 + 2) {
            return FactVerdict::inconclusive(
                fact,
                n,
                format!(
                    "{} windows of {window} bars, need {}",
                    vol.len(),
                    cfg.min_windows
                ),
            );
        }
        if is_constant(&vol.values) {
            if kind == VolatilityEstimatorKind::Basic {
                return FactVerdict::inconclusive(fact, n, "basic volatility is constant");
            }
            v.notes.push(format!(
                "{} volatility is constant and was skipped",
                kind.name()
            ));
            continue;
        }
        let max_lag = cfg.max_lag.min(vol.len() / 4).max(cfg.k0);
        let acf = match estimate_acf(&vol.values, max_lag, cfg.confidence_level) {
            Ok(a) => a,
            Err(e) => return inconclusive_from(fact, n, &e),
        };
        let bands: Vec<f64> = (0..acf.lags.len()).map(|i| acf.band(i)).collect();
        let above = (0..cfg.k0).all(|i| acf.values[i] > bands[i]);
        let name = kind.name();
        v.metric(&format!("acf_lag1_{name}"), acf.values[0]);
        v.flag(&format!("first_lags_above_band_{name}"), above);
        if let Some(l) = first_lag_inside(&acf.values, &bands) {
            v.metric(&format!("decorrelation_lag_{name}"), l as f64);
        }
        v.curves.push(acf_curve(&format!("acf_vol_{name}"), &acf));
        supported &= above;
        used += 1;
    }
    v.metric("windows", (n / window) as f64);
    v.metric("estimators_used", used as f64);
    v.decide(supported)
}

/// Per-return volatility proxy: `out[i]` is the trailing-window volatility whose
/// last return is `offset + i`.
struct AlignedVol {
    offset: usize,
    values: Vec<f64>,
}

fn aligned_rolling(
    series: &PriceSeries,
    kind: VolatilityEstimatorKind,
    window: usize,
) -> crate::Result<AlignedVol> {
    let vol = rolling_volatility(
        series,
        kind,
        VolatilityWindow::new(window, 1),
        VolScale::Std,
    )?;
    let offset = vol.end_returns().next().unwrap_or(0);
    Ok(AlignedVol {
        offset,
        values: vol.values,
    })
}

/// F5: returns correlate negatively with future volatility and not with past volatility.
pub fn test_leverage(series: &PriceSeries, config: &FactConfig) -> FactVerdict {
    let fact = FactId::F5;
    let cfg = &config.f5;
    let returns = match compute_log_returns(series) {
        Ok(r) => r.values,
        Err(e) => return inconclusive_from(fact, series.len(), &e),
    };
    let n = returns.len();
    let window = config.window_for(series);
    let vol = match aligned_rolling(series, cfg.proxy, window) {
        Ok(v) => v,
        Err(e) => return inconclusive_from(fact, n, &e),
    };
    let x = &returns[vol.offset..];
    let y = &vol.values;
    if x.len() < cfg.min_points.max(2 * cfg.max_lag + 2) || cfg.max_lag == 0 {
        return FactVerdict::inconclusive(
            fact,
            n,
            format!("needs at least {} aligned points", cfg.min_points),
        );
    }
    let m = cfg.max_lag as i64;
    let lags: Vec<i64> = (-m..=m).filter(|&l| l != 0).collect();
    let ccf = match estimate_cross_correlation(x, y, &lags, cfg.confidence_level) {
        Ok(c) => c,
        Err(e) => return inconclusive_from(fact, n, &e),
    };
    let (mut future_below, mut past_below) = (0usize, 0usize);
    let mut curve = Curve::new("ccf_return_vol", &["lag", "value", "se"]);
    for (i, &l) in ccf.lags.iter().enumerate() {
        let below = ccf.values[i] < -ccf.band(i);
        if l > 0 {
            future_below += usize::from(below);
        } else {
            past_below += usize::from(below);
        }
        curve.push(vec![l as f64, ccf.values[i], ccf.se[i]]);
    }
    let future_fraction = future_below as f64 / cfg.max_lag as f64;
    let past_fraction = past_below as f64 / cfg.max_lag as f64;
    let mut v = FactVerdict::new(fact);
    v.metric("n", n as f64);
    v.metric("window", window as f64);
    v.metric("future_fraction_below_band", future_fraction);
    v.metric("past_fraction_below_band", past_fraction);
    v.metric("ccf_lag1", ccf.values[cfg.max_lag]);
    v.metric("ccf_lag_minus1", ccf.values[cfg.max_lag - 1]);
    v.curves.push(curve);
    v.decide(future_fraction > cfg.fraction && past_fraction <= cfg.fraction)
}

/// F6: traded volume and realized volatility move together across windows.
pub fn test_volume_volatility(series: &PriceSeries, config: &FactConfig) -> FactVerdict {
    let fact = FactId::F6;
    let cfg = &config.f6;
    let n = series.len().saturating_sub(1);
    let volumes = series.volumes();
    let present = volumes.iter().filter(|v| v.is_some()).count();
    let present_fraction = present as f64 / volumes.len() as f64;
    if present_fraction < cfg.min_volume_fraction {
        return FactVerdict::inconclusive(
            fact,
            n,
            format!("volume present on {:.1}% of bars", 100.0 * present_fraction),
        );
    }
    let window = config.window_for(series);
    let vol = match rolling_volatility(
        series,
        VolatilityEstimatorKind::Basic,
        VolatilityWindow::blocks(window),
        VolScale::Std,
    ) {
        Ok(s) => s,
        Err(e) => return inconclusive_from(fact, n, &e),
    };
    let mut volume_sums = Vec::with_capacity(vol.len());
    let mut vols = Vec::with_capacity(vol.len());
    for (&j, &s) in vol.end_bars.iter().zip(&vol.values) {
        let sum: Option<f64> = volumes[j + 1 - window..=j].iter().copied().sum();
        if let Some(sum) = sum {
            volume_sums.push(sum);
            vols.push(s);
        }
    }
    if volume_sums.len() < cfg.min_windows {
        return FactVerdict::inconclusive(
            fact,
            n,
            format!(
                "{} complete windows, need {}",
                volume_sums.len(),
                cfg.min_windows
            ),
        );
    }
    let r = match pearson_correlation(&volume_sums, &vols) {
        Ok(r) => r,
        Err(e) => return inconclusive_from(fact, n, &e),
    };
    let m = vols.len();
    let block = default_block_length(m);
    let mut rng = stream(config.seed_for("f6-bootstrap"), 0);
    let mut draws = Vec::with_capacity(cfg.resamples);
    let (mut xs, mut ys) = (vec![0.0; m], vec![0.0; m]);
    for _ in 0..cfg.resamples {
        for (k, i) in circular_block_indices(&mut rng, m, block)
            .into_iter()
            .enumerate()
        {
            xs[k] = volume_sums[i];
            ys[k] = vols[i];
        }
        if let Ok(rb) = pearson_correlation(&xs, &ys) {
            draws.push(rb);
        }
    }
    if draws.len() < cfg.resamples / 2 || draws.is_empty() {
        return FactVerdict::inconclusive(fact, n, "bootstrap resamples were degenerate");
    }
    draws.sort_by(f64::total_cmp);
    let tail = (1.0 - cfg.confidence_level) / 2.0;
    let (lo, hi) = (quantile(&draws, tail), quantile(&draws, 1.0 - tail));
    let mut v = FactVerdict::new(fact);
    v.metric("n", n as f64);
    v.metric("window", window as f64);
    v.metric("windows", m as f64);
    v.metric("correlation", r);
    v.metric("ci_low", lo);
    v.metric("ci_high", hi);
    v.metric("volume_fraction", present_fraction);
    let mut scatter = Curve::new("volume_vs_volatility", &["volume", "volatility"]);
    for (a, b) in volume_sums.iter().zip(&vols) {
        scatter.push(vec![*a, *b]);
    }
    v.curves.push(scatter);
    v.decide(lo > 0.0)
}
