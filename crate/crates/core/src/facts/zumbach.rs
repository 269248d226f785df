//! Time-scale asymmetry of volatility.
//!
//! `x_t` is a one-bar Parkinson variance of the bar carrying return `t` and
//! `y_t = r_t²`. The lagged association
//!
//! `C̃(δ) = Σ_t (x_t − x̄) y_{t−δ} / (N_δ · sd(x) · sd(y))`
//!
//! is computed for positive and negative `δ`, and `Z(δ) = C̃(δ) − C̃(−δ)` measures
//! how much more past coarse moves explain present fine volatility than the
//! reverse. The null band comes from a circular block bootstrap of the `(x, y)`
//! pairs.

use serde::{Deserialize, Serialize};

use super::bootstrap::{block_starts, default_block_length, quantile};
use super::{inconclusive_from, Curve, F11Config, FactConfig, FactId, FactVerdict};
use crate::rng::stream;
use crate::series::{compute_log_returns, PriceSeries};
use crate::stats::is_constant;
use crate::{Error, Result};

/// One-bar Parkinson variance `ln(H/L)² / (4 ln 2)` of bars `1..`, aligned with
/// the close-to-close returns.
pub fn bar_range_proxy(series: &PriceSeries) -> Vec<f64> {
    let k = 4.0 * std::f64::consts::LN_2;
    series.bars()[1..]
        .iter()
        .map(|b| (b.high / b.low).ln().powi(2) / k)
        .collect()
}

fn population_sd(x: &[f64]) -> f64 {
    let m = x.iter().sum::<f64>() / x.len() as f64;
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64).sqrt()
}

/// `Z(δ)` for `δ = 1..=max_lag`. With `literal_sum_centering` the centring term is
/// `Σx` rather than the mean.
pub fn zumbach_statistic(
    x: &[f64],
    y: &[f64],
    max_lag: usize,
    literal_sum_centering: bool,
) -> Result<Vec<f64>> {
    check_inputs(x, y, max_lag)?;
    let n = x.len();
    let sum_x: f64 = x.iter().sum();
    let center = if literal_sum_centering {
        sum_x
    } else {
        sum_x / n as f64
    };
    let scale = population_sd(x) * population_sd(y);
    if !(scale > 0.0) {
        return Err(Error::ZeroVariance("zumbach inputs"));
    }
    Ok((1..=max_lag)
        .map(|d| {
            let past: f64 = (d..n).map(|t| (x[t] - center) * y[t - d]).sum();
            let future: f64 = (0..n - d).map(|t| (x[t] - center) * y[t + d]).sum();
            (past - future) / ((n - d) as f64 * scale)
        })
        .collect())
}

fn check_inputs(x: &[f64], y: &[f64], max_lag: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "lengths differ: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if max_lag == 0 {
        return Err(Error::InvalidInput("max_lag must be at least 1".into()));
    }
    if x.len() <= 2 * max_lag {
        return Err(Error::InsufficientData {
            needed: 2 * max_lag + 1,
            got: x.len(),
        });
    }
    if is_constant(x) {
        return Err(Error::ZeroVariance("x"));
    }
    if is_constant(y) {
        return Err(Error::ZeroVariance("y"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZumbachResult {
    pub lags: Vec<usize>,
    pub z: Vec<f64>,
    /// Lower and upper quantiles of the centred bootstrap statistic `Z* − Z`.
    pub band_low: Vec<f64>,
    pub band_high: Vec<f64>,
    pub resamples_used: usize,
    pub block_length: usize,
}

impl ZumbachResult {
    pub fn count_above(&self) -> usize {
        self.z
            .iter()
            .zip(&self.band_high)
            .filter(|(z, h)| z > h)
            .count()
    }

    pub fn count_below(&self) -> usize {
        self.z
            .iter()
            .zip(&self.band_low)
            .filter(|(z, l)| z < l)
            .count()
    }
}

/// Prefix sums over the circularly doubled series, so that any block of a
/// circular resample reduces to a difference of two entries.
struct Prepared<'a> {
    x: &'a [f64],
    y: &'a [f64],
    block: usize,
    max_lag: usize,
    sx: Vec<f64>,
    sxx: Vec<f64>,
    sy: Vec<f64>,
    syy: Vec<f64>,
    /// `fwd[d-1][v] = Σ_{w<v} x_w y_{w−d}` (indices mod N).
    fwd: Vec<Vec<f64>>,
    /// `bwd[d-1][v] = Σ_{w<v} x_w y_{w+d}` (indices mod N).
    bwd: Vec<Vec<f64>>,
}

fn prefix(len: usize, f: impl Fn(usize) -> f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(len + 1);
    let mut acc = 0.0;
    out.push(acc);
    for v in 0..len {
        acc += f(v);
        out.push(acc);
    }
    out
}

impl<'a> Prepared<'a> {
    fn new(x: &'a [f64], y: &'a [f64], block: usize, max_lag: usize) -> Self {
        let n = x.len();
        let m = 2 * n;
        let fwd = (1..=max_lag)
            .map(|d| prefix(m, |v| x[v % n] * y[(v + n - d) % n]))
            .collect();
        let bwd = (1..=max_lag)
            .map(|d| prefix(m, |v| x[v % n] * y[(v + d) % n]))
            .collect();
        Prepared {
            x,
            y,
            block,
            max_lag,
            sx: prefix(m, |v| x[v % n]),
            sxx: prefix(m, |v| x[v % n] * x[v % n]),
            sy: prefix(m, |v| y[v % n]),
            syy: prefix(m, |v| y[v % n] * y[v % n]),
            fwd,
            bwd,
        }
    }

    /// Position `u` of the resample as an index into the original series.
    fn source(&self, starts: &[usize], u: usize) -> usize {
        (starts[u / self.block] + u % self.block) % self.x.len()
    }

    /// `Z*(δ)` for the resample built from `starts`, from block sums plus the
    /// few products that straddle block boundaries. Needs `block > max_lag`.
    fn resampled(&self, starts: &[usize], literal: bool) -> Option<Vec<f64>> {
        let n = self.x.len();
        let b = self.block;
        let blocks: Vec<(usize, usize)> = starts
            .iter()
            .enumerate()
            .map(|(k, &s)| (s, b.min(n - k * b)))
            .collect();
        let range = |p: &[f64], s: usize, len: usize| p[s + len] - p[s];
        let (mut sx, mut sxx, mut sy, mut syy) = (0.0, 0.0, 0.0, 0.0);
        for &(s, len) in &blocks {
            sx += range(&self.sx, s, len);
            sxx += range(&self.sxx, s, len);
            sy += range(&self.sy, s, len);
            syy += range(&self.syy, s, len);
        }
        let nf = n as f64;
        let (mx, my) = (sx / nf, sy / nf);
        let scale = ((sxx / nf - mx * mx) * (syy / nf - my * my)).sqrt();
        if !(scale > 0.0) {
            return None;
        }
        let center = if literal { sx } else { mx };
        let xs = |u: usize| self.x[self.source(starts, u)];
        let ys = |u: usize| self.y[self.source(starts, u)];
        let mut out = Vec::with_capacity(self.max_lag);
        for d in 1..=self.max_lag {
            let (p, q) = (&self.fwd[d - 1], &self.bwd[d - 1]);
            let mut past = 0.0;
            let mut future = 0.0;
            for (k, &(s, len)) in blocks.iter().enumerate() {
                if len > d {
                    past += p[s + len] - p[s + d];
                    future += q[s + len - d] - q[s];
                }
                let u0 = k * b;
                if k > 0 {
                    for j in 0..d.min(len) {
                        past += xs(u0 + j) * ys(u0 + j - d);
                    }
                }
                for j in len.saturating_sub(d)..len {
                    let u = u0 + j;
                    if u + d < n {
                        future += xs(u) * ys(u + d);
                    }
                }
            }
            let head: f64 = (0..d).map(ys).sum();
            let tail: f64 = (n - d..n).map(ys).sum();
            past -= center * (sy - tail);
            future -= center * (sy - head);
            out.push((past - future) / ((n - d) as f64 * scale));
        }
        Some(out)
    }

    fn materialized(&self, starts: &[usize], literal: bool) -> Option<Vec<f64>> {
        let n = self.x.len();
        let xs: Vec<f64> = (0..n).map(|u| self.x[self.source(starts, u)]).collect();
        let ys: Vec<f64> = (0..n).map(|u| self.y[self.source(starts, u)]).collect();
        zumbach_statistic(&xs, &ys, self.max_lag, literal).ok()
    }
}

/// `Z(δ)` with a circular-block-bootstrap band at `confidence_level`.
pub fn zumbach_with_band(
    x: &[f64],
    y: &[f64],
    cfg: &F11Config,
    seed: u64,
) -> Result<ZumbachResult> {
    let z = zumbach_statistic(x, y, cfg.max_lag, cfg.literal_sum_centering)?;
    let n = x.len();
    let block = default_block_length(n).min(n);
    let prepared = Prepared::new(x, y, block, cfg.max_lag);
    let fast = block > cfg.max_lag;
    let mut rng = stream(seed, 0);
    let mut draws: Vec<Vec<f64>> = vec![Vec::with_capacity(cfg.resamples); cfg.max_lag];
    let mut used = 0;
    for _ in 0..cfg.resamples {
        let starts = block_starts(&mut rng, n, block);
        let zs = if fast {
            prepared.resampled(&starts, cfg.literal_sum_centering)
        } else {
            prepared.materialized(&starts, cfg.literal_sum_centering)
        };
        let Some(zs) = zs.filter(|v| v.iter().all(|z| z.is_finite())) else {
            continue;
        };
        used += 1;
        for (i, v) in zs.into_iter().enumerate() {
            draws[i].push(v - z[i]);
        }
    }
    if used < 20 {
        return Err(Error::EmptyOutput(format!(
            "only {used} usable bootstrap resamples"
        )));
    }
    let tail = (1.0 - cfg.confidence_level) / 2.0;
    let (mut band_low, mut band_high) = (Vec::new(), Vec::new());
    for d in &mut draws {
        d.sort_by(f64::total_cmp);
        band_low.push(quantile(d, tail));
        band_high.push(quantile(d, 1.0 - tail));
    }
    Ok(ZumbachResult {
        lags: (1..=cfg.max_lag).collect(),
        z,
        band_low,
        band_high,
        resamples_used: used,
        block_length: block,
    })
}

/// F11: coarse past volatility predicts fine present volatility better than the
/// other way round.
pub fn test_time_scale_asymmetry(series: &PriceSeries, config: &FactConfig) -> FactVerdict {
    let fact = FactId::F11;
    let cfg = &config.f11;
    let returns = match compute_log_returns(series) {
        Ok(r) => r.values,
        Err(e) => return inconclusive_from(fact, series.len(), &e),
    };
    let n = returns.len();
    let x = bar_range_proxy(series);
    if is_constant(&x) {
        return FactVerdict::inconclusive(
            fact,
            n,
            "bars carry no intrabar range (close-only data)",
        );
    }
    if n < 100.max(10 * cfg.max_lag) {
        return FactVerdict::inconclusive(
            fact,
            n,
            format!("needs at least {} returns", 100.max(10 * cfg.max_lag)),
        );
    }
    let y: Vec<f64> = returns.iter().map(|r| r * r).collect();
    let res = match zumbach_with_band(&x, &y, cfg, config.seed_for("f11-bootstrap")) {
        Ok(r) => r,
        Err(e) => return inconclusive_from(fact, n, &e),
    };
    let (above, below) = (res.count_above(), res.count_below());
    let mean_z = res.z.iter().sum::<f64>() / res.z.len() as f64;
    let mut v = FactVerdict::new(fact);
    v.metric("n", n as f64);
    v.metric("lags_above_band", above as f64);
    v.metric("lags_below_band", below as f64);
    v.metric("mean_z", mean_z);
    v.metric("sign", if mean_z == 0.0 { 0.0 } else { mean_z.signum() });
    v.metric("resamples_used", res.resamples_used as f64);
    v.metric("block_length", res.block_length as f64);
    v.metric("z_lag1", res.z[0]);
    v.flag("literal_sum_centering", cfg.literal_sum_centering);
    let mut curve = Curve::new("zumbach", &["lag", "z", "band_low", "band_high"]);
    for i in 0..res.lags.len() {
        curve.push(vec![
            res.lags[i] as f64,
            res.z[i],
            res.band_low[i],
            res.band_high[i],
        ]);
    }
    v.curves.push(curve);
    v.decide(above.max(below) as f64 >= cfg.fraction * cfg.max_lag as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::facts::FactStatus;
    use crate::fitting::GarchParams;
    use crate::series::{OhlcBar, SamplingGrid};
    use crate::simulate::{simulate, GbmParams, ModelParams, SimSpec};
    use proptest::prelude::*;

    fn garch(seed: u64, n: usize) -> PriceSeries {
        let p = ModelParams::Garch11(GarchParams {
            omega: 1e-6,
            alpha: 0.09,
            beta: 0.89,
            mean: 0.0,
        });
        simulate(&SimSpec::new(p, n, seed)).unwrap().prices
    }

    fn gbm(seed: u64, n: usize) -> PriceSeries {
        simulate(&SimSpec::new(
            ModelParams::Gbm(GbmParams {
                mu: 0.0,
                sigma: 0.01,
                s0: 100.0,
            }),
            n,
            seed,
        ))
        .unwrap()
        .prices
    }

    fn xy(series: &PriceSeries) -> (Vec<f64>, Vec<f64>) {
        let r = compute_log_returns(series).unwrap().values;
        (bar_range_proxy(series), r.iter().map(|v| v * v).collect())
    }

    #[test]
    fn statistic_matches_definition() {
        let x = [0.5, 1.0, 0.2, 0.8, 0.3, 0.9, 0.4];
        let y = [0.1, 0.4, 0.3, 0.2, 0.6, 0.5, 0.7];
        let z = zumbach_statistic(&x, &y, 2, false).unwrap();
        let (sx, sy) = (population_sd(&x), population_sd(&y));
        let m = x.iter().sum::<f64>() / 7.0;
        let c = |d: i64| {
            let mut s = 0.0;
            for t in 0..7i64 {
                let u = t - d;
                if (0..7).contains(&u) {
                    s += (x[t as usize] - m) * y[u as usize];
                }
            }
            s / ((7 - d.unsigned_abs() as usize) as f64 * sx * sy)
        };
        assert!((z[0] - (c(1) - c(-1))).abs() < 1e-14);
        assert!((z[1] - (c(2) - c(-2))).abs() < 1e-14);
        assert!(zumbach_statistic(&[1.0; 7], &y, 2, false).is_err());
        assert!(zumbach_statistic(&x, &y, 4, false).is_err());
    }

    #[test]
    fn reversal_flips_the_statistic() {
        let (x, y) = xy(&garch(1, 5000));
        let z = zumbach_statistic(&x, &y, 10, false).unwrap();
        let xr: Vec<f64> = x.iter().rev().copied().collect();
        let yr: Vec<f64> = y.iter().rev().copied().collect();
        let zr = zumbach_statistic(&xr, &yr, 10, false).unwrap();
        for (a, b) in z.iter().zip(&zr) {
            assert!((a + b).abs() < 1e-12, "{a} {b}");
        }
    }

    #[test]
    fn fast_bootstrap_matches_materialized() {
        let (x, y) = xy(&garch(2, 3001));
        for literal in [false, true] {
            let p = Prepared::new(&x, &y, 15, 10);
            let mut rng = stream(9, 0);
            for _ in 0..20 {
                let starts = block_starts(&mut rng, x.len(), 15);
                let a = p.resampled(&starts, literal).unwrap();
                let b = p.materialized(&starts, literal).unwrap();
                for (u, v) in a.iter().zip(&b) {
                    assert!((u - v).abs() < 1e-9 * (1.0 + v.abs()), "{u} {v}");
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn fast_path_on_random_inputs(
            x in proptest::collection::vec(0.0f64..1.0, 40..120),
            seed in 0u64..1000,
            block in 4usize..12,
        ) {
            let y: Vec<f64> = x.iter().enumerate().map(|(i, v)| (v * 7.0 + i as f64).sin().abs()).collect();
            prop_assume!(!is_constant(&x));
            let p = Prepared::new(&x, &y, block, 3);
            let mut rng = stream(seed, 0);
            let starts = block_starts(&mut rng, x.len(), block);
            if let (Some(a), Some(b)) = (p.resampled(&starts, false), p.materialized(&starts, false)) {
                for (u, v) in a.iter().zip(&b) {
                    prop_assert!((u - v).abs() < 1e-8 * (1.0 + v.abs()));
                }
            }
        }
    }

    #[test]
    fn controls() {
        let config = FactConfig::default();
        let v = test_time_scale_asymmetry(&garch(3, 100_000), &config);
        assert_eq!(v.status, FactStatus::Supported, "{v:?}");
        assert_eq!(v.metrics["sign"], 1.0);
        let v = test_time_scale_asymmetry(&gbm(3, 100_000), &config);
        assert_eq!(v.status, FactStatus::NotSupported, "{v:?}");
    }

    #[test]
    fn reversed_series_flips_sign() {
        let series = garch(4, 100_000);
        let config = FactConfig::default();
        let fwd = test_time_scale_asymmetry(&series, &config);
        let rev = test_time_scale_asymmetry(&series.reversed().unwrap(), &config);
        assert_eq!(fwd.metrics["sign"], 1.0);
        assert_eq!(rev.metrics["sign"], -1.0);
    }

    #[test]
    fn close_only_is_inconclusive() {
        let closes = gbm(5, 2000).closes();
        let bars = closes
            .iter()
            .enumerate()
            .map(|(i, &c)| OhlcBar::flat(i as i64 * 86_400, c, None))
            .collect();
        let series = PriceSeries::new("flat", SamplingGrid::new(86_400).unwrap(), bars).unwrap();
        assert_eq!(
            test_time_scale_asymmetry(&series, &FactConfig::default()).status,
            FactStatus::Inconclusive
        );
    }
}
