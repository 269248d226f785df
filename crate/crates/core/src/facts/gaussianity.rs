use super::{Curve, F10Config, FactConfig, FactId, FactVerdict};
use crate::stats::{
    anderson_darling_normal, ks_test_normal, mean, qq_data_with_reference, sample_variance,
    GofTestResult,
};

/// Aggregation factors `first, first·ratio, …` that still leave at least
/// `min_returns_at_scale` aggregated returns out of `n`.
pub fn aggregation_ladder(n: usize, cfg: &F10Config) -> Vec<usize> {
    let mut out = Vec::new();
    if cfg.first_scale == 0 || cfg.scale_ratio < 2 {
        return out;
    }
    let mut k = cfg.first_scale;
    while n / k >= cfg.min_returns_at_scale.max(8) {
        out.push(k);
        k *= cfg.scale_ratio;
    }
    out
}

fn rejects(test: &GofTestResult, level: f64) -> bool {
    test.rejects_at(level)
        .unwrap_or_else(|| test.p_value.is_some_and(|p| p < level))
}

fn critical(test: &GofTestResult, level: f64) -> f64 {
    test.critical_value(level).unwrap_or(f64::INFINITY)
}

/// F10: returns summed over longer horizons drift toward the normal law.
pub fn test_aggregational_gaussianity(returns: &[f64], config: &FactConfig) -> FactVerdict {
    let fact = FactId::F10;
    let cfg = &config.f10;
    let n = returns.len();
    let ladder = aggregation_ladder(n, cfg);
    if ladder.len() < 2 {
        return FactVerdict::inconclusive(
            fact,
            n,
            "fewer than two aggregation scales fit the sample",
        );
    }
    let mut v = FactVerdict::new(fact);
    v.metric("n", n as f64);
    let mut ad = Vec::with_capacity(ladder.len());
    for &k in &ladder {
        let agg: Vec<f64> = returns.chunks_exact(k).map(|c| c.iter().sum()).collect();
        let (a, s) = match (anderson_darling_normal(&agg), ks_test_normal(&agg)) {
            (Ok(a), Ok(s)) => (a, s),
            (Err(e), _) | (_, Err(e)) => return super::inconclusive_from(fact, n, &e),
        };
        v.metric(&format!("ad_k{k}"), a.statistic);
        v.metric(&format!("ks_k{k}"), s.statistic);
        v.flag(&format!("ad_rejects_k{k}"), rejects(&a, cfg.level));
        let sd = sample_variance(&agg).sqrt();
        if sd > 0.0 {
            let m = mean(&agg);
            let z: Vec<f64> = agg.iter().map(|x| (x - m) / sd).collect();
            let qq = qq_data_with_reference(&z, 0.0, 1.0);
            let mut curve = Curve::new(format!("qq_k{k}"), &["theoretical", "empirical"]);
            for (t, e) in qq.theoretical.into_iter().zip(qq.empirical) {
                curve.push(vec![t, e]);
            }
            v.curves.push(curve);
        }
        ad.push((a, s));
    }
    let steps = ad.len() - 1;
    let good = ad
        .windows(2)
        .filter(|w| {
            let (a0, s0) = &w[0];
            let (a1, s1) = &w[1];
            let both_below = |a: &GofTestResult, s: &GofTestResult| {
                a.statistic < critical(a, cfg.level) && s.statistic < critical(s, cfg.level)
            };
            a1.statistic <= a0.statistic || (both_below(a0, s0) && both_below(a1, s1))
        })
        .count();
    let fraction = good as f64 / steps as f64;
    let (last_ad, _) = ad.last().expect("at least two scales");
    let last_rejected = rejects(last_ad, cfg.level);
    v.metric("scales", ladder.len() as f64);
    v.metric("largest_scale", *ladder.last().unwrap() as f64);
    v.metric("non_increasing_fraction", fraction);
    v.flag("largest_scale_rejected", last_rejected);
    v.decide(fraction >= cfg.step_fraction && !last_rejected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::facts::FactStatus;
    use crate::fitting::GarchParams;
    use crate::series::compute_log_returns;
    use crate::simulate::{simulate, GbmParams, ModelParams, SimSpec};

    #[test]
    fn ladder_examples() {
        let cfg = F10Config::default();
        assert_eq!(aggregation_ladder(100_000, &cfg), vec![2, 8, 32, 128, 512]);
        assert_eq!(aggregation_ladder(1000, &cfg), vec![2, 8]);
        assert_eq!(aggregation_ladder(300, &cfg), vec![2]);
    }

    #[test]
    fn controls() {
        let config = FactConfig::default();
        let p = ModelParams::Garch11(GarchParams {
            omega: 1e-6,
            alpha: 0.09,
            beta: 0.89,
            mean: 0.0,
        });
        let r = compute_log_returns(&simulate(&SimSpec::new(p, 100_000, 6)).unwrap().prices)
            .unwrap()
            .values;
        let v = test_aggregational_gaussianity(&r, &config);
        assert_eq!(v.status, FactStatus::Supported, "{v:?}");
        assert_eq!(v.curves.len(), 5);

        let p = ModelParams::Gbm(GbmParams {
            mu: 0.0,
            sigma: 0.01,
            s0: 100.0,
        });
        let r = compute_log_returns(&simulate(&SimSpec::new(p, 100_000, 6)).unwrap().prices)
            .unwrap()
            .values;
        let v = test_aggregational_gaussianity(&r, &config);
        assert_ne!(v.status, FactStatus::Inconclusive);
    }

    #[test]
    fn short_series_is_inconclusive() {
        let r: Vec<f64> = (0..300)
            .map(|i| ((i * 13 % 7) as f64 - 3.0) * 1e-3)
            .collect();
        let v = test_aggregational_gaussianity(&r, &FactConfig::default());
        assert_eq!(v.status, FactStatus::Inconclusive);
    }
}
