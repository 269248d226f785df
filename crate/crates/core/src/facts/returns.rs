use super::{
    first_lag_inside, inconclusive_from, Curve, FactConfig, FactId, FactStatus, FactVerdict,
};
use crate::fitting::fit_power_law;
use crate::stats::{estimate_acf, AcfEstimate};

pub(super) fn acf_curve(name: &str, acf: &AcfEstimate) -> Curve {
    let mut c = Curve::new(name, &["lag", "value", "se"]);
    for i in 0..acf.lags.len() {
        c.push(vec![acf.lags[i] as f64, acf.values[i], acf.bartlett_se[i]]);
    }
    c
}

/// F1: the return ACF stays inside its Bartlett band at almost all lags.
pub fn test_absence_autocorrelation(returns: &[f64], config: &FactConfig) -> FactVerdict {
    let fact = FactId::F1;
    let cfg = &config.f1;
    let n = returns.len();
    if n < cfg.min_returns.max(cfg.max_lag + 2) {
        return FactVerdict::inconclusive(
            fact,
            n,
            format!("needs at least {} returns", cfg.min_returns),
        );
    }
    let acf = match estimate_acf(returns, cfg.max_lag, cfg.confidence_level) {
        Ok(a) => a,
        Err(e) => return inconclusive_from(fact, n, &e),
    };
    let bands: Vec<f64> = (0..acf.lags.len()).map(|i| acf.band(i)).collect();
    let inside = acf
        .values
        .iter()
        .zip(&bands)
        .filter(|(v, b)| v.abs() <= **b)
        .count();
    let fraction = inside as f64 / acf.lags.len() as f64;
    let mut v = FactVerdict::new(fact);
    v.metric("n", n as f64);
    v.metric("fraction_inside_band", fraction);
    v.metric("required_fraction", cfg.inside_fraction);
    v.metric("acf_lag1", acf.values[0]);
    v.metric(
        "max_abs_acf",
        acf.values.iter().fold(0.0, |m, x| m.max(x.abs())),
    );
    if let Some(l) = first_lag_inside(&acf.values, &bands) {
        v.metric("first_lag_inside_band", l as f64);
    }
    v.curves.push(acf_curve("acf_returns", &acf));
    v.decide(fraction >= cfg.inside_fraction)
}

/// F2: the ACF of `|r|^p` is positive and decays like a power law.
pub fn test_slow_decay(returns: &[f64], config: &FactConfig) -> FactVerdict {
    let fact = FactId::F2;
    let cfg = &config.f2;
    let n = returns.len();
    if n < cfg.min_returns.max(cfg.max_lag + 2) {
        return FactVerdict::inconclusive(
            fact,
            n,
            format!("needs at least {} returns", cfg.min_returns),
        );
    }
    if cfg.power == 0 {
        return FactVerdict::inconclusive(fact, n, "power must be at least 1");
    }
    let powered: Vec<f64> = returns
        .iter()
        .map(|r| r.abs().powi(cfg.power as i32))
        .collect();
    let acf = match estimate_acf(&powered, cfg.max_lag, cfg.confidence_level) {
        Ok(a) => a,
        Err(e) => return inconclusive_from(fact, n, &e),
    };
    let mut v = slow_decay_from_acf(&acf, n, config);
    if v.status == FactStatus::Inconclusive {
        return v;
    }
    // The squared-return exponent is reported alongside when the main fit uses |r|.
    if cfg.power == 1 {
        let squared: Vec<f64> = returns.iter().map(|r| r * r).collect();
        if let Ok(fit2) = estimate_acf(&squared, cfg.max_lag, cfg.confidence_level)
            .and_then(|a| fit_power_law(&a, &a.lags))
        {
            v.metric("beta_squared_returns", fit2.beta);
            v.metric("beta_squared_returns_se", fit2.beta_se);
        }
    }
    v
}

/// Power-law verdict on a precomputed ACF of `|r|^p`.
pub(crate) fn slow_decay_from_acf(acf: &AcfEstimate, n: usize, config: &FactConfig) -> FactVerdict {
    let fact = FactId::F2;
    let cfg = &config.f2;
    let fit = match fit_power_law(acf, &acf.lags) {
        Ok(f) => f,
        Err(e) => return inconclusive_from(fact, n, &e),
    };
    let all_positive = acf.values.iter().all(|&x| x > 0.0);
    let mut v = FactVerdict::new(fact);
    v.metric("n", n as f64);
    v.metric("power", f64::from(cfg.power));
    v.metric("beta", fit.beta);
    v.metric("beta_se", fit.beta_se);
    v.metric("residual_variance", fit.residual_variance);
    v.flag("converged", fit.converged);
    v.flag("acf_all_positive", all_positive);
    v.flag(
        "beta_in_range",
        fit.beta >= cfg.beta_range[0] && fit.beta <= cfg.beta_range[1],
    );
    v.metric(
        "negative_lags",
        acf.values.iter().filter(|&&x| x <= 0.0).count() as f64,
    );
    let mut curve = acf_curve("acf_abs_returns", acf);
    curve.columns.push("power_law".into());
    for row in &mut curve.rows {
        row.push(row[0].powf(-fit.beta));
    }
    v.curves.push(curve);
    v.decide(fit.converged && fit.beta > 0.0 && all_positive)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fitting::GarchParams;
    use crate::series::compute_log_returns;
    use crate::simulate::{simulate, GbmParams, ModelParams, SimSpec};

    fn gbm_returns(n: usize, seed: u64) -> Vec<f64> {
        let spec = SimSpec::new(
            ModelParams::Gbm(GbmParams {
                mu: 0.0,
                sigma: 0.01,
                s0: 100.0,
            }),
            n,
            seed,
        );
        compute_log_returns(&simulate(&spec).unwrap().prices)
            .unwrap()
            .values
    }

    fn garch_returns(n: usize, seed: u64) -> Vec<f64> {
        let p = GarchParams {
            omega: 1e-6,
            alpha: 0.09,
            beta: 0.89,
            mean: 0.0,
        };
        compute_log_returns(
            &simulate(&SimSpec::new(ModelParams::Garch11(p), n, seed))
                .unwrap()
                .prices,
        )
        .unwrap()
        .values
    }

    #[test]
    fn f1_controls() {
        let cfg = FactConfig::default();
        let v = test_absence_autocorrelation(&gbm_returns(20_000, 1), &cfg);
        assert_eq!(v.status, FactStatus::Supported, "{v:?}");
        let e = gbm_returns(20_000, 2);
        let mut x = vec![0.0; e.len()];
        for t in 1..e.len() {
            x[t] = 0.5 * x[t - 1] + e[t];
        }
        assert_eq!(
            test_absence_autocorrelation(&x, &cfg).status,
            FactStatus::NotSupported
        );
        let v = test_absence_autocorrelation(&[0.001; 500], &cfg);
        assert_eq!(v.status, FactStatus::Inconclusive);
        assert!(!v.metrics.is_empty());
    }

    #[test]
    fn f2_controls() {
        let cfg = FactConfig::default();
        let v = test_slow_decay(&garch_returns(100_000, 3), &cfg);
        assert_eq!(v.status, FactStatus::Supported, "{v:?}");
        assert!(v.metrics["beta"] > 0.0);
        let v = test_slow_decay(&gbm_returns(100_000, 4), &cfg);
        assert_eq!(v.status, FactStatus::NotSupported, "{v:?}");
    }

    #[test]
    fn injected_power_law_acf() {
        let lags: Vec<usize> = (1..=100).collect();
        let acf = AcfEstimate {
            values: lags.iter().map(|&l| (l as f64).powf(-0.3)).collect(),
            bartlett_se: vec![0.01; 100],
            lags,
            confidence_level: 0.95,
        };
        let v = slow_decay_from_acf(&acf, 10_000, &FactConfig::default());
        assert_eq!(v.status, FactStatus::Supported);
        assert!((v.metrics["beta"] - 0.3).abs() < 1e-8);
        assert_eq!(v.metrics["beta_in_range"], 1.0);
    }
}
