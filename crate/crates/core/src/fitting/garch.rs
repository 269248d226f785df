use serde::{Deserialize, Serialize};

use super::simplex::{nelder_mead, SimplexConfig};
use crate::stats::{mean, sample_variance};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GarchParams {
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
    pub mean: f64,
}

impl GarchParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.omega, self.alpha, self.beta, self.mean]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.omega <= 0.0 || self.alpha < 0.0 || self.beta < 0.0 {
            return Err(Error::InvalidInput(format!(
                "GARCH parameters out of range: {self:?}"
            )));
        }
        if self.alpha + self.beta >= 1.0 {
            return Err(Error::InvalidInput(format!(
                "GARCH alpha + beta = {} is not covariance stationary",
                self.alpha + self.beta
            )));
        }
        Ok(())
    }

    pub fn unconditional_variance(&self) -> f64 {
        self.omega / (1.0 - self.alpha - self.beta)
    }
}

/// Conditional variances `h_t` for each return, starting from the unconditional variance.
pub fn garch_filter(returns: &[f64], params: &GarchParams) -> Result<Vec<f64>> {
    params.validate()?;
    let mut h = Vec::with_capacity(returns.len());
    let mut current = params.unconditional_variance();
    for &r in returns {
        h.push(current);
        let e = r - params.mean;
        current = params.omega + params.alpha * e * e + params.beta * current;
    }
    Ok(h)
}

/// Average negative Gaussian quasi-log-likelihood, without the `ln 2π` constant.
fn mean_neg_loglik(returns: &[f64], p: &GarchParams) -> f64 {
    let mut h = p.unconditional_variance();
    let mut total = 0.0;
    for &r in returns {
        let e = r - p.mean;
        total += 0.5 * (h.ln() + e * e / h);
        h = p.omega + p.alpha * e * e + p.beta * h;
    }
    total / returns.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarchFit {
    pub params: GarchParams,
    pub log_likelihood: f64,
    pub converged: bool,
    /// `alpha + beta > 0.999` at the optimum.
    pub near_igarch: bool,
    pub restarts_converged: usize,
    /// Log-likelihood of the best simplex vertex after each iteration of the winning restart.
    #[serde(skip)]
    pub trace: Vec<f64>,
}

const MAX_PERSISTENCE: f64 = 0.99999;
const BOX: f64 = 12.0;
const START_GRID: [(f64, f64); 5] = [
    (0.05, 0.90),
    (0.10, 0.85),
    (0.15, 0.80),
    (0.03, 0.95),
    (0.10, 0.60),
];
const MIN_LENGTH: usize = 500;

fn logistic(u: f64) -> f64 {
    1.0 / (1.0 + (-u).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Maps the unconstrained search space onto the stationarity region.
///
/// `u0` scales omega relative to the variance-matching value, `u1` sets the
/// persistence `alpha + beta`, and `u2` the share of it carried by `alpha`.
fn decode(u: &[f64], variance: f64, mu: f64) -> GarchParams {
    let persistence = MAX_PERSISTENCE * logistic(u[1]);
    let alpha = persistence * logistic(u[2]);
    GarchParams {
        omega: variance * (1.0 - persistence) * u[0].exp(),
        alpha,
        beta: persistence - alpha,
        mean: mu,
    }
}

fn encode(alpha: f64, beta: f64) -> [f64; 3] {
    let persistence = alpha + beta;
    [
        0.0,
        logit(persistence / MAX_PERSISTENCE),
        logit(alpha / persistence),
    ]
}

/// Gaussian quasi-maximum-likelihood fit of a GARCH(1,1) with the mean fixed at
/// the sample mean.
pub fn fit_garch11(returns: &[f64]) -> Result<GarchFit> {
    if returns.len() < MIN_LENGTH {
        return Err(Error::InsufficientData {
            needed: MIN_LENGTH,
            got: returns.len(),
        });
    }
    if returns.iter().any(|r| !r.is_finite()) {
        return Err(Error::InvalidInput("non-finite return".into()));
    }
    let mu = mean(returns);
    let variance = sample_variance(returns);
    if !(variance > 0.0) || crate::stats::is_constant(returns) {
        return Err(Error::FitFailure("returns have zero variance".into()));
    }
    let objective = |u: &[f64]| {
        if u.iter().any(|v| v.abs() > BOX) {
            return f64::INFINITY;
        }
        mean_neg_loglik(returns, &decode(u, variance, mu))
    };
    let config = SimplexConfig::default();
    let mut best: Option<super::SimplexResult> = None;
    let mut restarts_converged = 0;
    for &(a, b) in &START_GRID {
        let run = nelder_mead(objective, &encode(a, b), &config);
        if !run.converged {
            continue;
        }
        restarts_converged += 1;
        if best.as_ref().is_none_or(|b| run.value < b.value) {
            best = Some(run);
        }
    }
    let best = best.ok_or_else(|| Error::FitFailure("no simplex restart converged".into()))?;
    let params = decode(&best.x, variance, mu);
    let n = returns.len() as f64;
    let constant = 0.5 * (2.0 * std::f64::consts::PI).ln();
    let to_loglik = |v: f64| -n * (v + constant);
    Ok(GarchFit {
        params,
        log_likelihood: to_loglik(best.value),
        converged: true,
        near_igarch: params.alpha + params.beta > 0.999,
        restarts_converged,
        trace: best.trace.iter().map(|&v| to_loglik(v)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn simulate(p: &GarchParams, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
        let mut h = p.unconditional_variance();
        let mut out = Vec::with_capacity(n);
        for t in 0..n + 1000 {
            let z: f64 = StandardNormal.sample(&mut rng);
            let r = p.mean + h.sqrt() * z;
            if t >= 1000 {
                out.push(r);
            }
            h = p.omega + p.alpha * (r - p.mean).powi(2) + p.beta * h;
        }
        out
    }

    #[test]
    fn filter_examples() {
        let p = GarchParams {
            omega: 2e-6,
            alpha: 0.0,
            beta: 0.0,
            mean: 0.0,
        };
        assert!(garch_filter(&[0.1, -0.3, 0.02], &p)
            .unwrap()
            .iter()
            .all(|&h| h == 2e-6));

        let p = GarchParams {
            omega: 1e-6,
            alpha: 0.1,
            beta: 0.8,
            mean: 0.0,
        };
        let h = garch_filter(&[0.0; 200], &p).unwrap();
        assert!((h[0] - 1e-5).abs() < 1e-18);
        let limit = 1e-6 / 0.2;
        for t in 1..200 {
            let expect = limit + (h[0] - limit) * 0.8f64.powi(t as i32);
            assert!((h[t] - expect).abs() < 1e-15);
        }
        assert!(garch_filter(
            &[0.0],
            &GarchParams {
                omega: 1e-6,
                alpha: 0.5,
                beta: 0.5,
                mean: 0.0
            }
        )
        .is_err());
    }

    #[test]
    fn recovers_parameters() {
        let truth = GarchParams {
            omega: 1e-6,
            alpha: 0.10,
            beta: 0.85,
            mean: 0.0,
        };
        for seed in 0..3 {
            let r = simulate(&truth, 100_000, seed);
            let fit = fit_garch11(&r).unwrap();
            assert!((fit.params.alpha - 0.10).abs() < 0.03, "{:?}", fit.params);
            assert!((fit.params.beta - 0.85).abs() < 0.03, "{:?}", fit.params);
            assert!(fit.trace.windows(2).all(|w| w[1] >= w[0]));
            assert!(!fit.near_igarch);
        }
    }

    #[test]
    fn iid_input_has_negligible_alpha() {
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(9);
        let r: Vec<f64> = (0..20_000)
            .map(|_| 0.01 * Distribution::<f64>::sample(&StandardNormal, &mut rng))
            .collect();
        let fit = fit_garch11(&r).unwrap();
        assert!(fit.params.alpha <= 0.02, "{:?}", fit.params);
        let h = garch_filter(&r, &fit.params).unwrap();
        let hbar = h.iter().sum::<f64>() / h.len() as f64;
        let s2 = sample_variance(&r);
        assert!((hbar / s2 - 1.0).abs() < 0.05, "{hbar} vs {s2}");
    }

    #[test]
    fn errors() {
        assert!(matches!(
            fit_garch11(&[0.001; 600]),
            Err(Error::FitFailure(_))
        ));
        assert!(matches!(
            fit_garch11(&[0.001; 10]),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn transform_round_trip() {
        let p = decode(&encode(0.07, 0.9), 1e-4, 0.0);
        assert!((p.alpha - 0.07).abs() < 1e-12 && (p.beta - 0.9).abs() < 1e-12);
        assert!((p.unconditional_variance() - 1e-4).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn filter_bounded_below_by_omega(
            r in prop::collection::vec(-0.2f64..0.2, 1..200),
            omega in 1e-8f64..1e-3, a in 0f64..0.5, b in 0f64..0.49,
        ) {
            let p = GarchParams { omega, alpha: a, beta: b, mean: 0.0 };
            for h in garch_filter(&r, &p).unwrap() {
                prop_assert!(h >= omega && h > 0.0);
            }
        }
    }
}
