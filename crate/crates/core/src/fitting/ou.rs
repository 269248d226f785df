use serde::{Deserialize, Serialize};

use crate::linalg::ols;
use crate::stats::{adf_test, AdfLagPolicy};
use crate::{Error, Result};

/// Ornstein–Uhlenbeck parameters per unit step: `dX = θ(μ − X)dt + σ dW`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuParams {
    pub theta: f64,
    pub mu: f64,
    pub sigma: f64,
}

impl OuParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0
            && self.theta.is_finite()
            && self.sigma > 0.0
            && self.sigma.is_finite()
            && self.mu.is_finite())
        {
            return Err(Error::InvalidInput(format!(
                "OU parameters out of range: {self:?}"
            )));
        }
        Ok(())
    }
}

const MIN_LENGTH: usize = 100;

/// Calibrates an OU process from the exact AR(1) discretisation
/// `x_{t+1} = a + b x_t + ε`.
///
/// `sigma` is zero when the regression fits exactly.
pub fn fit_ou(x: &[f64]) -> Result<OuParams> {
    if x.len() < MIN_LENGTH {
        return Err(Error::InsufficientData {
            needed: MIN_LENGTH,
            got: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite value in OU input".into()));
    }
    let n = x.len() - 1;
    let ones = vec![1.0; n];
    let fit = ols(&[&ones, &x[..n]], &x[1..])?;
    let (a, b) = (fit.coef[0], fit.coef[1]);
    if !(b > 0.0 && b < 1.0) {
        return Err(Error::NotMeanReverting(b));
    }
    let theta = -b.ln();
    let residual_variance = fit.rss / (n - 2) as f64;
    let sigma = (residual_variance * 2.0 * theta / (1.0 - b * b)).sqrt();
    Ok(OuParams {
        theta,
        mu: a / (1.0 - b),
        sigma,
    })
}

/// [`fit_ou`] preceded by a Dickey–Fuller check at 5%.
///
/// With an intercept the AR(1) slope of a random walk lands below one most of
/// the time, so `b < 1` alone does not establish mean reversion. Paths whose unit
/// root is not rejected fail with [`Error::NotMeanReverting`].
pub fn fit_ou_checked(x: &[f64]) -> Result<OuParams> {
    if x.len() < MIN_LENGTH {
        return Err(Error::InsufficientData {
            needed: MIN_LENGTH,
            got: x.len(),
        });
    }
    let df = adf_test(x, AdfLagPolicy::Fixed(0))?;
    let params = fit_ou(x)?;
    if !df.rejects_at(0.05).unwrap_or(false) {
        return Err(Error::NotMeanReverting((-params.theta).exp()));
    }
    Ok(params)
}
