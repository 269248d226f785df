use rand_distr::{Distribution, StandardNormal};

use super::{inconclusive_from, FactConfig, FactId, FactVerdict, TailConfig};
use crate::fitting::{fit_garch11, fit_tail_exponent, garch_filter, GarchFit, TailFit, TailSide};
use crate::rng::stream;
use crate::{Error, Result};

/// `z_t = r_t / σ_{t-1}`, where `σ_{t-1}` is the sample standard deviation of
/// the `window` returns strictly before `t`. The output starts at `t = window`;
/// points whose trailing window is constant are dropped.
pub fn trailing_standardized(returns: &[f64], window: usize) -> Result<Vec<f64>> {
    if window < 2 {
        return Err(Error::DegenerateWindow {
            needed: 2,
            got: window,
        });
    }
    if returns.len() <= window {
        return Err(Error::InsufficientData {
            needed: window + 1,
            got: returns.len(),
        });
    }
    let mut out = Vec::with_capacity(returns.len() - window);
    for t in window..returns.len() {
        let past = &returns[t - window..t];
        let m = past.iter().sum::<f64>() / window as f64;
        let var = past.iter().map(|r| (r - m) * (r - m)).sum::<f64>() / (window - 1) as f64;
        if var > 0.0 && !crate::stats::is_constant(past) {
            out.push(returns[t] / var.sqrt());
        }
    }
    if out.is_empty() {
        return Err(Error::ZeroVariance("trailing window"));
    }
    Ok(out)
}

/// GARCH(1,1) standardized residuals `(r_t − μ) / sqrt(h_t)` with the fit used.
pub fn conditional_residuals(returns: &[f64]) -> Result<(Vec<f64>, GarchFit)> {
    let fit = fit_garch11(returns)?;
    let h = garch_filter(returns, &fit.params)?;
    let z = returns
        .iter()
        .zip(&h)
        .map(|(r, h)| (r - fit.params.mean) / h.sqrt())
        .collect();
    Ok((z, fit))
}

fn gaussian_sample(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream(seed, 0);
    (0..n)
        .map(|_| Distribution::<f64>::sample(&StandardNormal, &mut rng))
        .collect()
}

struct SidePair {
    left: TailFit,
    right: TailFit,
}

fn fit_sides(x: &[f64], fraction: f64) -> Result<SidePair> {
    Ok(SidePair {
        left: fit_tail_exponent(x, TailSide::Left, fraction)?,
        right: fit_tail_exponent(x, TailSide::Right, fraction)?,
    })
}

fn joint_se(a: &TailFit, b: &TailFit) -> f64 {
    a.conservative_se().hypot(b.conservative_se())
}

fn record_side(v: &mut FactVerdict, prefix: &str, fit: &TailFit) {
    let side = match fit.side {
        TailSide::Left => "left",
        TailSide::Right => "right",
    };
    v.metric(&format!("{prefix}alpha_{side}"), fit.alpha);
    v.metric(&format!("{prefix}alpha_se_{side}"), fit.conservative_se());
    if prefix.is_empty() {
        v.metric(&format!("r_squared_{side}"), fit.r_squared);
        v.metric(&format!("n_tail_{side}"), fit.n_tail as f64);
    }
}

/// Shared F7/F8 rule: both data tails fit a power law well and are heavier
/// than the Gaussian reference by the configured number of joint standard errors.
fn heavier_than_reference(
    fact: FactId,
    z: &[f64],
    reference: &[f64],
    n: usize,
    cfg: &TailConfig,
) -> FactVerdict {
    let data = match fit_sides(z, cfg.tail_fraction) {
        Ok(d) => d,
        Err(e) => return inconclusive_from(fact, n, &e),
    };
    let reference = match fit_sides(reference, cfg.tail_fraction) {
        Ok(d) => d,
        Err(e) => return inconclusive_from(fact, n, &e),
    };
    let mut v = FactVerdict::new(fact);
    v.metric("n", n as f64);
    v.metric("tail_fraction", cfg.tail_fraction);
    record_side(&mut v, "", &data.left);
    record_side(&mut v, "", &data.right);
    record_side(&mut v, "reference_", &reference.left);
    record_side(&mut v, "reference_", &reference.right);
    let mut supported = true;
    for (d, r) in [
        (&data.left, &reference.left),
        (&data.right, &reference.right),
    ] {
        let gap = (r.alpha - d.alpha) / joint_se(d, r);
        let side = if d.side == TailSide::Left {
            "left"
        } else {
            "right"
        };
        v.metric(&format!("gap_se_{side}"), gap);
        supported &= d.r_squared >= cfg.min_r_squared && gap > cfg.reference_gap_se;
    }
    v.decide(supported)
}

/// F8: returns standardized by trailing volatility have power-law tails heavier
/// than an iid Gaussian sample run through the same standardization.
pub fn test_unconditional_tail(returns: &[f64], window: usize, config: &FactConfig) -> FactVerdict {
    let fact = FactId::F8;
    let cfg = &config.tails;
    let n = returns.len();
    if n < cfg.min_returns {
        return FactVerdict::inconclusive(
            fact,
            n,
            format!("needs at least {} returns", cfg.min_returns),
        );
    }
    let z = match trailing_standardized(returns, window) {
        Ok(z) => z,
        Err(e) => return inconclusive_from(fact, n, &e),
    };
    let noise = gaussian_sample(n, config.seed_for("f8-reference"));
    let reference = match trailing_standardized(&noise, window) {
        Ok(z) => z,
        Err(e) => return inconclusive_from(fact, n, &e),
    };
    let mut v = heavier_than_reference(fact, &z, &reference, n, cfg);
    if !v.metrics.is_empty() {
        v.metric("window", window as f64);
    }
    v
}

/// F7: GARCH(1,1) residuals still have tails heavier than a Gaussian sample.
pub fn test_conditional_tail(returns: &[f64], config: &FactConfig) -> FactVerdict {
    let fact = FactId::F7;
    let cfg = &config.tails;
    let n = returns.len();
    if n < cfg.min_returns {
        return FactVerdict::inconclusive(
            fact,
            n,
            format!("needs at least {} returns", cfg.min_returns),
        );
    }
    let (z, fit) = match conditional_residuals(returns) {
        Ok(x) => x,
        Err(e) => return inconclusive_from(fact, n, &e),
    };
    let reference = gaussian_sample(z.len(), config.seed_for("f7-reference"));
    let mut v = heavier_than_reference(fact, &z, &reference, n, cfg);
    v.metric("garch_omega", fit.params.omega);
    v.metric("garch_alpha", fit.params.alpha);
    v.metric("garch_beta", fit.params.beta);
    v.flag("garch_near_igarch", fit.near_igarch);
    if let Ok(raw) = fit_sides(returns, cfg.tail_fraction) {
        v.metric("unconditional_alpha_left", raw.left.alpha);
        v.metric("unconditional_alpha_right", raw.right.alpha);
    }
    v
}

/// F9: on the trailing-standardized series the loss tail is heavier than the
/// gain tail by more than the configured number of joint standard errors.
pub fn test_gain_loss_asymmetry(
    returns: &[f64],
    window: usize,
    config: &FactConfig,
) -> FactVerdict {
    let fact = FactId::F9;
    let cfg = &config.tails;
    let n = returns.len();
    if n < cfg.min_returns {
        return FactVerdict::inconclusive(
            fact,
            n,
            format!("needs at least {} returns", cfg.min_returns),
        );
    }
    let z = match trailing_standardized(returns, window) {
        Ok(z) => z,
        Err(e) => return inconclusive_from(fact, n, &e),
    };
    let fits = match fit_sides(&z, cfg.tail_fraction) {
        Ok(d) => d,
        Err(e) => return inconclusive_from(fact, n, &e),
    };
    let mut v = FactVerdict::new(fact);
    v.metric("n", n as f64);
    v.metric("window", window as f64);
    record_side(&mut v, "", &fits.left);
    record_side(&mut v, "", &fits.right);
    let gap = (fits.right.alpha - fits.left.alpha) / joint_se(&fits.left, &fits.right);
    v.metric("gap_se", gap);
    v.metric("required_gap_se", cfg.asymmetry_gap_se);
    if let Ok(raw) = fit_sides(returns, cfg.tail_fraction) {
        v.metric("unconditional_alpha_left", raw.left.alpha);
        v.metric("unconditional_alpha_right", raw.right.alpha);
    }
    v.decide(gap > cfg.asymmetry_gap_se)
}
