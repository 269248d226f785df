use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::stats::AcfEstimate;
use crate::{Error, Result};

/// A curve `y = f(x; params)` fitted by [`lm_minimize`].
pub trait CurveModel {
    fn n_params(&self) -> usize;

    fn eval(&self, x: f64, params: &[f64]) -> f64;

    /// Writes `∂f/∂params` into `out` and returns `true`, or returns `false` to
    /// fall back to central finite differences.
    fn gradient(&self, _x: f64, _params: &[f64], _out: &mut [f64]) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LmConfig {
    pub max_iterations: usize,
    /// Threshold on both the relative step and the relative objective change.
    pub tolerance: f64,
    pub initial_damping: f64,
}

impl Default for LmConfig {
    fn default() -> Self {
        LmConfig {
            max_iterations: 200,
            tolerance: 1e-10,
            initial_damping: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmResult {
    pub params: Vec<f64>,
    /// `σ̂² (JᵀJ)⁻¹` at the optimum; `None` when `JᵀJ` is singular there.
    pub covariance: Option<DMatrix<f64>>,
    /// Residual sum of squares divided by the number of points.
    pub residual_variance: f64,
    pub converged: bool,
    pub iterations: usize,
}

fn jacobian<M: CurveModel>(model: &M, xs: &[f64], params: &[f64]) -> DMatrix<f64> {
    let k = model.n_params();
    let mut jac = DMatrix::zeros(xs.len(), k);
    let mut row = vec![0.0; k];
    let mut probe = params.to_vec();
    for (i, &x) in xs.iter().enumerate() {
        if !model.gradient(x, params, &mut row) {
            for j in 0..k {
                let h = f64::EPSILON.cbrt() * params[j].abs().max(1.0);
                probe[j] = params[j] + h;
                let up = model.eval(x, &probe);
                probe[j] = params[j] - h;
                let down = model.eval(x, &probe);
                probe[j] = params[j];
                row[j] = (up - down) / (2.0 * h);
            }
        }
        for j in 0..k {
            jac[(i, j)] = row[j];
        }
    }
    jac
}

fn residuals<M: CurveModel>(model: &M, xs: &[f64], ys: &[f64], params: &[f64]) -> DVector<f64> {
    DVector::from_iterator(
        xs.len(),
        xs.iter().zip(ys).map(|(&x, &y)| y - model.eval(x, params)),
    )
}

/// Levenberg–Marquardt minimisation of `Σ (y_i − f(x_i; p))²`.
///
/// Damping scales the diagonal of `JᵀJ`. A singular system that damping cannot
/// regularise ends the run with `converged = false` rather than an error.
pub fn lm_minimize<M: CurveModel>(
    model: &M,
    xs: &[f64],
    ys: &[f64],
    initial: &[f64],
    config: &LmConfig,
) -> Result<LmResult> {
    let k = model.n_params();
    if xs.len() != ys.len() {
        return Err(Error::InvalidInput(format!(
            "{} abscissae for {} values",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: xs.len(),
        });
    }
    if initial.len() != k || initial.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(
            "initial parameters must be finite and match the model".into(),
        ));
    }
    let n = xs.len() as f64;
    let tiny = f64::MIN_POSITIVE.sqrt();
    let mut params = initial.to_vec();
    let mut r = residuals(model, xs, ys, &params);
    let mut rss = r.norm_squared();
    let mut lambda = config.initial_damping;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < config.max_iterations {
        iterations += 1;
        if rss <= tiny * tiny {
            converged = true;
            break;
        }
        let jac = jacobian(model, xs, &params);
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * &r;
        let diag_max = jtj.diagonal().max();
        if !(diag_max > 0.0) {
            break;
        }
        let mut accepted = false;
        let mut first_trial = true;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for j in 0..k {
                a[(j, j)] += lambda * jtj[(j, j)].max(1e-12 * diag_max);
            }
            let Some(step) = a.cholesky().map(|c| c.solve(&jtr)) else {
                first_trial = false;
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = params.iter().zip(step.iter()).map(|(p, s)| p + s).collect();
            let rel_step = step.norm() / (DVector::from_column_slice(&params).norm() + tiny);
            let r_trial = residuals(model, xs, ys, &trial);
            let rss_trial = r_trial.norm_squared();
            if rss_trial.is_finite() && rss_trial < rss {
                let rel_change = (rss - rss_trial) / rss.max(tiny);
                params = trial;
                r = r_trial;
                rss = rss_trial;
                lambda = (lambda / 10.0).max(1e-15);
                accepted = true;
                if (rel_step < config.tolerance && rel_change < config.tolerance)
                    || rss <= tiny * tiny
                {
                    converged = true;
                }
                break;
            }
            let predicted = 2.0 * step.dot(&jtr) - step.dot(&(&jtj * &step));
            if first_trial && (rel_step < config.tolerance || predicted <= config.tolerance * rss) {
                // The remaining improvement is below what the objective can resolve.
                // Take the lightly damped step when it does not measurably hurt.
                if rss_trial.is_finite() && rss_trial <= rss * (1.0 + 1e-12) {
                    params = trial;
                    r = r_trial;
                    rss = rss_trial;
                }
                converged = true;
                break;
            }
            first_trial = false;
            lambda *= 10.0;
        }
        if converged || !accepted {
            break;
        }
    }

    let residual_variance = rss / n;
    let jac = jacobian(model, xs, &params);
    let jtj = jac.transpose() * &jac;
    let covariance = jtj
        .try_inverse()
        .filter(|m| m.iter().all(|v| v.is_finite()))
        .map(|m| m * residual_variance);
    if covariance.is_none() {
        converged = false;
    }
    Ok(LmResult {
        params,
        covariance,
        residual_variance,
        converged,
        iterations,
    })
}

/// Outcome of fitting `ACF(l) ≈ l^{−β}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub beta: f64,
    pub beta_se: f64,
    pub residual_variance: f64,
    pub lags_used: Vec<usize>,
    pub converged: bool,
}

struct PowerLaw;

impl CurveModel for PowerLaw {
    fn n_params(&self) -> usize {
        1
    }

    fn eval(&self, l: f64, p: &[f64]) -> f64 {
        l.powf(-p[0])
    }

    fn gradient(&self, l: f64, p: &[f64], out: &mut [f64]) -> bool {
        out[0] = -l.ln() * l.powf(-p[0]);
        true
    }
}

/// Fits `l^{−β}` to the ACF values at the requested lags.
pub fn fit_power_law(acf: &AcfEstimate, lags: &[usize]) -> Result<PowerLawFit> {
    let values = lags
        .iter()
        .map(|&l| {
            acf.value_at(l).ok_or_else(|| {
                Error::InvalidInput(format!("lag {l} not present in the ACF estimate"))
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    fit_power_law_values(lags, &values)
}

pub fn fit_power_law_values(lags: &[usize], values: &[f64]) -> Result<PowerLawFit> {
    if lags.is_empty() || lags.contains(&0) {
        return Err(Error::InvalidInput(
            "lag set must be nonempty with lags ≥ 1".into(),
        ));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite ACF value".into()));
    }
    if values.iter().all(|&v| v <= 0.0) {
        return Err(Error::FitDomain("all ACF values are non-positive".into()));
    }
    let xs: Vec<f64> = lags.iter().map(|&l| l as f64).collect();
    let initial = log_log_guess(&xs, values).unwrap_or(0.3);
    let fit = lm_minimize(&PowerLaw, &xs, values, &[initial], &LmConfig::default())?;
    let beta_se = fit
        .covariance
        .as_ref()
        .map_or(f64::NAN, |c| c[(0, 0)].max(0.0).sqrt());
    Ok(PowerLawFit {
        beta: fit.params[0],
        beta_se,
        residual_variance: fit.residual_variance,
        lags_used: lags.to_vec(),
        converged: fit.converged && beta_se.is_finite(),
    })
}

/// Slope of `ln ACF` on `ln l` over the positive values.
fn log_log_guess(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(_, &y)| y > 0.0)
        .map(|(&x, &y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let beta = -sxy / sxx;
    beta.is_finite().then_some(beta)
}
