//! Seeded synthetic price paths used as positive and negative controls.
//!
//! A bar spans `m` sub-steps from the previous close to its own close, so the
//! first bar of a path is flat at the initial price. Each draw family uses its
//! own ChaCha stream: stream 0 for the path, 1 for intrabar extremes, 2 for
//! volume. Switching extremes or volume on or off leaves the path unchanged.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::fitting::{GarchParams, OuParams};
use crate::rng::{stream, SimRng};
use crate::series::{OhlcBar, PriceSeries, SamplingGrid};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbmParams {
    /// Log-price drift per bar.
    pub mu: f64,
    /// Log-price volatility per bar.
    pub sigma: f64,
    pub s0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GjrParams {
    pub omega: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub beta: f64,
    #[serde(default)]
    pub mean: f64,
}

impl GjrParams {
    pub fn persistence(&self) -> f64 {
        self.alpha + self.gamma / 2.0 + self.beta
    }

    pub fn unconditional_variance(&self) -> f64 {
        self.omega / (1.0 - self.persistence())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelParams {
    Gbm(GbmParams),
    /// OU process on the log-price.
    Ou(OuParams),
    Garch11(GarchParams),
    Gjr(GjrParams),
}

impl ModelParams {
    pub fn name(&self) -> &'static str {
        match self {
            ModelParams::Gbm(_) => "gbm",
            ModelParams::Ou(_) => "ou",
            ModelParams::Garch11(_) => "garch11",
            ModelParams::Gjr(_) => "gjr",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let reject = |msg: String| Err(Error::RejectedSpec(msg));
        match *self {
            ModelParams::Gbm(p) => {
                if !(p.sigma > 0.0
                    && p.s0 > 0.0
                    && p.mu.is_finite()
                    && p.sigma.is_finite()
                    && p.s0.is_finite())
                {
                    return reject(format!("GBM needs sigma > 0 and s0 > 0: {p:?}"));
                }
            }
            ModelParams::Ou(p) => {
                p.validate()
                    .map_err(|e| Error::RejectedSpec(e.to_string()))?;
            }
            ModelParams::Garch11(p) => {
                p.validate()
                    .map_err(|e| Error::RejectedSpec(e.to_string()))?;
            }
            ModelParams::Gjr(p) => {
                let finite = [p.omega, p.alpha, p.gamma, p.beta, p.mean]
                    .iter()
                    .all(|v| v.is_finite());
                if !finite || p.omega <= 0.0 || p.alpha < 0.0 || p.gamma < 0.0 || p.beta < 0.0 {
                    return reject(format!("GJR parameters out of range: {p:?}"));
                }
                if p.persistence() >= 1.0 {
                    return reject(format!(
                        "GJR alpha + gamma/2 + beta = {} must be < 1",
                        p.persistence()
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Standardised innovation law for the conditional-variance models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Innovations {
    #[default]
    Gaussian,
    /// Student-t rescaled to unit variance; needs `dof > 2`.
    StudentT { dof: f64 },
}

/// Time scale at which the variance recursion runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Recursion {
    /// One update per bar; the intrabar path is a Brownian bridge to the bar return.
    #[default]
    Bar,
    /// One update per sub-step; bar returns aggregate `m` conditional draws.
    Substep,
}

/// How bar highs and lows are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Extremes {
    /// Extremes of the continuous Brownian bridge between sub-steps.
    #[default]
    Bridge,
    /// Largest and smallest sub-step price.
    Discrete,
}

/// Synthetic volume `scale · (|r_t| / sd + noise · E_t)` with `E_t ~ Exp(1)` and
/// `sd` the model's unconditional per-bar standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeModel {
    pub scale: f64,
    pub noise: f64,
}

pub const DEFAULT_SUBSTEPS: usize = 16;
pub const BURN_IN: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub params: ModelParams,
    /// Number of bar returns; the path has `n_steps + 1` bars.
    pub n_steps: usize,
    pub substeps_per_bar: usize,
    pub seed: u64,
    #[serde(default)]
    pub innovations: Innovations,
    #[serde(default)]
    pub recursion: Recursion,
    #[serde(default)]
    pub extremes: Extremes,
    #[serde(default)]
    pub volume: Option<VolumeModel>,
    pub step_secs: i64,
    pub start_timestamp: i64,
    pub asset_id: String,
}

impl SimSpec {
    /// Daily bars from 2000-01-01 with 16 sub-steps, Gaussian innovations and no volume.
    pub fn new(params: ModelParams, n_steps: usize, seed: u64) -> Self {
        SimSpec {
            params,
            n_steps,
            substeps_per_bar: DEFAULT_SUBSTEPS,
            seed,
            innovations: Innovations::Gaussian,
            recursion: Recursion::Bar,
            extremes: Extremes::Bridge,
            volume: None,
            step_secs: 86_400,
            start_timestamp: 946_684_800,
            asset_id: format!("sim-{}", params.name()),
        }
    }

    fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.n_steps < 2 {
            return Err(Error::RejectedSpec(format!(
                "n_steps {} must be at least 2",
                self.n_steps
            )));
        }
        if self.substeps_per_bar == 0 {
            return Err(Error::RejectedSpec(
                "substeps_per_bar must be at least 1".into(),
            ));
        }
        if self.step_secs <= 0 {
            return Err(Error::RejectedSpec("step_secs must be positive".into()));
        }
        if let Innovations::StudentT { dof } = self.innovations {
            if !(dof > 2.0) {
                return Err(Error::RejectedSpec(format!(
                    "Student-t dof {dof} must exceed 2"
                )));
            }
        }
        if let Some(v) = self.volume {
            if !(v.scale > 0.0 && v.noise >= 0.0) {
                return Err(Error::RejectedSpec(format!(
                    "volume model out of range: {v:?}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub prices: PriceSeries,
    /// Conditional variance of each bar return, for the GARCH-type models.
    pub variances: Option<Vec<f64>>,
}

/// Log-price path on the sub-step grid: `n_steps·m + 1` points, with the
/// diffusion variance of every sub-step interval.
struct SubstepPath {
    log_prices: Vec<f64>,
    step_variance: Vec<f64>,
    bar_variances: Option<Vec<f64>>,
}

fn innovation(rng: &mut SimRng, law: Innovations) -> f64 {
    match law {
        Innovations::Gaussian => StandardNormal.sample(rng),
        Innovations::StudentT { dof } => {
            let t: f64 = StudentT::new(dof).expect("dof validated").sample(rng);
            t * ((dof - 2.0) / dof).sqrt()
        }
    }
}

/// Appends a Brownian bridge from the last point to `last + total`, built from
/// `m` Gaussian increments of variance `var` each.
fn push_bridge(
    rng: &mut SimRng,
    path: &mut Vec<f64>,
    steps: &mut Vec<f64>,
    total: f64,
    m: usize,
    var: f64,
) {
    let start = *path.last().expect("path starts with a point");
    let sd = var.sqrt();
    let mut walk = Vec::with_capacity(m);
    let mut acc = 0.0;
    for _ in 0..m {
        acc += sd * Distribution::<f64>::sample(&StandardNormal, rng);
        walk.push(acc);
    }
    let end = acc;
    for (k, w) in walk.iter().enumerate() {
        let frac = (k + 1) as f64 / m as f64;
        path.push(start + frac * total + (w - frac * end));
        steps.push(var);
    }
    // Pin the last point exactly.
    *path.last_mut().expect("m ≥ 1") = start + total;
}

fn gbm_path(p: &GbmParams, n: usize, m: usize, rng: &mut SimRng) -> SubstepPath {
    let var = p.sigma * p.sigma / m as f64;
    let drift = p.mu / m as f64;
    let sd = var.sqrt();
    let mut log_prices = Vec::with_capacity(n * m + 1);
    let mut x = p.s0.ln();
    log_prices.push(x);
    for _ in 0..n * m {
        x += drift + sd * Distribution::<f64>::sample(&StandardNormal, rng);
        log_prices.push(x);
    }
    SubstepPath {
        log_prices,
        step_variance: vec![var; n * m],
        bar_variances: None,
    }
}

fn ou_path(p: &OuParams, n: usize, m: usize, start: Option<f64>, rng: &mut SimRng) -> SubstepPath {
    let dt = 1.0 / m as f64;
    let b = (-p.theta * dt).exp();
    let sd = (p.sigma * p.sigma * (1.0 - b * b) / (2.0 * p.theta)).sqrt();
    let stationary_sd = p.sigma / (2.0 * p.theta).sqrt();
    let mut x = match start {
        Some(x0) => x0,
        None => p.mu + stationary_sd * Distribution::<f64>::sample(&StandardNormal, rng),
    };
    let mut log_prices = Vec::with_capacity(n * m + 1);
    log_prices.push(x);
    for _ in 0..n * m {
        x = p.mu + b * (x - p.mu) + sd * Distribution::<f64>::sample(&StandardNormal, rng);
        log_prices.push(x);
    }
    SubstepPath {
        log_prices,
        step_variance: vec![p.sigma * p.sigma * dt; n * m],
        bar_variances: None,
    }
}

/// Shared driver for GARCH(1,1) and GJR: `h' = ω + (α + γ·1{e<0}) e² + β h`.
struct Recurrence {
    omega: f64,
    alpha: f64,
    gamma: f64,
    beta: f64,
    mean: f64,
    unconditional: f64,
}

impl Recurrence {
    fn next(&self, e: f64, h: f64) -> f64 {
        let shock = if e < 0.0 {
            self.alpha + self.gamma
        } else {
            self.alpha
        };
        self.omega + shock * e * e + self.beta * h
    }
}

fn conditional_path(rec: &Recurrence, spec: &SimSpec, rng: &mut SimRng) -> SubstepPath {
    let (n, m) = (spec.n_steps, spec.substeps_per_bar);
    let mut log_prices = Vec::with_capacity(n * m + 1);
    let mut step_variance = Vec::with_capacity(n * m);
    let mut bar_variances = Vec::with_capacity(n);
    log_prices.push(0.0);
    let mut h = rec.unconditional;
    match spec.recursion {
        Recursion::Bar => {
            for _ in 0..BURN_IN {
                let e = h.sqrt() * innovation(rng, spec.innovations);
                h = rec.next(e, h);
            }
            for _ in 0..n {
                let e = h.sqrt() * innovation(rng, spec.innovations);
                bar_variances.push(h);
                push_bridge(
                    rng,
                    &mut log_prices,
                    &mut step_variance,
                    rec.mean + e,
                    m,
                    h / m as f64,
                );
                h = rec.next(e, h);
            }
        }
        Recursion::Substep => {
            for _ in 0..BURN_IN {
                let e = h.sqrt() * innovation(rng, spec.innovations);
                h = rec.next(e, h);
            }
            let mut x = 0.0;
            let sub_mean = rec.mean / m as f64;
            for _ in 0..n {
                let mut bar_var = 0.0;
                for _ in 0..m {
                    let e = h.sqrt() * innovation(rng, spec.innovations);
                    bar_var += h;
                    step_variance.push(h);
                    x += sub_mean + e;
                    log_prices.push(x);
                    h = rec.next(e, h);
                }
                bar_variances.push(bar_var);
            }
        }
    }
    SubstepPath {
        log_prices,
        step_variance,
        bar_variances: Some(bar_variances),
    }
}

/// Bar-level conditional variance at which the model's returns are scaled.
fn reference_variance(spec: &SimSpec) -> f64 {
    let per_recursion = match spec.params {
        ModelParams::Gbm(p) => return p.sigma * p.sigma,
        ModelParams::Ou(p) => return p.sigma * p.sigma,
        ModelParams::Garch11(p) => p.unconditional_variance(),
        ModelParams::Gjr(p) => p.unconditional_variance(),
    };
    match spec.recursion {
        Recursion::Bar => per_recursion,
        Recursion::Substep => per_recursion * spec.substeps_per_bar as f64,
    }
}

/// Generates the path described by `spec`.
pub fn simulate(spec: &SimSpec) -> Result<SimOutput> {
    spec.validate()?;
    let (n, m) = (spec.n_steps, spec.substeps_per_bar);
    let mut rng = stream(spec.seed, 0);
    let path = match spec.params {
        ModelParams::Gbm(p) => gbm_path(&p, n, m, &mut rng),
        ModelParams::Ou(p) => ou_path(&p, n, m, None, &mut rng),
        ModelParams::Garch11(p) => conditional_path(
            &Recurrence {
                omega: p.omega,
                alpha: p.alpha,
                gamma: 0.0,
                beta: p.beta,
                mean: p.mean,
                unconditional: p.unconditional_variance(),
            },
            spec,
            &mut rng,
        ),
        ModelParams::Gjr(p) => conditional_path(
            &Recurrence {
                omega: p.omega,
                alpha: p.alpha,
                gamma: p.gamma,
                beta: p.beta,
                mean: p.mean,
                unconditional: p.unconditional_variance(),
            },
            spec,
            &mut rng,
        ),
    };
    // GARCH-type paths start at log-price 0; anchor them at 100.
    let offset = match spec.params {
        ModelParams::Garch11(_) | ModelParams::Gjr(_) => 100f64.ln(),
        _ => 0.0,
    };
    let mut extremes_rng = stream(spec.seed, 1);
    let mut volume_rng = stream(spec.seed, 2);
    let ref_sd = reference_variance(spec).sqrt();
    let lp = &path.log_prices;
    let mut bars = Vec::with_capacity(n + 1);
    bars.push(OhlcBar::flat(
        spec.start_timestamp,
        (lp[0] + offset).exp(),
        spec.volume.map(|_| 0.0),
    ));
    for j in 0..n {
        let seg = &lp[j * m..=(j + 1) * m];
        let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
        for k in 0..m {
            let (a, b) = (seg[k], seg[k + 1]);
            match spec.extremes {
                Extremes::Discrete => {
                    hi = hi.max(a.max(b));
                    lo = lo.min(a.min(b));
                }
                Extremes::Bridge => {
                    let v = path.step_variance[j * m + k];
                    let u1: f64 = 1.0 - extremes_rng.random::<f64>();
                    let u2: f64 = 1.0 - extremes_rng.random::<f64>();
                    let d2 = (b - a) * (b - a);
                    hi = hi.max(0.5 * (a + b + (d2 - 2.0 * v * u1.ln()).sqrt()));
                    lo = lo.min(0.5 * (a + b - (d2 - 2.0 * v * u2.ln()).sqrt()));
                }
            }
        }
        let (open, close) = ((seg[0] + offset).exp(), (seg[m] + offset).exp());
        let volume = spec.volume.map(|vm| {
            let r = seg[m] - seg[0];
            let e: f64 = Exp1.sample(&mut volume_rng);
            vm.scale * (r.abs() / ref_sd + vm.noise * e)
        });
        bars.push(OhlcBar {
            timestamp: spec.start_timestamp + (j as i64 + 1) * spec.step_secs,
            open,
            // Rounding in exp can put an extreme a hair inside the endpoints.
            high: (hi + offset).exp().max(open).max(close),
            low: (lo + offset).exp().min(open).min(close),
            close,
            volume,
        });
    }
    let grid = SamplingGrid::new(spec.step_secs)?;
    let prices = PriceSeries::new(spec.asset_id.clone(), grid, bars)?;
    Ok(SimOutput {
        prices,
        variances: path.bar_variances,
    })
}

/// OU levels at unit steps from the exact transition, started at `start` or, when
/// that is `None`, in the stationary law.
pub fn simulate_ou_levels(
    params: &OuParams,
    n: usize,
    start: Option<f64>,
    seed: u64,
) -> Result<Vec<f64>> {
    params
        .validate()
        .map_err(|e| Error::RejectedSpec(e.to_string()))?;
    let mut rng = stream(seed, 0);
    let path = ou_path(params, n.saturating_sub(1), 1, start, &mut rng);
    Ok(path.log_prices)
}

/// Groups consecutive sub-step prices into bars of `m`.
///
/// Open and close are the first and last sub-step of each group; high and low
/// are the group maximum and minimum. A trailing partial group is dropped and
/// reported in the returned warnings.
pub fn paths_to_bars(
    asset_id: &str,
    grid: SamplingGrid,
    start_timestamp: i64,
    prices: &[f64],
    m: usize,
) -> Result<(PriceSeries, Vec<String>)> {
    if m == 0 {
        return Err(Error::InvalidInput("m must be at least 1".into()));
    }
    if let Some(i) = prices.iter().position(|p| !(p.is_finite() && *p > 0.0)) {
        return Err(Error::NonPositivePrice {
            index: i,
            price: prices[i],
        });
    }
    let mut warnings = Vec::new();
    let remainder = prices.len() % m;
    if remainder != 0 {
        warnings.push(format!(
            "dropped {remainder} trailing sub-steps that do not fill a bar of {m}"
        ));
    }
    let bars = prices
        .chunks_exact(m)
        .enumerate()
        .map(|(i, c)| OhlcBar {
            timestamp: start_timestamp + i as i64 * grid.step_secs,
            open: c[0],
            high: c.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            low: c.iter().copied().fold(f64::INFINITY, f64::min),
            close: c[m - 1],
            volume: None,
        })
        .collect();
    Ok((PriceSeries::new(asset_id, grid, bars)?, warnings))
}
