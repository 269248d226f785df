//! The eleven stylized-fact procedures.
//!
//! Each procedure turns a price or return series into a [`FactVerdict`]. Every
//! threshold lives in [`FactConfig`]; the defaults are operational choices, since
//! the underlying criteria are qualitative.

mod bootstrap;
mod clustering;
mod gaussianity;
mod intermittency;
mod returns;
mod tails;
mod zumbach;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use bootstrap::circular_block_indices;
pub use clustering::{test_leverage, test_volatility_clustering, test_volume_volatility};
pub use gaussianity::{aggregation_ladder, test_aggregational_gaussianity};
pub use intermittency::{
    excursion_lengths, test_intermittency, ExcursionProfile, EXCURSION_LEVELS,
};
pub use returns::{test_absence_autocorrelation, test_slow_decay};
pub use tails::{
    conditional_residuals, test_conditional_tail, test_gain_loss_asymmetry,
    test_unconditional_tail, trailing_standardized,
};
pub use zumbach::{
    bar_range_proxy, test_time_scale_asymmetry, zumbach_statistic, zumbach_with_band, ZumbachResult,
};

use crate::rng::derive_seed;
use crate::series::{compute_log_returns, PriceSeries};
use crate::volatility::{default_window_for_step, VolatilityEstimatorKind};
use crate::Error;

/// Facts in the order of the canonical list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FactId {
    F1,
    F2,
    F3,
    F4,
    F5,
    F6,
    F7,
    F8,
    F9,
    F10,
    F11,
}

impl FactId {
    pub const ALL: [FactId; 11] = [
        FactId::F1,
        FactId::F2,
        FactId::F3,
        FactId::F4,
        FactId::F5,
        FactId::F6,
        FactId::F7,
        FactId::F8,
        FactId::F9,
        FactId::F10,
        FactId::F11,
    ];

    pub fn title(self) -> &'static str {
        match self {
            FactId::F1 => "absence of autocorrelations",
            FactId::F2 => "slow decay of autocorrelation in absolute returns",
            FactId::F3 => "intermittency",
            FactId::F4 => "volatility clustering",
            FactId::F5 => "leverage effect",
            FactId::F6 => "volume/volatility correlation",
            FactId::F7 => "conditional heavy tails",
            FactId::F8 => "unconditional heavy tails",
            FactId::F9 => "gain/loss asymmetry",
            FactId::F10 => "aggregational Gaussianity",
            FactId::F11 => "asymmetry in time scales",
        }
    }

    pub fn parse(s: &str) -> Option<FactId> {
        FactId::ALL
            .into_iter()
            .find(|f| f.to_string().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for FactId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactStatus {
    Supported,
    NotSupported,
    Inconclusive,
}

impl FactStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            FactStatus::Supported => "supported",
            FactStatus::NotSupported => "not_supported",
            FactStatus::Inconclusive => "inconclusive",
        }
    }

    fn from_bool(supported: bool) -> Self {
        if supported {
            FactStatus::Supported
        } else {
            FactStatus::NotSupported
        }
    }
}

/// Tabular plot data behind a verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Curve {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Curve {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactVerdict {
    pub fact: FactId,
    pub status: FactStatus,
    pub metrics: BTreeMap<String, f64>,
    #[serde(skip)]
    pub curves: Vec<Curve>,
    pub notes: Vec<String>,
}

impl FactVerdict {
    fn new(fact: FactId) -> Self {
        FactVerdict {
            fact,
            status: FactStatus::Inconclusive,
            metrics: BTreeMap::new(),
            curves: Vec::new(),
            notes: Vec::new(),
        }
    }

    /// Records a metric; non-finite values become a note instead, keeping the
    /// report valid JSON.
    fn metric(&mut self, name: &str, value: f64) {
        if value.is_finite() {
            self.metrics.insert(name.to_string(), value);
        } else {
            self.notes.push(format!("{name} is not finite"));
        }
    }

    fn flag(&mut self, name: &str, value: bool) {
        self.metrics
            .insert(name.to_string(), if value { 1.0 } else { 0.0 });
    }

    fn decide(mut self, supported: bool) -> Self {
        self.status = FactStatus::from_bool(supported);
        self
    }

    /// Inconclusive outcome carrying the sample size and the reason.
    fn inconclusive(fact: FactId, n: usize, reason: impl fmt::Display) -> Self {
        let mut v = FactVerdict::new(fact);
        v.metric("n", n as f64);
        v.notes.push(reason.to_string());
        v
    }
}

fn inconclusive_from(fact: FactId, n: usize, err: &Error) -> FactVerdict {
    FactVerdict::inconclusive(fact, n, err)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct F1Config {
    pub max_lag: usize,
    pub confidence_level: f64,
    /// Minimum share of lags inside the band.
    pub inside_fraction: f64,
    pub min_returns: usize,
}

impl Default for F1Config {
    fn default() -> Self {
        F1Config {
            max_lag: 50,
            confidence_level: 0.95,
            inside_fraction: 0.9,
            min_returns: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct F2Config {
    /// Exponent applied to absolute returns before the ACF.
    pub power: u32,
    pub max_lag: usize,
    pub confidence_level: f64,
    pub beta_range: [f64; 2],
    pub min_returns: usize,
}

impl Default for F2Config {
    fn default() -> Self {
        F2Config {
            power: 1,
            max_lag: 100,
            confidence_level: 0.95,
            beta_range: [0.2, 0.4],
            min_returns: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct F3Config {
    pub min_segment: usize,
    pub adf_level: f64,
    /// Supported when `d_garch < ratio · d_ou`.
    pub distance_ratio: f64,
    pub vol_acf_max_lag: usize,
}

impl Default for F3Config {
    fn default() -> Self {
        F3Config {
            min_segment: 500,
            adf_level: 0.05,
            distance_ratio: 0.5,
            vol_acf_max_lag: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct F4Config {
    /// Lags `1..=k0` must all sit above the band.
    pub k0: usize,
    pub confidence_level: f64,
    pub min_windows: usize,
    pub max_lag: usize,
}

impl Default for F4Config {
    fn default() -> Self {
        F4Config {
            k0: 5,
            confidence_level: 0.95,
            min_windows: 100,
            max_lag: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct F5Config {
    pub max_lag: usize,
    pub confidence_level: f64,
    /// Share of positive lags that must fall below the band.
    pub fraction: f64,
    pub proxy: VolatilityEstimatorKind,
    pub min_points: usize,
}

impl Default for F5Config {
    fn default() -> Self {
        F5Config {
            max_lag: 10,
            confidence_level: 0.90,
            fraction: 0.6,
            proxy: VolatilityEstimatorKind::Basic,
            min_points: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct F6Config {
    pub resamples: usize,
    pub confidence_level: f64,
    pub min_volume_fraction: f64,
    pub min_windows: usize,
}

impl Default for F6Config {
    fn default() -> Self {
        F6Config {
            resamples: 1000,
            confidence_level: 0.95,
            min_volume_fraction: 0.8,
            min_windows: 30,
        }
    }
}

/// Shared by the tail facts F7, F8 and F9.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TailConfig {
    pub tail_fraction: f64,
    pub min_r_squared: f64,
    /// Required gap to the Gaussian reference, in joint standard errors.
    pub reference_gap_se: f64,
    /// Required left/right gap for gain/loss asymmetry, in joint standard errors.
    pub asymmetry_gap_se: f64,
    pub min_returns: usize,
}

impl Default for TailConfig {
    fn default() -> Self {
        TailConfig {
            tail_fraction: crate::fitting::DEFAULT_TAIL_FRACTION,
            min_r_squared: 0.95,
            reference_gap_se: 3.0,
            asymmetry_gap_se: 2.0,
            min_returns: 5000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct F10Config {
    pub first_scale: usize,
    pub scale_ratio: usize,
    pub min_returns_at_scale: usize,
    pub step_fraction: f64,
    pub level: f64,
}

impl Default for F10Config {
    fn default() -> Self {
        F10Config {
            first_scale: 2,
            scale_ratio: 4,
            min_returns_at_scale: 100,
            step_fraction: 0.75,
            level: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct F11Config {
    pub max_lag: usize,
    pub resamples: usize,
    pub confidence_level: f64,
    /// Share of lags whose Z must leave the band with the dominant sign.
    pub fraction: f64,
    /// Centre `σ̂²` with its sum instead of its mean.
    pub literal_sum_centering: bool,
}

impl Default for F11Config {
    fn default() -> Self {
        F11Config {
            max_lag: 10,
            resamples: 1000,
            confidence_level: 0.95,
            fraction: 0.5,
            literal_sum_centering: false,
        }
    }
}

#[derive(Default, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FactConfig {
    /// Seed for every stochastic step (bootstraps, reference samples, benchmark paths).
    pub seed: u64,
    /// Rolling volatility window in bars; `None` picks one from the grid step.
    pub vol_window: Option<usize>,
    pub f1: F1Config,
    pub f2: F2Config,
    pub f3: F3Config,
    pub f4: F4Config,
    pub f5: F5Config,
    pub f6: F6Config,
    pub tails: TailConfig,
    pub f10: F10Config,
    pub f11: F11Config,
}

impl FactConfig {
    pub fn window_for(&self, series: &PriceSeries) -> usize {
        self.vol_window
            .unwrap_or_else(|| default_window_for_step(series.grid.step_secs))
    }

    pub(crate) fn seed_for(&self, label: &str) -> u64 {
        derive_seed(self.seed, label)
    }
}

/// Runs the selected facts on one price series, in the order given.
pub fn run_facts(series: &PriceSeries, facts: &[FactId], config: &FactConfig) -> Vec<FactVerdict> {
    let returns = match compute_log_returns(series) {
        Ok(r) => r.values,
        Err(e) => {
            return facts
                .iter()
                .map(|&f| inconclusive_from(f, series.len(), &e))
                .collect()
        }
    };
    facts
        .iter()
        .map(|&fact| match fact {
            FactId::F1 => test_absence_autocorrelation(&returns, config),
            FactId::F2 => test_slow_decay(&returns, config),
            FactId::F3 => test_intermittency(series, config),
            FactId::F4 => test_volatility_clustering(series, config),
            FactId::F5 => test_leverage(series, config),
            FactId::F6 => test_volume_volatility(series, config),
            FactId::F7 => test_conditional_tail(&returns, config),
            FactId::F8 => test_unconditional_tail(&returns, config.window_for(series), config),
            FactId::F9 => test_gain_loss_asymmetry(&returns, config.window_for(series), config),
            FactId::F10 => test_aggregational_gaussianity(&returns, config),
            FactId::F11 => test_time_scale_asymmetry(series, config),
        })
        .collect()
}

/// First lag whose value lies inside `±band`, if any.
fn first_lag_inside(values: &[f64], bands: &[f64]) -> Option<usize> {
    values
        .iter()
        .zip(bands)
        .position(|(v, b)| v.abs() <= *b)
        .map(|i| i + 1)
}
