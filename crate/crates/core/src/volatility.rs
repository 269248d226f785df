//! Realized-volatility estimators over rolling windows.
//!
//! A window of `n` intervals ending at bar `j` covers bars `j-n+1..=j`. The
//! Basic estimator uses the close-to-close returns of those intervals, which
//! needs the close of bar `j-n` as well, so the first window ends at bar `n`
//! for every estimator kind.
//!
//! Basic returns a variance; Parkinson and Rogers–Satchell return
//! standard-deviation-scale values. [`VolScale::Std`] square-roots the Basic
//! output so all three can share an axis.

use serde::{Deserialize, Serialize};

use crate::series::{OhlcBar, PriceSeries};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolatilityEstimatorKind {
    Basic,
    Parkinson,
    RogersSatchell,
}

impl VolatilityEstimatorKind {
    pub const ALL: [Self; 3] = [Self::Basic, Self::Parkinson, Self::RogersSatchell];

    pub fn name(self) -> &'static str {
        match self {
            Self::Basic => "basic",
            Self::Parkinson => "parkinson",
            Self::RogersSatchell => "rogers_satchell",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VolatilityWindow {
    pub n: usize,
    pub stride: usize,
}

impl VolatilityWindow {
    pub fn new(n: usize, stride: usize) -> Self {
        Self { n, stride }
    }

    /// Non-overlapping windows.
    pub fn blocks(n: usize) -> Self {
        Self { n, stride: n }
    }

    pub fn check(&self, kind: VolatilityEstimatorKind) -> Result<()> {
        let needed = if kind == VolatilityEstimatorKind::Basic {
            2
        } else {
            1
        };
        if self.n < needed {
            return Err(Error::DegenerateWindow {
                needed,
                got: self.n,
            });
        }
        if self.stride == 0 {
            return Err(Error::InvalidInput("window stride must be >= 1".into()));
        }
        Ok(())
    }
}

/// Default windows by sampling scale: 12 for monthly bars, 21 for daily bars,
/// one trading day of bars otherwise.
pub fn default_window_for_step(step_secs: i64) -> usize {
    const DAY: i64 = 86_400;
    if step_secs >= 28 * DAY {
        12
    } else if step_secs >= DAY {
        21
    } else {
        // 6.5 trading hours.
        ((23_400 / step_secs.max(1)) as usize).max(2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolScale {
    /// Variance for Basic, standard deviation for the range estimators.
    Native,
    /// Standard deviation for all three.
    Std,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolatilitySeries {
    pub kind: VolatilityEstimatorKind,
    pub window: VolatilityWindow,
    pub scale: VolScale,
    pub values: Vec<f64>,
    /// Timestamp of the last bar of each window.
    pub timestamps: Vec<i64>,
    /// Index of the last bar of each window.
    pub end_bars: Vec<usize>,
    /// Windows whose Rogers–Satchell radicand was materially negative.
    pub domain_warnings: usize,
}

impl VolatilitySeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Index into the close-to-close return series of the last return inside
    /// each window (return `i` runs from close `i` to close `i+1`).
    pub fn end_returns(&self) -> impl Iterator<Item = usize> + '_ {
        self.end_bars.iter().map(|&j| j - 1)
    }
}

/// Sample variance of per-step log-returns, `1/(n-1) Σ (r_k - r̄)²`.
pub fn basic_volatility(returns: &[f64]) -> Result<f64> {
    let n = returns.len();
    if n < 2 {
        return Err(Error::DegenerateWindow { needed: 2, got: n });
    }
    let mean = returns.iter().sum::<f64>() / n as f64;
    let ss: f64 = returns.iter().map(|r| (r - mean).powi(2)).sum();
    Ok(ss / (n - 1) as f64)
}

/// `sqrt( 1/(4 n ln 2) Σ ln(high/low)² )`.
pub fn parkinson_volatility(bars: &[OhlcBar]) -> Result<f64> {
    if bars.is_empty() {
        return Err(Error::DegenerateWindow { needed: 1, got: 0 });
    }
    let mut sum = 0.0;
    for b in bars {
        if b.high < b.low {
            return Err(Error::Invariant(format!(
                "high {} below low {} at {}",
                b.high, b.low, b.timestamp
            )));
        }
        sum += (b.high / b.low).ln().powi(2);
    }
    Ok((sum / (4.0 * bars.len() as f64 * std::f64::consts::LN_2)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RsEstimate {
    pub value: f64,
    /// Radicand was below `-1e-12` relative to the summed term magnitudes.
    pub domain_warning: bool,
}

/// `sqrt( 1/n Σ [ln(h/c) ln(h/o) + ln(l/c) ln(l/o)] )`, clamped at zero.
pub fn rogers_satchell_volatility(bars: &[OhlcBar]) -> Result<RsEstimate> {
    if bars.is_empty() {
        return Err(Error::DegenerateWindow { needed: 1, got: 0 });
    }
    let mut sum = 0.0;
    let mut magnitude = 0.0;
    for b in bars {
        let up = (b.high / b.close).ln() * (b.high / b.open).ln();
        let down = (b.low / b.close).ln() * (b.low / b.open).ln();
        sum += up + down;
        magnitude += up.abs() + down.abs();
    }
    let radicand = sum / bars.len() as f64;
    if radicand >= 0.0 {
        return Ok(RsEstimate {
            value: radicand.sqrt(),
            domain_warning: false,
        });
    }
    let relative = -sum / magnitude.max(f64::MIN_POSITIVE);
    Ok(RsEstimate {
        value: 0.0,
        domain_warning: relative > 1e-12,
    })
}

pub fn rolling_volatility(
    series: &PriceSeries,
    kind: VolatilityEstimatorKind,
    window: VolatilityWindow,
    scale: VolScale,
) -> Result<VolatilitySeries> {
    window.check(kind)?;
    let bars = series.bars();
    let n = window.n;
    if bars.len() <= n {
        return Err(Error::EmptyOutput(format!(
            "series of {} bars is shorter than one window of {n} intervals",
            bars.len()
        )));
    }
    let mut values = Vec::new();
    let mut timestamps = Vec::new();
    let mut end_bars = Vec::new();
    let mut domain_warnings = 0;
    let mut returns = Vec::with_capacity(n);
    for j in (n..bars.len()).step_by(window.stride) {
        let value = match kind {
            VolatilityEstimatorKind::Basic => {
                returns.clear();
                returns.extend((j - n..j).map(|k| (bars[k + 1].close / bars[k].close).ln()));
                let var = basic_volatility(&returns)?;
                match scale {
                    VolScale::Native => var,
                    VolScale::Std => var.sqrt(),
                }
            }
            VolatilityEstimatorKind::Parkinson => parkinson_volatility(&bars[j + 1 - n..=j])?,
            VolatilityEstimatorKind::RogersSatchell => {
                let est = rogers_satchell_volatility(&bars[j + 1 - n..=j])?;
                domain_warnings += usize::from(est.domain_warning);
                est.value
            }
        };
        values.push(value);
        timestamps.push(bars[j].timestamp);
        end_bars.push(j);
    }
    Ok(VolatilitySeries {
        kind,
        window,
        scale,
        values,
        timestamps,
        end_bars,
        domain_warnings,
    })
}
