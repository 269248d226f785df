//! Bars, log-returns and grid validation.
//!
//! Timestamps are UTC epoch seconds. After validation a series is treated as a
//! sequence of grid indices: calendar irregularities beyond the session mask are
//! not modelled.

use std::io::{Read, Write};

use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One OHLCV bar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OhlcBar {
    pub timestamp: i64,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub volume: Option<f64>,
}

impl OhlcBar {
    /// A bar with all four prices equal.
    pub fn flat(timestamp: i64, price: f64, volume: Option<f64>) -> Self {
        Self {
            timestamp,
            open: price,
            high: price,
            low: price,
            close: price,
            volume,
        }
    }

    pub fn check(&self, index: usize) -> Result<()> {
        for p in [self.open, self.high, self.low, self.close] {
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::NonPositivePrice { index, price: p });
            }
        }
        if self.low > self.open.min(self.close) || self.high < self.open.max(self.close) {
            return Err(Error::InvalidInput(format!(
                "bar {index} violates low <= min(open, close) <= max(open, close) <= high"
            )));
        }
        if let Some(v) = self.volume {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidInput(format!("bar {index} has volume {v}")));
            }
        }
        Ok(())
    }
}

/// Trading-session mask. Grid slots outside the mask are not expected to hold bars.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionMask {
    #[serde(default)]
    pub skip_weekends: bool,
    /// Session open, seconds after UTC midnight (inclusive).
    #[serde(default)]
    pub open_secs: Option<u32>,
    /// Session close, seconds after UTC midnight (exclusive).
    #[serde(default)]
    pub close_secs: Option<u32>,
}

impl SessionMask {
    pub fn contains(&self, ts: i64) -> bool {
        if self.skip_weekends {
            // 1970-01-01 was a Thursday.
            let dow = (ts.div_euclid(86_400) + 3).rem_euclid(7); // 0 = Monday
            if dow >= 5 {
                return false;
            }
        }
        let sod = ts.rem_euclid(86_400) as u32;
        if let Some(open) = self.open_secs {
            if sod < open {
                return false;
            }
        }
        if let Some(close) = self.close_secs {
            if sod >= close {
                return false;
            }
        }
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingGrid {
    pub step_secs: i64,
    #[serde(default)]
    pub mask: Option<SessionMask>,
}

impl SamplingGrid {
    pub fn new(step_secs: i64) -> Result<Self> {
        if step_secs <= 0 {
            return Err(Error::InvalidInput(format!(
                "grid step {step_secs} must be > 0"
            )));
        }
        Ok(Self {
            step_secs,
            mask: None,
        })
    }

    pub fn with_mask(mut self, mask: SessionMask) -> Self {
        self.mask = Some(mask);
        self
    }

    fn in_session(&self, ts: i64) -> bool {
        self.mask.is_none_or(|m| m.contains(ts))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    pub asset_id: String,
    pub grid: SamplingGrid,
    bars: Vec<OhlcBar>,
}

impl PriceSeries {
    pub fn new(
        asset_id: impl Into<String>,
        grid: SamplingGrid,
        bars: Vec<OhlcBar>,
    ) -> Result<Self> {
        if bars.len() < 2 {
            return Err(Error::InsufficientData {
                needed: 2,
                got: bars.len(),
            });
        }
        for (i, bar) in bars.iter().enumerate() {
            bar.check(i)?;
        }
        for w in bars.windows(2) {
            if w[1].timestamp <= w[0].timestamp {
                return Err(Error::InvalidInput(format!(
                    "timestamps not strictly increasing at {}",
                    w[1].timestamp
                )));
            }
        }
        Ok(Self {
            asset_id: asset_id.into(),
            grid,
            bars,
        })
    }

    pub fn bars(&self) -> &[OhlcBar] {
        &self.bars
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    pub fn closes(&self) -> Vec<f64> {
        self.bars.iter().map(|b| b.close).collect()
    }

    /// Volumes, or `None` for bars without one.
    pub fn volumes(&self) -> Vec<Option<f64>> {
        self.bars.iter().map(|b| b.volume).collect()
    }

    /// Multiplies every price by `c`. Used to check scale invariance.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let bars = self
            .bars
            .iter()
            .map(|b| OhlcBar {
                open: b.open * c,
                high: b.high * c,
                low: b.low * c,
                close: b.close * c,
                ..*b
            })
            .collect();
        Self::new(self.asset_id.clone(), self.grid, bars)
    }

    /// Time-reversed series (bars in reverse order, open and close swapped,
    /// timestamps mirrored so they stay increasing).
    pub fn reversed(&self) -> Result<Self> {
        let last = self.bars.last().map_or(0, |b| b.timestamp);
        let first = self.bars.first().map_or(0, |b| b.timestamp);
        let bars = self
            .bars
            .iter()
            .rev()
            .map(|b| OhlcBar {
                timestamp: first + (last - b.timestamp),
                open: b.close,
                close: b.open,
                ..*b
            })
            .collect();
        Self::new(self.asset_id.clone(), self.grid, bars)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogReturnSeries {
    pub grid: SamplingGrid,
    pub values: Vec<f64>,
    /// Base grid steps per return.
    pub aggregation_factor: usize,
}

impl LogReturnSeries {
    pub fn from_values(grid: SamplingGrid, values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite return at {i}")));
        }
        Ok(Self {
            grid,
            values,
            aggregation_factor: 1,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `values[i] = ln(close[i+1]) - ln(close[i])`.
pub fn compute_log_returns(series: &PriceSeries) -> Result<LogReturnSeries> {
    log_returns_from_closes(series.grid, &series.closes())
}

pub(crate) fn log_returns_from_closes(
    grid: SamplingGrid,
    closes: &[f64],
) -> Result<LogReturnSeries> {
    for (index, &price) in closes.iter().enumerate() {
        if !(price.is_finite() && price > 0.0) {
            return Err(Error::NonPositivePrice { index, price });
        }
    }
    // ln of the ratio keeps returns bit-identical under power-of-two price scaling.
    let values = closes.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    Ok(LogReturnSeries {
        grid,
        values,
        aggregation_factor: 1,
    })
}

/// Sums non-overlapping blocks of `k` base returns; a trailing remainder is dropped.
pub fn aggregate_returns(returns: &LogReturnSeries, k: usize) -> Result<LogReturnSeries> {
    if k == 0 {
        return Err(Error::InvalidInput(
            "aggregation factor must be >= 1".into(),
        ));
    }
    if returns.aggregation_factor != 1 {
        return Err(Error::InvalidInput(format!(
            "expected base returns, got aggregation factor {}",
            returns.aggregation_factor
        )));
    }
    if k > returns.values.len() {
        return Err(Error::EmptyOutput(format!(
            "aggregation factor {k} exceeds series length {}",
            returns.values.len()
        )));
    }
    let values = returns
        .values
        .chunks_exact(k)
        .map(|c| c.iter().sum())
        .collect();
    Ok(LogReturnSeries {
        grid: returns.grid,
        values,
        aggregation_factor: k,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapPolicy {
    /// Keep only observed bars and treat them as consecutive grid points.
    #[default]
    DropAndReindex,
    /// Insert flat bars at the previous close with zero volume.
    ForwardFill,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapReport {
    pub expected_slots: usize,
    pub gap_count: usize,
    pub filled: usize,
    pub policy: GapPolicy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Validated {
    pub series: PriceSeries,
    pub gaps: GapReport,
}

/// Above this share of missing grid slots a series is rejected.
pub const MAX_MISSING_FRACTION: f64 = 0.20;

pub fn validate_and_gapfill(
    asset_id: &str,
    mut raw: Vec<OhlcBar>,
    grid: SamplingGrid,
    policy: GapPolicy,
) -> Result<Validated> {
    if raw.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: raw.len(),
        });
    }
    raw.sort_by_key(|b| b.timestamp);
    for w in raw.windows(2) {
        if w[0].timestamp == w[1].timestamp {
            return Err(Error::DuplicateTimestamp(w[0].timestamp));
        }
    }
    for (i, b) in raw.iter().enumerate() {
        b.check(i)?;
    }

    let first = raw[0].timestamp;
    let last = raw[raw.len() - 1].timestamp;
    for b in &raw {
        if (b.timestamp - first) % grid.step_secs != 0 {
            return Err(Error::InvalidInput(format!(
                "timestamp {} is off the {}s grid anchored at {first}",
                b.timestamp, grid.step_secs
            )));
        }
    }

    let mut out = Vec::with_capacity(raw.len());
    let mut expected = 0usize;
    let mut missing = 0usize;
    let mut next = raw.iter().peekable();
    let mut ts = first;
    while ts <= last {
        let present = next.peek().is_some_and(|b| b.timestamp == ts);
        if present {
            let bar = *next.next().unwrap();
            expected += 1;
            out.push(bar);
        } else if grid.in_session(ts) {
            expected += 1;
            missing += 1;
            if policy == GapPolicy::ForwardFill {
                let prev = out.last().expect("first slot is always present").close;
                out.push(OhlcBar::flat(ts, prev, Some(0.0)));
            }
        }
        ts += grid.step_secs;
    }

    if expected > 0 && missing as f64 > MAX_MISSING_FRACTION * expected as f64 {
        return Err(Error::DataQuality { missing, expected });
    }

    let filled = if policy == GapPolicy::ForwardFill {
        missing
    } else {
        0
    };
    Ok(Validated {
        series: PriceSeries::new(asset_id, grid, out)?,
        gaps: GapReport {
            expected_slots: expected,
            gap_count: missing,
            filled,
            policy,
        },
    })
}

pub fn parse_timestamp(s: &str) -> Result<i64> {
    let s = s.trim();
    if let Ok(n) = s.parse::<i64>() {
        return Ok(n);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Ok(dt.timestamp());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Ok(dt.and_utc().timestamp());
        }
    }
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Ok(d.and_hms_opt(0, 0, 0).unwrap().and_utc().timestamp());
    }
    Err(Error::InvalidInput(format!("unparsable timestamp {s:?}")))
}

pub fn format_timestamp(ts: i64) -> String {
    match DateTime::<Utc>::from_timestamp(ts, 0) {
        Some(dt) => dt.format("%Y-%m-%dT%H:%M:%SZ").to_string(),
        None => ts.to_string(),
    }
}

#[derive(Debug, Deserialize)]
struct CsvBar {
    timestamp: String,
    open: f64,
    high: f64,
    low: f64,
    close: f64,
    volume: Option<f64>,
}

/// Reads `timestamp,open,high,low,close,volume` rows. `volume` may be empty.
pub fn read_bars_csv<R: Read>(reader: R) -> Result<Vec<OhlcBar>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let expected = ["timestamp", "open", "high", "low", "close", "volume"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::InvalidInput(format!(
            "expected header {}, got {}",
            expected.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut bars = Vec::new();
    for row in rdr.deserialize() {
        let row: CsvBar = row?;
        bars.push(OhlcBar {
            timestamp: parse_timestamp(&row.timestamp)?,
            open: row.open,
            high: row.high,
            low: row.low,
            close: row.close,
            volume: row.volume,
        });
    }
    Ok(bars)
}

pub fn write_bars_csv<W: Write>(writer: W, bars: &[OhlcBar]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["timestamp", "open", "high", "low", "close", "volume"])?;
    for b in bars {
        w.write_record([
            format_timestamp(b.timestamp),
            b.open.to_string(),
            b.high.to_string(),
            b.low.to_string(),
            b.close.to_string(),
            b.volume.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid() -> SamplingGrid {
        SamplingGrid::new(60).unwrap()
    }

    fn series_from_closes(closes: &[f64]) -> PriceSeries {
        let bars = closes
            .iter()
            .enumerate()
            .map(|(i, &c)| OhlcBar::flat(i as i64 * 60, c, Some(1.0)))
            .collect();
        PriceSeries::new("t", grid(), bars).unwrap()
    }

    #[test]
    fn log_returns_examples() {
        let r = compute_log_returns(&series_from_closes(&[100.0, 100.0, 100.0])).unwrap();
        assert_eq!(r.values, vec![0.0, 0.0]);

        let r = compute_log_returns(&series_from_closes(&[1.0, std::f64::consts::E])).unwrap();
        assert_relative_eq!(r.values[0], 1.0, epsilon = 1e-15);

        let r = compute_log_returns(&series_from_closes(&[2.0, 4.0, 8.0])).unwrap();
        assert_relative_eq!(r.values[0], 2f64.ln(), epsilon = 1e-15);
        assert_relative_eq!(r.values[1], 2f64.ln(), epsilon = 1e-15);
        assert_eq!(r.aggregation_factor, 1);
    }

    #[test]
    fn non_positive_price_is_rejected() {
        let err = log_returns_from_closes(grid(), &[1.0, 0.0, 2.0]).unwrap_err();
        assert!(matches!(err, Error::NonPositivePrice { index: 1, .. }));
        let bars = vec![OhlcBar::flat(0, 1.0, None), OhlcBar::flat(60, -1.0, None)];
        assert!(matches!(
            PriceSeries::new("x", grid(), bars),
            Err(Error::NonPositivePrice { .. })
        ));
    }

    #[test]
    fn aggregation_examples() {
        let base = LogReturnSeries::from_values(grid(), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let agg = aggregate_returns(&base, 2).unwrap();
        assert_eq!(agg.values, vec![3.0, 7.0]);
        assert_eq!(agg.aggregation_factor, 2);

        let same = aggregate_returns(&base, 1).unwrap();
        assert_eq!(same.values, base.values);

        let base = LogReturnSeries::from_values(grid(), vec![0.01, -0.01, 0.02]).unwrap();
        assert_eq!(aggregate_returns(&base, 2).unwrap().values, vec![0.0]);

        assert!(matches!(
            aggregate_returns(&base, 4),
            Err(Error::EmptyOutput(_))
        ));
        let agg = aggregate_returns(&base, 2).unwrap();
        assert!(aggregate_returns(&agg, 1).is_err());
    }

    fn bars_at(slots: &[i64]) -> Vec<OhlcBar> {
        slots
            .iter()
            .map(|&s| OhlcBar::flat(s * 60, 100.0 + s as f64, Some(10.0)))
            .collect()
    }

    #[test]
    fn complete_grid_is_unchanged() {
        let raw = bars_at(&[0, 1, 2, 3, 4]);
        let v = validate_and_gapfill("a", raw.clone(), grid(), GapPolicy::ForwardFill).unwrap();
        assert_eq!(v.series.bars(), &raw[..]);
        assert_eq!(v.gaps.gap_count, 0);
    }

    #[test]
    fn forward_fill_inserts_flat_bar() {
        let raw = bars_at(&[0, 1, 3, 4, 5, 6]);
        let v = validate_and_gapfill("a", raw, grid(), GapPolicy::ForwardFill).unwrap();
        assert_eq!(v.gaps.gap_count, 1);
        assert_eq!(v.gaps.filled, 1);
        let inserted = v.series.bars()[2];
        assert_eq!(inserted, OhlcBar::flat(120, 101.0, Some(0.0)));
        assert_eq!(v.series.len(), 7);
    }

    #[test]
    fn drop_and_reindex_keeps_observed_bars() {
        let raw = bars_at(&[0, 1, 3, 4, 5, 6]);
        let v = validate_and_gapfill("a", raw.clone(), grid(), GapPolicy::DropAndReindex).unwrap();
        assert_eq!(v.gaps.gap_count, 1);
        assert_eq!(v.series.bars(), &raw[..]);
    }

    #[test]
    fn too_many_gaps_is_a_data_quality_error() {
        // 8 expected slots, 2 missing = 25%.
        let raw = bars_at(&[0, 1, 2, 4, 5, 7]);
        let err = validate_and_gapfill("a", raw, grid(), GapPolicy::ForwardFill).unwrap_err();
        assert_eq!(
            err,
            Error::DataQuality {
                missing: 2,
                expected: 8
            }
        );
    }

    #[test]
    fn duplicates_and_off_grid_are_rejected() {
        let mut raw = bars_at(&[0, 1, 2]);
        raw.push(raw[1]);
        assert!(matches!(
            validate_and_gapfill("a", raw, grid(), GapPolicy::ForwardFill),
            Err(Error::DuplicateTimestamp(60))
        ));
        let mut raw = bars_at(&[0, 1, 2]);
        raw[2].timestamp += 7;
        assert!(validate_and_gapfill("a", raw, grid(), GapPolicy::ForwardFill).is_err());
    }

    #[test]
    fn unsorted_input_is_sorted() {
        let raw = bars_at(&[3, 0, 2, 1]);
        let v = validate_and_gapfill("a", raw, grid(), GapPolicy::DropAndReindex).unwrap();
        let ts: Vec<_> = v.series.bars().iter().map(|b| b.timestamp).collect();
        assert_eq!(ts, vec![0, 60, 120, 180]);
    }

    #[test]
    fn weekend_mask_skips_saturday_and_sunday() {
        let day = 86_400;
        // 1970-01-02 is a Friday, 1970-01-05 a Monday.
        let raw = vec![
            OhlcBar::flat(day, 1.0, None),
            OhlcBar::flat(4 * day, 1.1, None),
            OhlcBar::flat(5 * day, 1.2, None),
        ];
        let g = SamplingGrid::new(day).unwrap().with_mask(SessionMask {
            skip_weekends: true,
            ..Default::default()
        });
        let v = validate_and_gapfill("a", raw, g, GapPolicy::ForwardFill).unwrap();
        assert_eq!(v.gaps.gap_count, 0);
        assert_eq!(v.gaps.expected_slots, 3);
    }

    #[test]
    fn csv_round_trip_with_missing_volume() {
        let text = "timestamp,open,high,low,close,volume\n\
                    2020-01-01T00:00:00Z,1,2,0.5,1.5,100\n\
                    1577836860,1.5,1.6,1.4,1.45,\n";
        let bars = read_bars_csv(text.as_bytes()).unwrap();
        assert_eq!(bars.len(), 2);
        assert_eq!(bars[0].timestamp, 1_577_836_800);
        assert_eq!(bars[1].volume, None);
        let mut out = Vec::new();
        write_bars_csv(&mut out, &bars).unwrap();
        assert_eq!(read_bars_csv(&out[..]).unwrap(), bars);
    }

    #[test]
    fn bad_header_is_rejected() {
        let text = "time,open,high,low,close,volume\n0,1,1,1,1,\n";
        assert!(read_bars_csv(text.as_bytes()).is_err());
    }
}
