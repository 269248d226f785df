//! Plot-data CSV writers. Numbers use Rust's shortest round-trip formatting, so
//! equal inputs always give identical bytes.

use std::io::Write;

use crate::facts::Curve;
use crate::series::PriceSeries;
use crate::stats::{AcfEstimate, CrossCorrEstimate, QqData};
use crate::volatility::{rolling_volatility, VolScale, VolatilityEstimatorKind, VolatilityWindow};
use crate::{Error, Result};

fn table<W: Write>(
    writer: W,
    header: &[&str],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn num(x: f64) -> String {
    if x.is_finite() {
        x.to_string()
    } else {
        String::new()
    }
}

pub fn write_curve_csv<W: Write>(writer: W, curve: &Curve) -> Result<()> {
    let header: Vec<&str> = curve.columns.iter().map(String::as_str).collect();
    table(
        writer,
        &header,
        curve
            .rows
            .iter()
            .map(|r| r.iter().copied().map(num).collect()),
    )
}

/// `lag,value,se`.
pub fn write_acf_csv<W: Write>(writer: W, acf: &AcfEstimate) -> Result<()> {
    let rows = (0..acf.lags.len()).map(|i| {
        vec![
            acf.lags[i].to_string(),
            num(acf.values[i]),
            num(acf.bartlett_se[i]),
        ]
    });
    table(writer, &["lag", "value", "se"], rows)
}

/// `lag,value,se`.
pub fn write_ccf_csv<W: Write>(writer: W, ccf: &CrossCorrEstimate) -> Result<()> {
    let rows = (0..ccf.lags.len())
        .map(|i| vec![ccf.lags[i].to_string(), num(ccf.values[i]), num(ccf.se[i])]);
    table(writer, &["lag", "value", "se"], rows)
}

/// `theoretical,empirical`.
pub fn write_qq_csv<W: Write>(writer: W, qq: &QqData) -> Result<()> {
    let rows = qq
        .theoretical
        .iter()
        .zip(&qq.empirical)
        .map(|(t, e)| vec![num(*t), num(*e)]);
    table(writer, &["theoretical", "empirical"], rows)
}

/// `timestamp,basic,parkinson,rogers_satchell` over rolling windows of `n` bars.
pub fn write_volatility_csv<W: Write>(
    writer: W,
    series: &PriceSeries,
    n: usize,
    scale: VolScale,
) -> Result<()> {
    let window = VolatilityWindow::new(n, 1);
    let cols = VolatilityEstimatorKind::ALL
        .iter()
        .map(|&k| rolling_volatility(series, k, window, scale))
        .collect::<Result<Vec<_>>>()?;
    if cols.iter().any(|c| c.timestamps != cols[0].timestamps) {
        return Err(Error::Invariant("estimator windows are misaligned".into()));
    }
    let rows = (0..cols[0].len()).map(|i| {
        let mut row = vec![cols[0].timestamps[i].to_string()];
        row.extend(cols.iter().map(|c| num(c.values[i])));
        row
    });
    table(
        writer,
        &["timestamp", "basic", "parkinson", "rogers_satchell"],
        rows,
    )
}
