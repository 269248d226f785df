//! Statistical tests for the stylized facts of financial returns.
//!
//! The crate is organised bottom-up:
//!
//! - [`series`]: OHLCV bars, log-returns, aggregation and gap handling.
//! - [`volatility`]: Basic, Parkinson and Rogers–Satchell window estimators.
//! - [`stats`]: ACF with Bartlett bands, cross-correlation, EDF, KS/AD normality
//!   tests, ADF unit-root test and QQ data.
//! - [`fitting`]: Levenberg–Marquardt, power-law decay fits, GARCH(1,1)
//!   quasi-MLE, OU calibration and tail-exponent regression.
//! - [`simulate`]: seeded GBM, OU, GARCH(1,1) and GJR-GARCH generators used as
//!   positive and negative controls.
//! - [`facts`]: the eleven fact procedures, each returning a [`facts::FactVerdict`].
//! - [`export`]: plot-data CSV writers.

// Negated comparisons are used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod export;
pub mod facts;
pub mod fitting;
mod linalg;
pub mod rng;
pub mod series;
pub mod simulate;
pub mod stats;
pub mod volatility;

pub use error::{Error, Result};
