//! Estimators and hypothesis tests shared by the fact procedures.

mod acf;
mod adf;
mod normality;

pub use acf::{estimate_acf, estimate_cross_correlation, AcfEstimate, CrossCorrEstimate};
pub use adf::{adf_test, mackinnon_critical_value, mackinnon_p_value, AdfLagPolicy};
pub use normality::{
    anderson_darling_normal, kolmogorov_survival, ks_test_normal, normal_cdf, normal_quantile,
    CriticalLevel, GofTestResult,
};

use crate::{Error, Result};

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample variance with `n - 1` in the denominator.
pub fn sample_variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// True when every value equals the first; such inputs have no variance even if
/// rounding in the mean says otherwise.
pub(crate) fn is_constant(x: &[f64]) -> bool {
    x.iter().all(|&v| v == x[0])
}

/// Two-sided standard-normal critical value for a confidence level, e.g. 1.96 at 0.95.
pub fn z_for_confidence(confidence_level: f64) -> f64 {
    normal_quantile(0.5 + confidence_level / 2.0)
}

/// Product-moment correlation coefficient.
pub fn pearson_correlation(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "lengths differ: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: x.len(),
        });
    }
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || is_constant(x) {
        return Err(Error::ZeroVariance("x"));
    }
    if syy == 0.0 || is_constant(y) {
        return Err(Error::ZeroVariance("y"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Empirical distribution: sorted values with `P̂(X > x)` per value.
#[derive(Debug, Clone, PartialEq)]
pub struct Edf {
    pub sorted: Vec<f64>,
    /// Share of the sample strictly greater than `sorted[i]`.
    pub exceedance: Vec<f64>,
}

impl Edf {
    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// `P̂(X <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }
}

pub fn empirical_distribution(x: &[f64]) -> Result<Edf> {
    if x.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut exceedance = vec![0.0; n];
    // Walk down from the top so tied values share the strictly-greater count.
    let mut i = n;
    while i > 0 {
        let v = sorted[i - 1];
        let mut j = i;
        while j > 0 && sorted[j - 1] == v {
            j -= 1;
        }
        let above = (n - i) as f64 / n as f64;
        exceedance[j..i].fill(above);
        i = j;
    }
    Ok(Edf { sorted, exceedance })
}

/// `(theoretical, empirical)` quantile pairs at plotting positions `(i - 0.5)/N`.
#[derive(Debug, Clone, PartialEq)]
pub struct QqData {
    pub theoretical: Vec<f64>,
    pub empirical: Vec<f64>,
}

/// QQ pairs against a normal with the sample mean and variance.
pub fn qq_data(x: &[f64]) -> QqData {
    let sd = if x.len() > 1 {
        sample_variance(x).sqrt()
    } else {
        0.0
    };
    qq_data_with_reference(x, mean(x), sd)
}

pub fn qq_data_with_reference(x: &[f64], ref_mean: f64, ref_sd: f64) -> QqData {
    let mut empirical = x.to_vec();
    empirical.sort_by(f64::total_cmp);
    let n = empirical.len() as f64;
    let theoretical = (0..empirical.len())
        .map(|i| ref_mean + ref_sd * normal_quantile((i as f64 + 0.5) / n))
        .collect();
    QqData {
        theoretical,
        empirical,
    }
}
