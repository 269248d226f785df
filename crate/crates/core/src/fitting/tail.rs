use serde::{Deserialize, Serialize};

use crate::linalg::ols;
use crate::{Error, Result};

pub const DEFAULT_TAIL_FRACTION: f64 = 0.05;
const MIN_TAIL_POINTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailSide {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub alpha: f64,
    /// Standard error of the log-log regression slope.
    pub alpha_se: f64,
    /// `alpha / sqrt(n_tail)`, the sampling spread of the estimate across samples.
    pub alpha_se_sampling: f64,
    pub r_squared: f64,
    pub tail_fraction: f64,
    pub side: TailSide,
    /// Points entering the regression.
    pub n_tail: usize,
    /// Smallest tail value used, on the reflected scale.
    pub threshold: f64,
}

impl TailFit {
    /// The larger of the regression and sampling standard errors.
    pub fn conservative_se(&self) -> f64 {
        self.alpha_se.max(self.alpha_se_sampling)
    }
}

/// Regresses `ln P̂(X > x)` on `ln x` over the largest `⌈fraction·N⌉` values of
/// the chosen side. The left tail is fitted on `−x`. Exceedances are counted over
/// the full sample; the maximum, whose exceedance is zero, is skipped.
pub fn fit_tail_exponent(x: &[f64], side: TailSide, tail_fraction: f64) -> Result<TailFit> {
    if !(tail_fraction > 0.0 && tail_fraction < 0.5) {
        return Err(Error::InvalidInput(format!(
            "tail fraction {tail_fraction} outside (0, 0.5)"
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite value in tail input".into()));
    }
    let n = x.len();
    let mut y: Vec<f64> = match side {
        TailSide::Right => x.to_vec(),
        TailSide::Left => x.iter().map(|v| -v).collect(),
    };
    y.sort_by(|a, b| b.total_cmp(a));
    let n_tail = (tail_fraction * n as f64).ceil() as usize;
    let mut log_x = Vec::with_capacity(n_tail);
    let mut log_p = Vec::with_capacity(n_tail);
    let mut threshold = f64::NAN;
    let mut i = 0;
    // Groups of ties share the count of strictly greater values.
    while i < n_tail.min(n) {
        let v = y[i];
        let greater = i;
        let mut j = i;
        while j < n && y[j] == v {
            j += 1;
        }
        if v > 0.0 && greater > 0 {
            let p = (greater as f64 / n as f64).ln();
            for _ in i..j.min(n_tail) {
                log_x.push(v.ln());
                log_p.push(p);
            }
            threshold = v;
        }
        i = j;
    }
    if log_x.len() < MIN_TAIL_POINTS {
        return Err(Error::InsufficientTail {
            usable: log_x.len(),
        });
    }
    let ones = vec![1.0; log_x.len()];
    let fit = ols(&[&ones, &log_x], &log_p).map_err(|_| Error::InsufficientTail {
        usable: log_x.len(),
    })?;
    let alpha = -fit.coef[1];
    let mean_p = log_p.iter().sum::<f64>() / log_p.len() as f64;
    let tss: f64 = log_p.iter().map(|v| (v - mean_p).powi(2)).sum();
    let used = log_x.len();
    Ok(TailFit {
        alpha,
        alpha_se: fit.se[1],
        alpha_se_sampling: alpha.abs() / (used as f64).sqrt(),
        r_squared: if tss > 0.0 { 1.0 - fit.rss / tss } else { 1.0 },
        tail_fraction,
        side,
        n_tail: used,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StudentT};

    #[test]
    fn exact_pareto_grid() {
        let n = 1000;
        // The k-th largest value (k ≥ 2) has exactly k − 1 values above it.
        let mut x: Vec<f64> = (2..=n)
            .map(|k| ((k - 1) as f64 / n as f64).powf(-1.0 / 3.0))
            .collect();
        x.push(20.0);
        let fit = fit_tail_exponent(&x, TailSide::Right, 0.05).unwrap();
        assert!((fit.alpha - 3.0).abs() < 1e-9, "{}", fit.alpha);
        assert_eq!(fit.n_tail, 49);
        assert!(fit.r_squared > 1.0 - 1e-12);
    }

    #[test]
    fn student_t_index() {
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(3);
        let t = StudentT::new(3.0).unwrap();
        let x: Vec<f64> = (0..100_000).map(|_| t.sample(&mut rng)).collect();
        let right = fit_tail_exponent(&x, TailSide::Right, 0.05).unwrap();
        let left = fit_tail_exponent(&x, TailSide::Left, 0.05).unwrap();
        for f in [&right, &left] {
            assert!((2.3..=3.7).contains(&f.alpha), "{f:?}");
        }
        let joint = (right.conservative_se().powi(2) + left.conservative_se().powi(2)).sqrt();
        assert!((right.alpha - left.alpha).abs() < 3.0 * joint);
    }

    #[test]
    fn too_few_points() {
        let x: Vec<f64> = (1..=100).map(f64::from).collect();
        assert!(matches!(
            fit_tail_exponent(&x, TailSide::Right, 0.05),
            Err(Error::InsufficientTail { .. })
        ));
        assert!(matches!(
            fit_tail_exponent(&x, TailSide::Left, 0.2),
            Err(Error::InsufficientTail { usable: 0 })
        ));
        assert!(fit_tail_exponent(&x, TailSide::Right, 0.6).is_err());
    }

    proptest! {
        #[test]
        fn scale_equivariant(seed in 0u64..1000, c in prop::sample::select(vec![0.125, 0.5, 4.0, 1024.0])) {
            let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
            let t = StudentT::new(4.0).unwrap();
            let x: Vec<f64> = (0..2000).map(|_| t.sample(&mut rng)).collect();
            let y: Vec<f64> = x.iter().map(|v| c * v).collect();
            for side in [TailSide::Left, TailSide::Right] {
                let a = fit_tail_exponent(&x, side, 0.05).unwrap();
                let b = fit_tail_exponent(&y, side, 0.05).unwrap();
                prop_assert!((a.alpha - b.alpha).abs() < 1e-9);
            }
        }
    }
}
