use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

pub(crate) struct Ols {
    pub coef: Vec<f64>,
    pub se: Vec<f64>,
    pub rss: f64,
}

/// Solves `a x = b` for symmetric positive-definite `a`, also returning `a^-1`.
pub(crate) fn spd_solve(a: DMatrix<f64>, b: &[f64]) -> Option<(Vec<f64>, DMatrix<f64>)> {
    let chol = a.cholesky()?;
    let x = chol.solve(&DVector::from_column_slice(b));
    let inv = chol.inverse();
    if x.iter().all(|v| v.is_finite()) {
        Some((x.iter().copied().collect(), inv))
    } else {
        None
    }
}

/// Ordinary least squares with the design given column by column.
pub(crate) fn ols(columns: &[&[f64]], y: &[f64]) -> Result<Ols> {
    let k = columns.len();
    let n = y.len();
    if n <= k {
        return Err(Error::DegenerateRegression(format!(
            "{n} rows for {k} regressors"
        )));
    }
    let mut xtx = DMatrix::<f64>::zeros(k, k);
    let mut xty = vec![0.0; k];
    for i in 0..k {
        for j in 0..=i {
            let s: f64 = columns[i].iter().zip(columns[j]).map(|(a, b)| a * b).sum();
            xtx[(i, j)] = s;
            xtx[(j, i)] = s;
        }
        xty[i] = columns[i].iter().zip(y).map(|(a, b)| a * b).sum();
    }
    let (coef, inv) = spd_solve(xtx, &xty)
        .ok_or_else(|| Error::DegenerateRegression("singular design matrix".into()))?;
    let rss: f64 = (0..n)
        .map(|t| {
            let fit: f64 = (0..k).map(|j| coef[j] * columns[j][t]).sum();
            (y[t] - fit).powi(2)
        })
        .sum();
    let s2 = rss / (n - k) as f64;
    let se = (0..k).map(|j| (s2 * inv[(j, j)]).max(0.0).sqrt()).collect();
    Ok(Ols { coef, se, rss })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ols_recovers_exact_line() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let ones = vec![1.0; 10];
        let y: Vec<f64> = x.iter().map(|v| 2.0 + 3.0 * v).collect();
        let fit = ols(&[&ones, &x], &y).unwrap();
        assert!((fit.coef[0] - 2.0).abs() < 1e-12);
        assert!((fit.coef[1] - 3.0).abs() < 1e-12);
        assert!(fit.rss < 1e-20);
    }

    #[test]
    fn collinear_design_is_degenerate() {
        let a = vec![1.0; 5];
        let b = vec![2.0; 5];
        assert!(ols(&[&a, &b], &[1.0, 2.0, 3.0, 4.0, 5.0]).is_err());
    }
}
