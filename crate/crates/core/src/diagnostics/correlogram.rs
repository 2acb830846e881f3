use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// One lag of an autocorrelation or partial autocorrelation plot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelogramPoint {
    pub lag: usize,
    pub value: f64,
    /// Half-width of the approximate 95% white-noise band, 1.96/sqrt(T).
    pub band: f64,
}

/// Sample autocorrelations rho(0..=max_lag) around the whole-series mean.
pub fn acf(x: &[f64], max_lag: usize) -> Result<Vec<CorrelogramPoint>> {
    let n = x.len();
    if max_lag >= n {
        return Err(Error::LagTooLarge { lag: max_lag, len: n });
    }
    let values = acf_values(x, max_lag)?;
    let band = 1.96 / (n as f64).sqrt();
    Ok(values
        .into_iter()
        .enumerate()
        .map(|(lag, value)| CorrelogramPoint { lag, value, band })
        .collect())
}

pub(crate) fn acf_values(x: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let z: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let denom: f64 = z.iter().map(|v| v * v).sum();
    if denom <= f64::EPSILON * mean.abs().max(1.0) * n as f64 {
        return Err(Error::ConstantSeries);
    }
    let mut out = Vec::with_capacity(max_lag + 1);
    out.push(1.0);
    for k in 1..=max_lag {
        let num: f64 = (k..n).map(|t| z[t] * z[t - k]).sum();
        out.push(num / denom);
    }
    Ok(out)
}

/// Partial autocorrelations alpha(1..=max_lag); alpha(k) is the coefficient
/// on the k-th lag in a least-squares regression on the k most recent lags.
///
/// The regression runs on the demeaned series with values outside the
/// sample taken as zero, so its normal equations are exactly the
/// Yule–Walker system built from [`acf`]. The result is cross-checked
/// against the Durbin–Levinson recursion.
pub fn pacf(x: &[f64], max_lag: usize) -> Result<Vec<CorrelogramPoint>> {
    let n = x.len();
    if max_lag == 0 || 2 * max_lag >= n {
        return Err(Error::LagTooLarge { lag: max_lag, len: n });
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let z: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let band = 1.96 / (n as f64).sqrt();
    let recursion = durbin_levinson(&acf_values(x, max_lag)?)?;
    let mut out = Vec::with_capacity(max_lag);
    for k in 1..=max_lag {
        let alpha = padded_regression(&z, k)?;
        debug_assert!(
            (alpha - recursion[k - 1]).abs() < 1e-6,
            "pacf routes disagree at lag {k}: {alpha} vs {}",
            recursion[k - 1]
        );
        out.push(CorrelogramPoint {
            lag: k,
            value: alpha,
            band,
        });
    }
    Ok(out)
}

/// Last coefficient of the zero-padded order-`k` linear predictor.
fn padded_regression(z: &[f64], k: usize) -> Result<f64> {
    let n = z.len();
    // rows t = 0 .. n + k - 1 of the full (pre- and post-windowed) design
    let rows = n + k;
    let at = |t: isize| -> f64 {
        if t >= 0 && (t as usize) < n {
            z[t as usize]
        } else {
            0.0
        }
    };
    let design = DMatrix::from_fn(rows, k, |t, j| at(t as isize - j as isize - 1));
    let y: Vec<f64> = (0..rows).map(|t| at(t as isize)).collect();
    let coef = linalg::lstsq(&design, &y).ok_or(Error::SingularRegression)?;
    Ok(coef[k - 1])
}

/// PACF from autocorrelations `rho[0..=m]` via the Durbin–Levinson
/// recursion; returns alpha(1..=m).
pub fn durbin_levinson(rho: &[f64]) -> Result<Vec<f64>> {
    let m = rho.len().saturating_sub(1);
    let mut phi = vec![0.0; m + 1];
    let mut prev = vec![0.0; m + 1];
    let mut v = 1.0;
    let mut out = Vec::with_capacity(m);
    for k in 1..=m {
        let num = rho[k] - (1..k).map(|j| prev[j] * rho[k - j]).sum::<f64>();
        if v <= 0.0 {
            return Err(Error::SingularRegression);
        }
        let a = num / v;
        phi[k] = a;
        for j in 1..k {
            phi[j] = prev[j] - a * prev[k - j];
        }
        v *= 1.0 - a * a;
        out.push(a);
        prev[..=k].copy_from_slice(&phi[..=k]);
    }
    Ok(out)
}
