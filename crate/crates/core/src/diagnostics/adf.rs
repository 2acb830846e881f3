use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Deterministic terms in the test regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regression {
    None,
    Constant,
    #[default]
    ConstantTrend,
}

impl std::str::FromStr for Regression {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" | "n" => Ok(Regression::None),
            "constant" | "c" => Ok(Regression::Constant),
            "constant_trend" | "ct" => Ok(Regression::ConstantTrend),
            _ => Err(Error::Config(format!("unknown adf regression {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalValues {
    pub one_pct: f64,
    pub five_pct: f64,
    pub ten_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdfResult {
    /// t-ratio on the lagged level.
    pub statistic: f64,
    pub lags: usize,
    pub regression: Regression,
    pub nobs: usize,
    pub p_value: f64,
    pub critical: CriticalValues,
    pub stationary: bool,
}

pub const SIGNIFICANCE: f64 = 0.05;

/// Schwert's rule of thumb, floor(12 (T/100)^(1/4)).
pub fn schwert_max_lag(n: usize) -> usize {
    (12.0 * (n as f64 / 100.0).powf(0.25)).floor() as usize
}

/// Augmented Dickey–Fuller test with the lag order picked by AIC over
/// `0..=max_lag` (Schwert's bound when `None`). Ties go to the smaller lag.
pub fn adf_test(x: &[f64], regression: Regression, max_lag: Option<usize>) -> Result<AdfResult> {
    let max_lag = max_lag.unwrap_or_else(|| schwert_max_lag(x.len()));
    check_length(x, max_lag)?;
    // common sample for the information-criterion comparison
    let mut best: Option<(f64, usize)> = None;
    for p in 0..=max_lag {
        let Some(fit) = adf_regression(x, regression, p, max_lag) else {
            continue;
        };
        let n = fit.nobs as f64;
        let aic = n * (fit.rss / n).ln() + 2.0 * fit.coef.len() as f64;
        if best.is_none_or(|(b, _)| aic < b) {
            best = Some((aic, p));
        }
    }
    let (_, lags) = best.ok_or(Error::SingularRegression)?;
    adf_test_fixed(x, regression, lags)
}

/// ADF test with exactly `lags` lagged differences.
pub fn adf_test_fixed(x: &[f64], regression: Regression, lags: usize) -> Result<AdfResult> {
    check_length(x, lags)?;
    let fit = adf_regression(x, regression, lags, lags).ok_or(Error::SingularRegression)?;
    let gamma = deterministic_terms(regression);
    let statistic = fit.coef[gamma] / fit.se[gamma];
    if !statistic.is_finite() {
        return Err(Error::SingularRegression);
    }
    let crit = critical_row(regression, fit.nobs);
    let p_value = p_value_from_row(statistic, &crit);
    Ok(AdfResult {
        statistic,
        lags,
        regression,
        nobs: fit.nobs,
        p_value,
        critical: CriticalValues {
            one_pct: crit[0],
            five_pct: crit[2],
            ten_pct: crit[3],
        },
        stationary: p_value < SIGNIFICANCE,
    })
}

fn check_length(x: &[f64], max_lag: usize) -> Result<()> {
    if x.len() < 20 + max_lag {
        return Err(Error::TooShort(format!(
            "adf needs at least {} observations, got {}",
            20 + max_lag,
            x.len()
        )));
    }
    Ok(())
}

fn deterministic_terms(r: Regression) -> usize {
    match r {
        Regression::None => 0,
        Regression::Constant => 1,
        Regression::ConstantTrend => 2,
    }
}

/// dy_t on [deterministics, y_{t-1}, dy_{t-1..t-p}] for t starting after
/// `skip` lagged differences are available.
fn adf_regression(x: &[f64], regression: Regression, p: usize, skip: usize) -> Option<linalg::OlsFit> {
    let dy: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    // dy[i] = x[i+1] - x[i]; rows i = skip .. dy.len()
    let rows: Vec<usize> = (skip..dy.len()).collect();
    let det = deterministic_terms(regression);
    let k = det + 1 + p;
    let design = DMatrix::from_fn(rows.len(), k, |r, j| {
        let i = rows[r];
        match j {
            _ if j < det => {
                if j == 0 {
                    1.0
                } else {
                    (i + 1) as f64
                }
            }
            _ if j == det => x[i],
            _ => dy[i - (j - det)],
        }
    });
    let y: Vec<f64> = rows.iter().map(|&i| dy[i]).collect();
    linalg::ols(&design, &y)
}

const PROBS: [f64; 8] = [0.01, 0.025, 0.05, 0.10, 0.90, 0.95, 0.975, 0.99];
const SIZES: [f64; 6] = [25.0, 50.0, 100.0, 250.0, 500.0, f64::INFINITY];

// Dickey–Fuller t-ratio percentiles (Fuller 1976) by sample size.
const TAU_NONE: [[f64; 8]; 6] = [
    [-2.66, -2.26, -1.95, -1.60, 0.92, 1.33, 1.70, 2.16],
    [-2.62, -2.25, -1.95, -1.61, 0.91, 1.31, 1.66, 2.08],
    [-2.60, -2.24, -1.95, -1.61, 0.90, 1.29, 1.64, 2.03],
    [-2.58, -2.23, -1.95, -1.62, 0.89, 1.29, 1.63, 2.01],
    [-2.58, -2.23, -1.95, -1.62, 0.89, 1.28, 1.62, 2.00],
    [-2.58, -2.23, -1.95, -1.62, 0.89, 1.28, 1.62, 2.00],
];
#[allow(clippy::approx_constant)]
const TAU_CONSTANT: [[f64; 8]; 6] = [
    [-3.75, -3.33, -3.00, -2.63, -0.37, 0.00, 0.34, 0.72],
    [-3.58, -3.22, -2.93, -2.60, -0.40, -0.03, 0.29, 0.66],
    [-3.51, -3.17, -2.89, -2.58, -0.42, -0.05, 0.26, 0.63],
    [-3.46, -3.14, -2.88, -2.57, -0.42, -0.06, 0.24, 0.62],
    [-3.44, -3.13, -2.87, -2.57, -0.43, -0.07, 0.24, 0.61],
    [-3.43, -3.12, -2.86, -2.57, -0.44, -0.07, 0.23, 0.60],
];
const TAU_TREND: [[f64; 8]; 6] = [
    [-4.38, -3.95, -3.60, -3.24, -1.14, -0.80, -0.50, -0.15],
    [-4.15, -3.80, -3.50, -3.18, -1.19, -0.87, -0.58, -0.24],
    [-4.04, -3.73, -3.45, -3.15, -1.22, -0.90, -0.62, -0.28],
    [-3.99, -3.69, -3.43, -3.13, -1.23, -0.92, -0.64, -0.31],
    [-3.98, -3.68, -3.42, -3.13, -1.24, -0.93, -0.65, -0.32],
    [-3.96, -3.66, -3.41, -3.12, -1.25, -0.94, -0.66, -0.33],
];

fn table(r: Regression) -> &'static [[f64; 8]; 6] {
    match r {
        Regression::None => &TAU_NONE,
        Regression::Constant => &TAU_CONSTANT,
        Regression::ConstantTrend => &TAU_TREND,
    }
}

/// Percentiles at sample size `n`, linear in 1/n between tabulated sizes.
fn critical_row(r: Regression, n: usize) -> [f64; 8] {
    let tab = table(r);
    let inv = 1.0 / n as f64;
    let inv_sizes: Vec<f64> = SIZES.iter().map(|s| 1.0 / s).collect();
    if inv >= inv_sizes[0] {
        return tab[0];
    }
    let hi = (1..SIZES.len())
        .find(|&i| inv >= inv_sizes[i])
        .unwrap_or(SIZES.len() - 1);
    let lo = hi - 1;
    let w = (inv_sizes[lo] - inv) / (inv_sizes[lo] - inv_sizes[hi]);
    std::array::from_fn(|j| tab[lo][j] + w * (tab[hi][j] - tab[lo][j]))
}

/// Lower tail: ln p linear in the statistic. Upper tail: ln(1 - p) linear.
/// Between the 10% and 90% points p itself is linear. Clamped to
/// [0.001, 0.999].
fn p_value_from_row(stat: f64, crit: &[f64; 8]) -> f64 {
    let lerp = |x0: f64, x1: f64, y0: f64, y1: f64| y0 + (stat - x0) * (y1 - y0) / (x1 - x0);
    let p = if stat <= crit[3] {
        let i = (0..3).find(|&i| stat <= crit[i + 1]).unwrap_or(0);
        lerp(crit[i], crit[i + 1], PROBS[i].ln(), PROBS[i + 1].ln()).exp()
    } else if stat >= crit[4] {
        let i = (4..7).rev().find(|&i| stat >= crit[i]).unwrap_or(6);
        let q = |p: f64| (1.0 - p).ln();
        1.0 - lerp(crit[i], crit[i + 1], q(PROBS[i]), q(PROBS[i + 1])).exp()
    } else {
        lerp(crit[3], crit[4], PROBS[3], PROBS[4])
    };
    p.clamp(0.001, 0.999)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn noise(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    fn walk(seed: u64, n: usize) -> Vec<f64> {
        noise(seed, n)
            .into_iter()
            .scan(0.0, |acc, e| {
                *acc += e;
                Some(*acc)
            })
            .collect()
    }

    #[test]
    fn tables_are_monotone() {
        for r in [Regression::None, Regression::Constant, Regression::ConstantTrend] {
            for row in table(r) {
                assert!(row.windows(2).all(|w| w[0] < w[1]));
            }
        }
    }

    #[test]
    fn p_value_hits_tabulated_points() {
        let row = critical_row(Regression::Constant, 1_000_000);
        for (c, p) in row.iter().zip(PROBS) {
            assert!((p_value_from_row(*c, &row) - p).abs() < 1e-3);
        }
        assert_eq!(p_value_from_row(-50.0, &row), 0.001);
        assert_eq!(p_value_from_row(50.0, &row), 0.999);
    }

    #[test]
    fn critical_values_at_table_sizes() {
        let row = critical_row(Regression::ConstantTrend, 100);
        assert!((row[2] + 3.45).abs() < 1e-12);
        let row = critical_row(Regression::Constant, 10);
        assert_eq!(row, TAU_CONSTANT[0]);
    }

    #[test]
    fn white_noise_is_stationary() {
        let r = adf_test(&noise(1, 500), Regression::Constant, None).unwrap();
        assert!(r.stationary, "{r:?}");
        assert!(r.p_value < 0.05);
    }

    #[test]
    fn random_walk_is_not_stationary() {
        let r = adf_test(&walk(2, 500), Regression::Constant, None).unwrap();
        assert!(!r.stationary, "{r:?}");
        assert_eq!(r.stationary, r.p_value < SIGNIFICANCE);
    }

    #[test]
    fn differenced_walk_is_stationary() {
        let x = walk(3, 500);
        let dx: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(adf_test(&dx, Regression::ConstantTrend, None).unwrap().stationary);
    }

    #[test]
    fn statistic_is_location_invariant() {
        let x = walk(4, 300);
        let shifted: Vec<f64> = x.iter().map(|v| v + 1234.5).collect();
        for r in [Regression::Constant, Regression::ConstantTrend] {
            let a = adf_test_fixed(&x, r, 3).unwrap();
            let b = adf_test_fixed(&shifted, r, 3).unwrap();
            assert!((a.statistic - b.statistic).abs() < 1e-8);
        }
    }

    #[test]
    fn too_short() {
        assert!(matches!(
            adf_test(&noise(0, 25), Regression::Constant, Some(10)),
            Err(Error::TooShort(_))
        ));
    }

    #[test]
    fn schwert_rule() {
        assert_eq!(schwert_max_lag(100), 12);
        assert_eq!(schwert_max_lag(500), 17);
    }
}
