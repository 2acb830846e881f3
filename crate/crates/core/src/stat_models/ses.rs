//! Simple exponential smoothing.

use serde::{Deserialize, Serialize};

use crate::data::Series;
use crate::error::{Error, Result};
use crate::forecast::Forecast;
use crate::optim;
use crate::preprocess::TransformChain;

const ALPHA_MIN: f64 = 1e-6;
const ALPHA_MAX: f64 = 1.0 - 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SesFit {
    pub alpha: f64,
    /// Level after the last observation, the forecast for every horizon.
    pub level: f64,
    /// In-sample one-step forecasts; `fitted[t]` predicts `y[t]`.
    pub fitted: Vec<f64>,
    pub chain: TransformChain,
}

impl SesFit {
    pub fn sse(&self, y: &[f64]) -> f64 {
        y.iter().zip(&self.fitted).map(|(a, b)| (a - b).powi(2)).sum()
    }

    pub fn forecast(&self, origin: crate::data::Day, horizon: usize) -> Result<Forecast> {
        let transformed = vec![self.level; horizon];
        Ok(Forecast {
            model: "SES".into(),
            origin,
            original: self.chain.invert(&transformed)?,
            transformed,
        })
    }

    /// One-step forecasts of `y[t]` for `t` in `from..y.len()`, running the
    /// level recursion with the fitted alpha over all of `y`.
    pub fn one_step_predictions(&self, y: &[f64], from: usize) -> Vec<f64> {
        smooth(y, self.alpha).0[from..].to_vec()
    }
}

/// Returns the one-step forecasts for each `y[t]` and the final level.
fn smooth(y: &[f64], alpha: f64) -> (Vec<f64>, f64) {
    let mut fitted = Vec::with_capacity(y.len());
    let mut level = y[0];
    for v in y {
        fitted.push(level);
        level = alpha * v + (1.0 - alpha) * level;
    }
    (fitted, level)
}

/// Fits the smoothing factor (golden-section search on the in-sample SSE
/// unless `alpha` is given) and forecasts `horizon` days.
pub fn ses_forecast(s: &Series, alpha: Option<f64>, horizon: usize) -> Result<(SesFit, Forecast)> {
    let fit = ses_fit(s, alpha)?;
    let fc = fit.forecast(s.end(), horizon)?;
    Ok((fit, fc))
}

pub fn ses_fit(s: &Series, alpha: Option<f64>) -> Result<SesFit> {
    let y = s.dense()?;
    let alpha = match alpha {
        Some(a) if a > 0.0 && a < 1.0 => a,
        Some(a) => return Err(Error::AlphaOutOfRange(a)),
        None => {
            let sse = |a: f64| {
                let (f, _) = smooth(&y, a);
                y.iter().zip(&f).map(|(v, p)| (v - p).powi(2)).sum::<f64>()
            };
            optim::golden_section(sse, ALPHA_MIN, ALPHA_MAX, 1e-8).0
        }
    };
    let (fitted, level) = smooth(&y, alpha);
    Ok(SesFit {
        alpha,
        level,
        fitted,
        chain: TransformChain::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Day;

    fn series(v: &[f64]) -> Series {
        Series::from_values("y", "MWh", Day(0), v).unwrap()
    }

    #[test]
    fn hand_applied_recursion() {
        let (fit, fc) = ses_forecast(&series(&[10.0, 20.0]), Some(0.5), 3).unwrap();
        assert_eq!(fit.fitted, vec![10.0, 10.0]);
        assert_eq!(fit.level, 15.0);
        assert_eq!(fc.original, vec![15.0; 3]);
    }

    #[test]
    fn alpha_near_one_tracks_last_value() {
        let (_, fc) = ses_forecast(&series(&[3.0, 9.0, 4.0, 7.5]), Some(0.999_999), 1).unwrap();
        assert!((fc.original[0] - 7.5).abs() < 1e-4);
    }

    #[test]
    fn constant_series_is_a_fixed_point() {
        for a in [0.1, 0.5, 0.9] {
            let (_, fc) = ses_forecast(&series(&[4.2; 30]), Some(a), 5).unwrap();
            assert!(fc.original.iter().all(|v| *v == 4.2));
        }
        let (fit, _) = ses_forecast(&series(&[4.2; 30]), None, 5).unwrap();
        assert!(fit.alpha > 0.0 && fit.alpha < 1.0);
    }

    #[test]
    fn alpha_range_is_checked() {
        for a in [0.0, 1.0, -0.2, 1.5] {
            assert_eq!(
                ses_fit(&series(&[1.0, 2.0]), Some(a)).unwrap_err(),
                Error::AlphaOutOfRange(a)
            );
        }
    }

    #[test]
    fn estimated_alpha_minimizes_sse() {
        let y: Vec<f64> = (0..200)
            .map(|t| (t as f64 * 0.1).sin() * 10.0 + (t % 7) as f64)
            .collect();
        let fit = ses_fit(&series(&y), None).unwrap();
        let best = fit.sse(&y);
        for a in [0.05, 0.2, 0.4, 0.6, 0.8, 0.95] {
            let other = ses_fit(&series(&y), Some(a)).unwrap();
            assert!(best <= other.sse(&y) + 1e-9);
        }
    }

    #[test]
    fn forecast_is_flat() {
        let (_, fc) = ses_forecast(&series(&[1.0, 5.0, 2.0, 8.0, 3.0]), None, 10).unwrap();
        assert!(fc.original.windows(2).all(|w| w[0] == w[1]));
    }
}
