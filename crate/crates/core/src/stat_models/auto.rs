//! Information-criterion search over ARIMA orders.

use std::cmp::Ordering;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::arima::{fit_arima, ArimaFit, ArimaOrder, FitOptions};
use crate::data::{ExogMatrix, Series};
use crate::diagnostics::{acf, adf_test, Regression};
use crate::error::{Error, Result};
use crate::preprocess::difference_values;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    #[default]
    Aic,
    Bic,
}

impl Criterion {
    pub fn of(self, fit: &ArimaFit) -> f64 {
        match self {
            Criterion::Aic => fit.aic,
            Criterion::Bic => fit.bic,
        }
    }
}

impl FromStr for Criterion {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "aic" => Ok(Criterion::Aic),
            "bic" => Ok(Criterion::Bic),
            _ => Err(Error::Config(format!("unknown criterion {s:?} (expected aic or bic)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchBounds {
    pub max_p: usize,
    pub max_d: usize,
    pub max_q: usize,
    pub max_sp: usize,
    pub max_sd: usize,
    pub max_sq: usize,
    pub period: usize,
}

impl Default for SearchBounds {
    fn default() -> Self {
        SearchBounds {
            max_p: 3,
            max_d: 2,
            max_q: 3,
            max_sp: 0,
            max_sd: 0,
            max_sq: 0,
            period: 7,
        }
    }
}

/// One evaluated candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub order: ArimaOrder,
    /// Criterion value, or the error that stopped the fit.
    pub outcome: Result<f64, String>,
}

#[derive(Debug, Clone)]
pub struct AutoArima {
    pub fit: ArimaFit,
    pub criterion: Criterion,
    pub log: Vec<Candidate>,
}

/// Seasonal autocorrelation above which another seasonal difference is taken.
const SEASONAL_RHO: f64 = 0.64;

fn seasonal_order(y: &[f64], b: &SearchBounds) -> usize {
    let mut sd = 0;
    while sd < b.max_sd {
        let Ok(w) = difference_values(y, 0, sd, b.period) else {
            break;
        };
        match acf(&w, b.period) {
            Ok(r) if r[b.period].value >= SEASONAL_RHO => sd += 1,
            _ => break,
        }
    }
    sd
}

fn regular_order(y: &[f64], sd: usize, b: &SearchBounds) -> usize {
    let mut d = 0;
    while d < b.max_d {
        let Ok(w) = difference_values(y, d, sd, b.period) else {
            break;
        };
        match adf_test(&w, Regression::default(), None) {
            Ok(r) if !r.stationary => d += 1,
            _ => break,
        }
    }
    d
}

/// Picks the differencing orders by test, then fits every `(p, q, P, Q)`
/// within `bounds` and returns the fit with the smallest criterion.
///
/// `D` grows while the seasonal autocorrelation stays strong and `d` grows
/// while the ADF test does not reject a unit root. Failed fits are kept in
/// the log and skipped. Ties go to fewer parameters, then to the smaller
/// `(p, q, P, Q)`.
pub fn auto_arima(
    s: &Series,
    bounds: SearchBounds,
    criterion: Criterion,
    exog: Option<&ExogMatrix>,
    opts: &FitOptions,
) -> Result<AutoArima> {
    if bounds.period == 0 || (bounds.period == 1 && bounds.max_sp + bounds.max_sd + bounds.max_sq > 0) {
        return Err(Error::BadOrder("seasonal bounds need a period > 1".into()));
    }
    let y = s.dense()?;
    let sd = seasonal_order(&y, &bounds);
    let d = regular_order(&y, sd, &bounds);
    let mut orders = Vec::new();
    for p in 0..=bounds.max_p {
        for q in 0..=bounds.max_q {
            for sp in 0..=bounds.max_sp {
                for sq in 0..=bounds.max_sq {
                    let period = if sp + sd + sq > 0 { bounds.period } else { 1 };
                    orders.push(ArimaOrder::seasonal(p, d, q, sp, sd, sq, period));
                }
            }
        }
    }
    // every candidate is scored on the same sample
    let opts = FitOptions {
        conditioning: opts
            .conditioning
            .max(orders.iter().map(ArimaOrder::ar_lags).max().unwrap_or(0)),
        ..opts.clone()
    };
    let fits: Vec<(ArimaOrder, Result<ArimaFit>)> =
        orders.par_iter().map(|o| (*o, fit_arima(s, *o, exog, &opts))).collect();
    let key = |o: &ArimaOrder| (o.p, o.q, o.sp, o.sq);
    let mut log = Vec::with_capacity(fits.len());
    let mut best: Option<ArimaFit> = None;
    for (order, res) in fits {
        match res {
            Ok(fit) => {
                let c = criterion.of(&fit);
                log.push(Candidate { order, outcome: Ok(c) });
                if !c.is_finite() {
                    continue;
                }
                let better = match &best {
                    None => true,
                    Some(b) => {
                        c.total_cmp(&criterion.of(b))
                            .then(fit.k_params.cmp(&b.k_params))
                            .then(key(&order).cmp(&key(&b.order)))
                            == Ordering::Less
                    }
                };
                if better {
                    best = Some(fit);
                }
            }
            Err(e) => log.push(Candidate {
                order,
                outcome: Err(e.to_string()),
            }),
        }
    }
    let fit = best.ok_or(Error::NoValidModel)?;
    Ok(AutoArima { fit, criterion, log })
}
