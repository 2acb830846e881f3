//! Uniform fit / predict / forecast interface over every model family.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{Climatology, ExogMatrix, Series};
use crate::error::{Error, Result};
use crate::forecast::Forecast;
use crate::ml_models::{
    gbt_fit, lstm_fit, make_windows, one_step_predictions, recursive_forecast, GbtModel, GbtParams, LstmModel,
    TrainConfig,
};
use crate::preprocess::TransformChain;
use crate::stat_models::{fit_arima, ses_fit, ArimaFit, ArimaOrder, FitOptions, SesFit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Arima,
    Ses,
    Gbt,
    Lstm,
    Naive,
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "arima" | "sarima" | "arimax" => Ok(Family::Arima),
            "ses" => Ok(Family::Ses),
            "gbt" | "xgboost" => Ok(Family::Gbt),
            "lstm" => Ok(Family::Lstm),
            "naive" => Ok(Family::Naive),
            _ => Err(Error::UnknownFamily(s.to_string())),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Arima => "arima",
            Family::Ses => "ses",
            Family::Gbt => "gbt",
            Family::Lstm => "lstm",
            Family::Naive => "naive",
        })
    }
}

/// A fully specified, not yet fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ModelSpec {
    Arima {
        order: ArimaOrder,
        /// Regress on the exogenous columns (ARIMAX).
        #[serde(default)]
        exog: bool,
        #[serde(default)]
        options: FitOptions,
    },
    Ses {
        #[serde(default)]
        alpha: Option<f64>,
    },
    Gbt {
        #[serde(default)]
        params: GbtParams,
        window: usize,
        #[serde(default = "yes")]
        calendar: bool,
        #[serde(default)]
        exog: bool,
    },
    Lstm {
        hidden: usize,
        window: usize,
        #[serde(default = "yes")]
        calendar: bool,
        #[serde(default)]
        exog: bool,
        #[serde(default)]
        train: TrainConfig,
    },
    /// Tomorrow equals today.
    Naive,
}

fn yes() -> bool {
    true
}

pub const DEFAULT_WINDOW: usize = 30;
pub const DEFAULT_HIDDEN: usize = 32;

impl ModelSpec {
    pub fn family(&self) -> Family {
        match self {
            ModelSpec::Arima { .. } => Family::Arima,
            ModelSpec::Ses { .. } => Family::Ses,
            ModelSpec::Gbt { .. } => Family::Gbt,
            ModelSpec::Lstm { .. } => Family::Lstm,
            ModelSpec::Naive => Family::Naive,
        }
    }

    pub fn uses_exog(&self) -> bool {
        match self {
            ModelSpec::Arima { exog, .. } | ModelSpec::Gbt { exog, .. } | ModelSpec::Lstm { exog, .. } => *exog,
            _ => false,
        }
    }

    /// Trainable parameter count implied by the configuration.
    pub fn n_params(&self, n_exog: usize) -> usize {
        let extras = |calendar: bool, exog: bool| n_exog * exog as usize + 9 * calendar as usize;
        match self {
            ModelSpec::Arima { order, exog, .. } => order.n_coefficients() + n_exog * *exog as usize,
            ModelSpec::Ses { alpha } => alpha.is_none() as usize,
            ModelSpec::Gbt { params, .. } => params.n_trees * (1 << params.max_depth),
            ModelSpec::Lstm {
                hidden, calendar, exog, ..
            } => 4 * hidden * (hidden + 2) + hidden + extras(*calendar, *exog) + 1,
            ModelSpec::Naive => 0,
        }
    }

    /// Builds a spec from named numeric settings, filling the rest with
    /// defaults. Keys: arima `p d q P D Q s exog intercept`; ses `alpha`;
    /// gbt `n_trees learning_rate max_depth gamma lambda window calendar
    /// exog`; lstm `hidden window epochs batch_size learning_rate seed
    /// calendar exog`.
    pub fn from_params(family: Family, params: &BTreeMap<String, f64>) -> Result<ModelSpec> {
        let known: &[&str] = match family {
            Family::Arima => &["p", "d", "q", "P", "D", "Q", "s", "exog", "intercept"],
            Family::Ses => &["alpha"],
            Family::Gbt => &[
                "n_trees",
                "learning_rate",
                "max_depth",
                "gamma",
                "lambda",
                "window",
                "calendar",
                "exog",
            ],
            Family::Lstm => &[
                "hidden",
                "window",
                "epochs",
                "batch_size",
                "learning_rate",
                "seed",
                "calendar",
                "exog",
            ],
            Family::Naive => &[],
        };
        if let Some(k) = params.keys().find(|k| !known.contains(&k.as_str())) {
            return Err(Error::BadHyperparameter(format!("{family} has no parameter {k:?}")));
        }
        let count = |k: &str, default: usize| -> Result<usize> {
            match params.get(k) {
                None => Ok(default),
                Some(v) if *v >= 0.0 && v.fract() == 0.0 => Ok(*v as usize),
                Some(v) => Err(Error::BadHyperparameter(format!(
                    "{k} = {v} must be a non-negative integer"
                ))),
            }
        };
        let flag = |k: &str, default: bool| params.get(k).map_or(default, |v| *v != 0.0);
        let real = |k: &str, default: f64| params.get(k).copied().unwrap_or(default);
        Ok(match family {
            Family::Arima => {
                let order = ArimaOrder::seasonal(
                    count("p", 1)?,
                    count("d", 0)?,
                    count("q", 0)?,
                    count("P", 0)?,
                    count("D", 0)?,
                    count("Q", 0)?,
                    count("s", 1)?,
                );
                order.validate()?;
                ModelSpec::Arima {
                    order,
                    exog: flag("exog", false),
                    options: FitOptions {
                        intercept: params.get("intercept").map(|v| *v != 0.0),
                        ..FitOptions::default()
                    },
                }
            }
            Family::Ses => ModelSpec::Ses {
                alpha: params.get("alpha").copied(),
            },
            Family::Gbt => {
                let d = GbtParams::default();
                ModelSpec::Gbt {
                    params: GbtParams {
                        n_trees: count("n_trees", d.n_trees)?,
                        learning_rate: real("learning_rate", d.learning_rate),
                        max_depth: count("max_depth", d.max_depth)?,
                        gamma: real("gamma", d.gamma),
                        lambda: real("lambda", d.lambda),
                        min_child_weight: d.min_child_weight,
                    },
                    window: count("window", DEFAULT_WINDOW)?,
                    calendar: flag("calendar", true),
                    exog: flag("exog", false),
                }
            }
            Family::Lstm => {
                let d = TrainConfig::default();
                ModelSpec::Lstm {
                    hidden: count("hidden", DEFAULT_HIDDEN)?,
                    window: count("window", DEFAULT_WINDOW)?,
                    calendar: flag("calendar", true),
                    exog: flag("exog", false),
                    train: TrainConfig {
                        epochs: count("epochs", d.epochs)?,
                        batch_size: count("batch_size", d.batch_size)?,
                        adam: crate::ml_models::AdamConfig {
                            step: real("learning_rate", d.adam.step),
                            ..d.adam
                        },
                        seed: count("seed", d.seed as usize)? as u64,
                        ..d
                    },
                }
            }
            Family::Naive => ModelSpec::Naive,
        })
    }

    /// Fits the spec to `train`; `exog`, when the spec uses it, must be
    /// aligned with `train`. `chain` records how `train` was derived from
    /// the raw data so forecasts can be mapped back.
    pub fn fit(&self, train: &Series, exog: Option<&ExogMatrix>, chain: &TransformChain) -> Result<FittedModel> {
        let exog = if self.uses_exog() {
            Some(exog.ok_or(Error::MissingFutureExog(0))?)
        } else {
            None
        };
        Ok(match self {
            ModelSpec::Arima { order, options, .. } => {
                let mut fit = fit_arima(train, *order, exog, options)?;
                fit.chain = chain.clone();
                FittedModel::Arima(fit)
            }
            ModelSpec::Ses { alpha } => {
                let mut fit = ses_fit(train, *alpha)?;
                fit.chain = chain.clone();
                FittedModel::Ses {
                    fit,
                    origin: train.end(),
                }
            }
            ModelSpec::Gbt {
                params,
                window,
                calendar,
                ..
            } => {
                let mut set = make_windows(train, *window, exog, *calendar)?;
                set.chain = chain.clone();
                let mut m = gbt_fit(&set, params)?;
                m.climatology = exog.map(Climatology::fit).transpose()?;
                FittedModel::Gbt(m)
            }
            ModelSpec::Lstm {
                hidden,
                window,
                calendar,
                train: cfg,
                ..
            } => {
                let mut set = make_windows(train, *window, exog, *calendar)?;
                set.chain = chain.clone();
                let mut m = lstm_fit(&set, *hidden, cfg)?;
                m.climatology = exog.map(Climatology::fit).transpose()?;
                FittedModel::Lstm(m)
            }
            ModelSpec::Naive => {
                let y = train.dense()?;
                FittedModel::Naive {
                    last: *y.last().ok_or(Error::EmptyData)?,
                    origin: train.end(),
                    chain: chain.clone(),
                }
            }
        })
    }
}

/// A fitted model of any family; serializes to the JSON artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum FittedModel {
    Arima(ArimaFit),
    Ses {
        fit: SesFit,
        origin: crate::data::Day,
    },
    Gbt(GbtModel),
    Lstm(LstmModel),
    Naive {
        last: f64,
        origin: crate::data::Day,
        chain: TransformChain,
    },
}

impl FittedModel {
    pub fn family(&self) -> Family {
        match self {
            FittedModel::Arima(_) => Family::Arima,
            FittedModel::Ses { .. } => Family::Ses,
            FittedModel::Gbt(_) => Family::Gbt,
            FittedModel::Lstm(_) => Family::Lstm,
            FittedModel::Naive { .. } => Family::Naive,
        }
    }

    pub fn chain(&self) -> &TransformChain {
        match self {
            FittedModel::Arima(f) => &f.chain,
            FittedModel::Ses { fit, .. } => &fit.chain,
            FittedModel::Gbt(m) => &m.chain,
            FittedModel::Lstm(m) => &m.chain,
            FittedModel::Naive { chain, .. } => chain,
        }
    }

    pub fn uses_exog(&self) -> bool {
        match self {
            FittedModel::Arima(f) => f.uses_exog(),
            FittedModel::Gbt(m) => !m.spec.exog_names.is_empty(),
            FittedModel::Lstm(m) => !m.spec.exog_names.is_empty(),
            _ => false,
        }
    }

    /// Smallest index from which one-step predictions are defined.
    pub fn warmup(&self) -> usize {
        match self {
            FittedModel::Arima(f) => f.warmup(),
            FittedModel::Ses { .. } => 1,
            FittedModel::Gbt(m) => m.spec.window,
            FittedModel::Lstm(m) => m.spec.window,
            FittedModel::Naive { .. } => 1,
        }
    }

    /// One-step-ahead predictions of `s[t]` for `t` in `from..s.len()` on the
    /// modelling scale, each using only observations before `t`.
    pub fn one_step(&self, s: &Series, exog: Option<&ExogMatrix>, from: usize) -> Result<Vec<f64>> {
        if from == 0 || from > s.len() {
            return Err(Error::TooShort(format!("cannot predict from index {from}")));
        }
        let exog = if self.uses_exog() { exog } else { None };
        match self {
            FittedModel::Arima(f) => f.one_step_predictions(&s.dense()?, exog, from),
            FittedModel::Ses { fit, .. } => Ok(fit.one_step_predictions(&s.dense()?, from)),
            FittedModel::Gbt(m) => one_step_predictions(m, s, exog, from),
            FittedModel::Lstm(m) => one_step_predictions(m, s, exog, from),
            FittedModel::Naive { .. } => {
                let y = s.dense()?;
                Ok(y[from - 1..y.len() - 1].to_vec())
            }
        }
    }

    /// Multi-step forecast from the end of `history` (ARIMA and SES always
    /// continue from the end of their training data).
    pub fn forecast(&self, history: &Series, horizon: usize, future_exog: Option<&ExogMatrix>) -> Result<Forecast> {
        let mut fc = match self {
            FittedModel::Arima(f) => f.forecast(horizon, future_exog)?,
            FittedModel::Ses { fit, origin } => fit.forecast(*origin, horizon)?,
            FittedModel::Gbt(m) => recursive_forecast(m, history, horizon, future_exog)?,
            FittedModel::Lstm(m) => recursive_forecast(m, history, horizon, future_exog)?,
            FittedModel::Naive { last, origin, chain } => {
                let transformed = vec![*last; horizon];
                Forecast {
                    model: "Naive".into(),
                    origin: *origin,
                    original: chain.invert(&transformed)?,
                    transformed,
                }
            }
        };
        if fc.model.is_empty() {
            fc.model = self.family().to_string();
        }
        Ok(fc)
    }
}
