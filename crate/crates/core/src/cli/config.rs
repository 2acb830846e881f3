//! Run configuration and the bundled presets.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{Day, Target};
use crate::error::{Error, Result};
use crate::eval::MetricId;
use crate::family::{Family, ModelSpec, DEFAULT_WINDOW};
use crate::ml_models::{GbtParams, TrainConfig};
use crate::stat_models::{ArimaOrder, Criterion, FitOptions, SearchBounds};

/// Savitzky–Golay settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Savgol {
    pub window: usize,
    pub polyorder: usize,
}

impl FromStr for Savgol {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let parts = parse_list(s, 2)?;
        Ok(Savgol {
            window: parts[0],
            polyorder: parts[1],
        })
    }
}

/// Preprocessing toggles, applied in the order interpolate, smooth, log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Preprocess {
    pub interpolate: bool,
    /// Smooths the training span only.
    pub savgol: Option<Savgol>,
    pub log: bool,
}

impl Default for Preprocess {
    fn default() -> Self {
        Preprocess {
            interpolate: true,
            savgol: None,
            log: false,
        }
    }
}

/// How the model is chosen. Exactly one mode per run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Selection {
    Fixed {
        model: ModelSpec,
    },
    Auto {
        #[serde(default)]
        criterion: Criterion,
        #[serde(default)]
        bounds: SearchBounds,
        #[serde(default)]
        exog: bool,
    },
    Grid {
        family: Family,
        grid: BTreeMap<String, Vec<f64>>,
        #[serde(default = "default_folds")]
        folds: usize,
        #[serde(default)]
        metric: MetricId,
    },
}

fn default_folds() -> usize {
    5
}

/// Everything a `fit` run needs; loaded from JSON and overridden by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default)]
    pub input: Option<PathBuf>,
    #[serde(default = "default_target")]
    pub target: Target,
    #[serde(default)]
    pub preprocess: Preprocess,
    pub selection: Selection,
    /// First test day; the model trains on the days before it.
    #[serde(default)]
    pub split: Option<Day>,
    #[serde(default)]
    pub horizon_end: Option<Day>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_target() -> Target {
    Target::Load
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Parses `a,b,c` into exactly `n` non-negative integers.
pub fn parse_list(s: &str, n: usize) -> Result<Vec<usize>> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Config(format!("expected {n} comma-separated integers, got {s:?}")))?;
    if parts.len() != n {
        return Err(Error::Config(format!(
            "expected {n} comma-separated integers, got {s:?}"
        )));
    }
    Ok(parts)
}

/// Parses `key=value` with a numeric value.
pub fn parse_param(s: &str) -> Result<(String, f64)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("expected key=value, got {s:?}")))?;
    let v: f64 = v
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("value of {k:?} is not a number")))?;
    Ok((k.trim().to_string(), v))
}

/// Bundled comparison settings per target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    PaperLoad,
    PaperDeficit,
    PaperGeneration,
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper-load" => Ok(Preset::PaperLoad),
            "paper-deficit" => Ok(Preset::PaperDeficit),
            "paper-generation" => Ok(Preset::PaperGeneration),
            _ => Err(Error::Config(format!(
                "unknown preset {s:?} (expected paper-load, paper-deficit or paper-generation)"
            ))),
        }
    }
}

/// The model line-up compared by `compare`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareSetup {
    pub target: Target,
    pub split: Day,
    pub horizon_end: Day,
    pub preprocess: Preprocess,
    /// Display name and spec, one per row.
    pub models: Vec<(String, ModelSpec)>,
}

pub const PRESET_HIDDEN: usize = 100;

impl Preset {
    pub fn target(self) -> Target {
        match self {
            Preset::PaperLoad => Target::Load,
            Preset::PaperDeficit => Target::Deficit,
            Preset::PaperGeneration => Target::Generation,
        }
    }

    /// ARIMA, SARIMA and ARIMAX orders.
    pub fn orders(self) -> (ArimaOrder, ArimaOrder, ArimaOrder) {
        match self {
            Preset::PaperLoad => (
                ArimaOrder::new(2, 1, 2),
                ArimaOrder::seasonal(3, 0, 1, 1, 2, 0, 12),
                ArimaOrder::new(1, 1, 0),
            ),
            Preset::PaperDeficit => (
                ArimaOrder::new(2, 0, 1),
                ArimaOrder::seasonal(3, 0, 0, 0, 0, 1, 12),
                ArimaOrder::new(1, 0, 2),
            ),
            Preset::PaperGeneration => (
                ArimaOrder::new(1, 1, 1),
                ArimaOrder::seasonal(0, 1, 2, 1, 1, 0, 12),
                ArimaOrder::new(2, 1, 0),
            ),
        }
    }

    pub fn setup(self, hidden: usize, seed: u64) -> CompareSetup {
        let (arima, sarima, arimax) = self.orders();
        let fixed = |order: ArimaOrder, exog: bool| ModelSpec::Arima {
            order,
            exog,
            options: FitOptions::default(),
        };
        let models = vec![
            ("ARIMA".to_string(), fixed(arima, false)),
            ("Dynamic ARIMA".to_string(), fixed(arimax, true)),
            (
                "LSTM".to_string(),
                ModelSpec::Lstm {
                    hidden,
                    window: DEFAULT_WINDOW,
                    calendar: true,
                    exog: true,
                    train: TrainConfig {
                        seed,
                        ..TrainConfig::default()
                    },
                },
            ),
            ("Naive".to_string(), ModelSpec::Naive),
            ("SARIMA".to_string(), fixed(sarima, false)),
            ("SES".to_string(), ModelSpec::Ses { alpha: None }),
            (
                "XGBoost".to_string(),
                ModelSpec::Gbt {
                    params: GbtParams::default(),
                    window: DEFAULT_WINDOW,
                    calendar: true,
                    exog: true,
                },
            ),
        ];
        CompareSetup {
            target: self.target(),
            split: Day::from_ymd(2023, 5, 1).expect("valid date"),
            horizon_end: Day::from_ymd(2025, 12, 31).expect("valid date"),
            preprocess: Preprocess {
                interpolate: true,
                savgol: None,
                log: true,
            },
            models,
        }
    }
}
