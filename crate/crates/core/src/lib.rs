//! Daily electricity forecasting toolkit.

pub mod cli;
pub mod data;
pub mod diagnostics;
pub mod error;
pub mod eval;
pub mod family;
pub mod forecast;
pub mod linalg;
pub mod ml_models;
pub mod optim;
pub mod preprocess;
pub mod stat_models;
pub mod synth;

pub use data::{parse_dataset, select_series, Climatology, Column, Dataset, Day, ExogMatrix, Series, Target};
pub use error::{Error, Result};
pub use forecast::Forecast;
