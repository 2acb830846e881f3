//! LSTM and gradient-boosted tree regressors over lagged windows.

mod adam;
mod gbt;
mod lstm;
mod windows;

pub use adam::{clip_global_norm, Adam, AdamConfig};
pub use gbt::{gbt_fit, GbtModel, GbtParams, Node, Tree};
pub use lstm::{lstm_cell_step, lstm_fit, mse_gradient, mse_loss, predict, LstmModel, LstmParams, TrainConfig};
pub use windows::{
    make_windows, one_step_predictions, recursive_forecast, FeatureSpec, Scaler, Scaling, SupervisedSet, WindowModel,
};

use crate::data::{ExogMatrix, Series};
use crate::error::Result;
use crate::forecast::Forecast;

/// Recursive forecast from an LSTM; see [`recursive_forecast`].
pub fn lstm_forecast(m: &LstmModel, s: &Series, horizon: usize, future_exog: Option<&ExogMatrix>) -> Result<Forecast> {
    recursive_forecast(m, s, horizon, future_exog)
}

/// Recursive forecast from boosted trees; see [`recursive_forecast`].
pub fn gbt_forecast(m: &GbtModel, s: &Series, horizon: usize, future_exog: Option<&ExogMatrix>) -> Result<Forecast> {
    recursive_forecast(m, s, horizon, future_exog)
}
