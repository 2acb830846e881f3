//! ARIMA-family models and simple exponential smoothing.

mod arima;
mod auto;
mod ses;

pub use arima::{
    css_loglik, fit_arima, forecast_arima, information_criteria, ArimaFit, ArimaOrder, Enforcement, FitOptions,
    RootCheck,
};
pub use auto::{auto_arima, AutoArima, Candidate, Criterion, SearchBounds};
pub use ses::{ses_fit, ses_forecast, SesFit};
