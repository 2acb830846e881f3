//! Stationarity diagnostics: autocorrelation, partial autocorrelation and
//! the augmented Dickey–Fuller unit-root test.

mod adf;
mod correlogram;

pub use adf::{adf_test, adf_test_fixed, schwert_max_lag, AdfResult, CriticalValues, Regression, SIGNIFICANCE};
pub use correlogram::{acf, durbin_levinson, pacf, CorrelogramPoint};
