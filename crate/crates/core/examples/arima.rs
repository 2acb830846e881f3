//! Fits ARIMA(2,1,2) and an ARIMAX on temperature and humidity to daily
//! load, scores one-step predictions on a held-out year and forecasts two
//! weeks ahead.

use loadcast::eval::{compute_metrics, Scale};
use loadcast::stat_models::{fit_arima, ArimaOrder, FitOptions};
use loadcast::synth::{generate_synthetic, SynthConfig};
use loadcast::{Column, ExogMatrix};

fn main() -> loadcast::Result<()> {
    let ds = generate_synthetic(&SynthConfig::default())?;
    let load = ds.series(Column::Load);
    let y = load.dense()?;
    let exog = ExogMatrix::from_dataset(&ds, &[Column::Temperature, Column::Humidity])?;
    let n_train = 365;
    let train = load.slice(0..n_train)?;

    for (name, x) in [("ARIMA(2,1,2)", None), ("ARIMAX(2,1,2)", Some(&exog))] {
        let fit = fit_arima(
            &train,
            ArimaOrder::new(2, 1, 2),
            x.map(|e| e.slice(0..n_train)).as_ref(),
            &FitOptions::default(),
        )?;
        println!("{name}: AR {:?} MA {:?} exog {:?}", fit.ar, fit.ma, fit.exog_coef);
        println!("  sigma2 {:.2}, AIC {:.2}, BIC {:.2}", fit.sigma2, fit.aic, fit.bic);
        let pred = fit.one_step_predictions(&y, x, n_train)?;
        let m = compute_metrics(&y[n_train..], &pred, Scale::Original)?;
        println!(
            "  held-out one-step: RMSE {:.2}, MAE {:.2}, MAPE {:.3}%",
            m.rmse,
            m.mae,
            m.mape.unwrap_or(f64::NAN)
        );
        let future = x.map(|e| e.slice(n_train..n_train + 14));
        let fc = fit.forecast(14, future.as_ref())?;
        let days: Vec<String> = fc
            .dates()
            .zip(&fc.original)
            .map(|(d, v)| format!("{d} {v:.0}"))
            .take(3)
            .collect();
        println!("  forecast from {}: {} ...", fc.origin, days.join(", "));
    }
    Ok(())
}
