//! Gradient-boosted trees on lagged load, calendar and weather features.

use loadcast::eval::{compute_metrics, Scale};
use loadcast::ml_models::{gbt_fit, gbt_forecast, make_windows, one_step_predictions, GbtParams};
use loadcast::synth::{generate_synthetic, SynthConfig};
use loadcast::{Column, ExogMatrix};

fn main() -> loadcast::Result<()> {
    let ds = generate_synthetic(&SynthConfig::default())?;
    let load = ds.series(Column::Load);
    let y = load.dense()?;
    let exog = ExogMatrix::from_dataset(&ds, &[Column::Temperature, Column::Humidity])?;
    let n_train = 600;
    let data = make_windows(&load.slice(0..n_train)?, 30, Some(&exog.slice(0..n_train)), true)?;

    for (n_trees, learning_rate) in [(200, 0.01), (200, 0.1)] {
        let params = GbtParams {
            n_trees,
            learning_rate,
            ..GbtParams::default()
        };
        let model = gbt_fit(&data, &params)?;
        let pred = one_step_predictions(&model, &load, Some(&exog), n_train)?;
        let m = compute_metrics(&y[n_train..], &pred, Scale::Original)?;
        println!(
            "{n_trees} trees, eta {learning_rate}: train MSE {:.5} (scaled), held-out RMSE {:.2}",
            model.mse(&data),
            m.rmse
        );
    }

    let model = gbt_fit(&data, &GbtParams::default())?;
    let fc = gbt_forecast(
        &model,
        &load.slice(0..n_train)?,
        5,
        Some(&exog.slice(n_train..n_train + 5)),
    )?;
    for ((d, v), actual) in fc.dates().zip(&fc.original).zip(&y[n_train..]) {
        println!("  {d} forecast {v:.1}, actual {actual:.1}");
    }
    Ok(())
}
