//! Trains a small LSTM on 30-day load windows with calendar and weather
//! features, then forecasts recursively.

use loadcast::eval::{compute_metrics, Scale};
use loadcast::ml_models::{lstm_fit, lstm_forecast, make_windows, one_step_predictions, TrainConfig};
use loadcast::synth::{generate_synthetic, SynthConfig};
use loadcast::{Climatology, Column, ExogMatrix};

fn main() -> loadcast::Result<()> {
    let ds = generate_synthetic(&SynthConfig::default())?;
    let load = ds.series(Column::Load);
    let y = load.dense()?;
    let exog = ExogMatrix::from_dataset(&ds, &[Column::Temperature, Column::Humidity])?;
    let n_train = 600;
    let train = load.slice(0..n_train)?;
    let data = make_windows(&train, 30, Some(&exog.slice(0..n_train)), true)?;
    println!("{} samples of {} features", data.len(), data.feature_names().len());

    let cfg = TrainConfig {
        epochs: 40,
        ..TrainConfig::default()
    };
    let mut model = lstm_fit(&data, 16, &cfg)?;
    let trace = &model.loss_trace;
    println!(
        "training loss {:.5} -> {:.5} over {} epochs",
        trace[0],
        trace[trace.len() - 1],
        trace.len()
    );

    let pred = one_step_predictions(&model, &load, Some(&exog), n_train)?;
    let m = compute_metrics(&y[n_train..], &pred, Scale::Original)?;
    println!(
        "held-out one-step: RMSE {:.2}, MAPE {:.3}%",
        m.rmse,
        m.mape.unwrap_or(f64::NAN)
    );

    // beyond the data, weather comes from its day-of-year averages
    model.climatology = Some(Climatology::fit(&exog)?);
    let fc = lstm_forecast(&model, &load, 7, None)?;
    for (d, v) in fc.dates().zip(&fc.original) {
        println!("  {d} {v:.1}");
    }
    Ok(())
}
