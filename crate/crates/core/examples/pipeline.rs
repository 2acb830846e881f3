//! Drives a fit from a JSON run config, then evaluates and forecasts the
//! fitted artifact, as the command-line tool does.

use loadcast::cli::config::RunConfig;
use loadcast::cli::pipeline::{evaluate_run, fit_run, forecast_run};
use loadcast::synth::{generate_synthetic, SynthConfig};
use loadcast::Day;

const CONFIG: &str = r#"{
  "target": "load",
  "preprocess": { "interpolate": true, "log": true },
  "selection": { "mode": "fixed", "model": { "family": "arima", "order": { "p": 1, "d": 1, "q": 1 }, "exog": true } },
  "split": "2023-07-01"
}"#;

fn main() -> loadcast::Result<()> {
    let ds = generate_synthetic(&SynthConfig::default())?;
    let cfg = RunConfig::from_json(CONFIG)?;
    let (artifact, report) = fit_run(&ds, &cfg)?;
    println!(
        "{} trained on {} days through {}",
        report.model, report.n_train, report.train_end
    );
    let eval = evaluate_run(&ds, &artifact, None)?;
    println!(
        "held-out {} days: RMSE {:.2} (original), {:.5} (log scale)",
        eval.n_test, eval.original.rmse, eval.transformed.rmse
    );
    let until = Day::from_ymd(2024, 1, 7).expect("valid date");
    let (_, fc) = forecast_run(&ds, &artifact, until)?;
    let tail: Vec<String> = fc
        .dates()
        .zip(&fc.original)
        .skip(fc.horizon() - 3)
        .map(|(d, v)| format!("{d} {v:.0}"))
        .collect();
    println!("{} forecast days, ending {}", fc.horizon(), tail.join(", "));
    Ok(())
}
