//! Simple exponential smoothing with the smoothing weight chosen by least
//! squares, against fixed weights.

use loadcast::eval::{compute_metrics, Scale};
use loadcast::stat_models::{ses_fit, ses_forecast};
use loadcast::synth::{generate_synthetic, SynthConfig};
use loadcast::Column;

fn main() -> loadcast::Result<()> {
    let ds = generate_synthetic(&SynthConfig::default())?;
    let load = ds.series(Column::Load);
    let y = load.dense()?;
    let n_train = 480;
    let train = load.slice(0..n_train)?;
    for alpha in [Some(0.1), Some(0.5), None] {
        let fit = ses_fit(&train, alpha)?;
        let pred = fit.one_step_predictions(&y, n_train);
        let m = compute_metrics(&y[n_train..], &pred, Scale::Original)?;
        let how = if alpha.is_some() { "fixed" } else { "fitted" };
        println!(
            "alpha {:.4} ({how}): train SSE {:.0}, held-out RMSE {:.2}",
            fit.alpha,
            fit.sse(&y[..n_train]),
            m.rmse
        );
    }
    let (fit, fc) = ses_forecast(&train, None, 7)?;
    println!(
        "flat forecast {:.1} for the {} days after {}",
        fit.level,
        fc.horizon(),
        fc.origin
    );
    Ok(())
}
