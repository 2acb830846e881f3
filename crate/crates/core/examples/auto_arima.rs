//! Automatic ARIMA order selection by information criterion.

use loadcast::stat_models::{auto_arima, Criterion, FitOptions, SearchBounds};
use loadcast::synth::{generate_synthetic, SynthConfig};
use loadcast::Column;

fn main() -> loadcast::Result<()> {
    let ds = generate_synthetic(&SynthConfig::default())?;
    let load = ds.series(Column::Load).slice(0..540)?;
    let bounds = SearchBounds {
        max_p: 2,
        max_q: 2,
        ..SearchBounds::default()
    };
    let auto = auto_arima(&load, bounds, Criterion::Bic, None, &FitOptions::default())?;
    println!("selected {} with BIC {:.2}", auto.fit.label(), auto.fit.bic);
    let mut ranked: Vec<_> = auto
        .log
        .iter()
        .filter_map(|c| c.outcome.as_ref().ok().map(|v| (*v, c.order)))
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0));
    println!("best candidates:");
    for (score, o) in ranked.iter().take(5) {
        println!("  ({},{},{})  {score:.2}", o.p, o.d, o.q);
    }
    let failed = auto.log.iter().filter(|c| c.outcome.is_err()).count();
    println!("{} candidates evaluated, {failed} failed", auto.log.len());
    Ok(())
}
