//! Unit-root test and correlograms of daily load, before and after one
//! difference.

use loadcast::diagnostics::{acf, adf_test, pacf, Regression};
use loadcast::preprocess::difference_values;
use loadcast::synth::{generate_synthetic, SynthConfig};
use loadcast::Column;

fn report(name: &str, x: &[f64]) -> loadcast::Result<()> {
    let adf = adf_test(x, Regression::ConstantTrend, None)?;
    println!(
        "{name}: ADF {:.3} with {} lags, p = {:.4}, 5% critical {:.3} -> {}",
        adf.statistic,
        adf.lags,
        adf.p_value,
        adf.critical.five_pct,
        if adf.stationary {
            "stationary"
        } else {
            "unit root not rejected"
        }
    );
    let r = acf(x, 14)?;
    let p = pacf(x, 14)?;
    println!("  lag    acf   pacf  (band {:.3})", r[1].band);
    for (a, b) in r.iter().skip(1).zip(&p) {
        let flag = if a.value.abs() > a.band { "*" } else { "" };
        println!("  {:>3} {:>6.3} {:>6.3} {flag}", a.lag, a.value, b.value);
    }
    Ok(())
}

fn main() -> loadcast::Result<()> {
    let ds = generate_synthetic(&SynthConfig::default())?;
    let load = ds.series(Column::Load).dense()?;
    report("levels", &load)?;
    report("first difference", &difference_values(&load, 1, 0, 1)?)?;
    Ok(())
}
