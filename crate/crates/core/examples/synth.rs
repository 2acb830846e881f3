//! Generates the default synthetic dataset and summarizes each column.
//!
//! cargo run --example synth -- [seed]

use loadcast::cli::pipeline::Describe;
use loadcast::synth::{generate_synthetic, SynthConfig};
use loadcast::Column;

fn main() -> loadcast::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(42);
    let cfg = SynthConfig {
        seed,
        ..SynthConfig::default()
    };
    let ds = generate_synthetic(&cfg)?;
    println!("{} days from {} to {} (seed {seed})", ds.len(), ds.start(), ds.end());
    println!(
        "{:<12} {:>9} {:>9} {:>9} {:>9} {:>9}",
        "column", "mean", "std", "q25", "median", "q75"
    );
    for col in Column::ALL {
        let d = Describe::of(&ds.series(col).dense()?)?;
        println!(
            "{:<12} {:>9.2} {:>9.2} {:>9.2} {:>9.2} {:>9.2}",
            col.name(),
            d.mean,
            d.std,
            d.q25,
            d.median,
            d.q75
        );
    }
    let csv = ds.to_csv();
    println!("\nfirst rows:");
    for line in csv.lines().take(4) {
        println!("{line}");
    }
    Ok(())
}
