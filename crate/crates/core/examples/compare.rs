//! Fits every model family to synthetic load and prints the held-out
//! comparison table. A smaller LSTM than the preset keeps the run short.

use loadcast::cli::config::Preset;
use loadcast::cli::pipeline::{compare_run, compare_table};
use loadcast::family::ModelSpec;
use loadcast::synth::{generate_synthetic, SynthConfig};

fn main() -> loadcast::Result<()> {
    let ds = generate_synthetic(&SynthConfig::default())?;
    let mut setup = Preset::PaperLoad.setup(48, 42);
    for (_, spec) in setup.models.iter_mut() {
        if let ModelSpec::Lstm { train, .. } = spec {
            train.epochs = 120;
        }
    }
    let report = compare_run(&ds, &setup)?;
    print!("{}", compare_table(&report));
    for row in report.rows.iter().filter(|r| r.error.is_some()) {
        println!("{} failed: {}", row.model, row.error.as_deref().unwrap_or_default());
    }
    Ok(())
}
