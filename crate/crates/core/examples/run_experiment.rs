//! Runs one experiment at its default size and prints the rows and summary as TSV.
//!
//! cargo run --release --example run_experiment -- markov

use std::io;

use cordim::harness::{run_experiment, ExperimentName, ExperimentSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let name: ExperimentName = std::env::args()
        .nth(1)
        .as_deref()
        .unwrap_or("slope-musigma")
        .parse()?;
    let mut spec = ExperimentSpec::new(name);
    if let Some(seed) = std::env::args().nth(2) {
        spec.seed = seed.parse()?;
    }
    let out = run_experiment(&spec)?;
    out.write_tsv(io::stdout().lock())?;
    Ok(())
}
