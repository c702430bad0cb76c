//! Load a FIMI transaction file (or a small built-in one) and print its
//! quantile correlation dimension.
//!
//! cargo run --example load_and_measure -- path/to/data.dat

use cordim::dataset::{load_dataset, load_path, Format};
use cordim::dimension::{cd_a, dataset_cdf, DimConfig};

const BASKETS: &str = "\
1 2 5
2 4
2 3
1 2 4
1 3
2 3
1 3
1 2 3 5
1 2 3
0 4 5
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let d = match std::env::args().nth(1) {
        Some(path) => load_path(path, Format::Fimi)?,
        None => load_dataset(BASKETS.as_bytes(), Format::Fimi)?,
    };
    println!(
        "K={} N={} ones={} density={:.4}",
        d.n_cols(),
        d.n_rows(),
        d.ones(),
        d.density()
    );

    let cfg = DimConfig::default();
    let cdf = dataset_cdf(&d, &cfg)?;
    let est = cd_a(&cdf, cfg.alpha1, cfg.alpha2, cfg.grid_n)?;
    println!(
        "cd_A(1/4, 3/4) = {:.4} over r in [{:.3}, {:.3}] ({})",
        est.slope,
        est.r1,
        est.r2,
        cdf.basis()
    );
    Ok(())
}
