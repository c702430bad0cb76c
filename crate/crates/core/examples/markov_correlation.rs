//! Stronger dependence between adjacent columns gives a smaller dimension.

use cordim::dataset::{gen_markov, margins, t_measure, MarginProfile, ProfileKind};
use cordim::dimension::{cd_a, dataset_cdf, independent_cdf, DimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = DimConfig::default();
    let k = 100;
    println!("t_i\tt\tcd\tcd_ind");
    for &ti in &[0.02, 0.05, 0.1, 0.2, 0.3, 0.5] {
        let mut t = MarginProfile::uniform(k, ti, ProfileKind::Reversal)?;
        t.values[0] = 0.0;
        let d = gen_markov(k, 2000, &t, 1)?;
        let cd = cd_a(&dataset_cdf(&d, &cfg)?, 0.25, 0.75, 50)?.slope;
        let cd_ind = cd_a(&independent_cdf(&margins(&d)?, &cfg)?, 0.25, 0.75, 50)?.slope;
        println!("{ti}\t{:.2}\t{cd:.3}\t{cd_ind:.3}", t_measure(&t)?);
    }
    Ok(())
}
