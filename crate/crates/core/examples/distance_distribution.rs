//! Exact and sampled distance CDFs of a generated dataset, side by side.

use cordim::dataset::{gen_independent, random_profile, ProfileKind};
use cordim::distdist::{exact_cdf, sampled_cdf, SampleMode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = random_profile(60, ProfileKind::Margin, 7)?;
    let d = gen_independent(60, 2000, &p, 7)?;

    let exact = exact_cdf(&d)?;
    let rows = sampled_cdf(&d, SampleMode::RowVsSample, 500, 1)?;
    let pairs = sampled_cdf(&d, SampleMode::SampleVsSample, 500, 1)?;
    let (mu, var) = exact.mean_var();
    println!("mean distance {mu:.3}, sd {:.3}", var.sqrt());
    println!("r\texact\trow_vs_sample\tsample_vs_sample");
    for r in 0..=exact.max_distance() + 1 {
        let f = |c: &cordim::DistanceCdf| c.values()[r];
        if f(&exact) > 0.0 && f(&exact) < 1.0 {
            println!("{r}\t{:.4}\t{:.4}\t{:.4}", f(&exact), f(&rows), f(&pairs));
        }
    }
    println!("median distance {:.3}", exact.inverse(0.5)?);
    Ok(())
}
