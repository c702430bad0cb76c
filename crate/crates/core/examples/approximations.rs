//! Closed-form approximations against the exact independent model.

use cordim::dataset::{MarginProfile, ProfileKind};
use cordim::dimension::{c_alpha, cd_ind_model, prop1_approx, prop2_check, prop3_estimate, DimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = DimConfig::default();
    println!("C(1/4) = {:.4}", c_alpha(0.25)?);

    println!("H\tp\tcd_exact\tapprox");
    for &h in &[50usize, 200, 1000, 5000] {
        for &p in &[0.05, 0.2, 0.5] {
            let prof = MarginProfile::uniform(h, p, ProfileKind::Margin)?;
            println!(
                "{h}\t{p}\t{:.3}\t{:.3}",
                cd_ind_model(h, p, &cfg)?,
                prop1_approx(&prof, 0.25)?
            );
        }
    }

    // dimension between fixed fractions of the mean distance grows with the mean
    println!("mu\tcd_R(mu/4, 3mu/4)");
    for &h in &[20usize, 40, 80, 160] {
        let pt = prop2_check(
            &MarginProfile::uniform(h, 0.3, ProfileKind::Margin)?,
            0.25,
            0.75,
            &cfg,
        )?;
        println!("{:.2}\t{:.3}", pt.mu, pt.cd);
    }

    // published dimensions of two real datasets
    println!("Paleo estimate {:.2}", prop3_estimate(1.21, 3.20, 139)?);
    println!("Accidents estimate {:.2}", prop3_estimate(3.79, 5.50, 469)?);
    Ok(())
}
