//! PCA components for 90% of the variance and the average absolute
//! correlation, next to the normalized dimension.

use cordim::baselines::{avg_abs_correlation, pca_summary};
use cordim::dataset::{gen_independent, gen_markov, MarginProfile, ProfileKind};
use cordim::dimension::{normalized_cd, DimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let k = 60;
    let indep = gen_independent(k, 1000, &MarginProfile::uniform(k, 0.3, ProfileKind::Margin)?, 5)?;
    let chain = gen_markov(
        k,
        1000,
        &MarginProfile::uniform(k, 0.08, ProfileKind::Reversal)?,
        5,
    )?;

    println!("data\tpca90\tavg_corr\tncd\tshare_of_variance_in_ncd_components");
    for (name, d) in [("independent", &indep), ("markov", &chain)] {
        let pca = pca_summary(d)?;
        let ncd = normalized_cd(d, &DimConfig::default())?.h;
        println!(
            "{name}\t{}\t{:.4}\t{ncd}\t{:.3}",
            pca.components_for(0.9)?,
            avg_abs_correlation(d)?,
            pca.explained_by(ncd)
        );
    }
    Ok(())
}
