//! Dimensions of k-means clusters against the dimension of the whole dataset.

use cordim::baselines::kmeans;
use cordim::dataset::{gen_independent, random_profile, BinaryDataset, ProfileKind};
use cordim::dimension::{normalized_cd, DimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let k = 80;
    let parts = (0..3)
        .map(|c| gen_independent(k, 400, &random_profile(k, ProfileKind::Margin, 40 + c)?, c))
        .collect::<Result<Vec<_>, _>>()?;
    let whole = BinaryDataset::vstack(&parts);
    let cfg = DimConfig::default();

    let clustering = kmeans(&whole, 3, 0)?;
    println!(
        "k-means objective {:.1} after {} iterations",
        clustering.objective, clustering.iterations
    );
    println!("unit\trows\tcd\tncd");
    for (i, members) in clustering.members().iter().enumerate() {
        let r = normalized_cd(&whole.select_rows(members), &cfg)?;
        println!("cluster {}\t{}\t{:.3}\t{}", i + 1, members.len(), r.cd_data, r.h);
    }
    let r = normalized_cd(&whole, &cfg)?;
    println!("whole\t{}\t{:.3}\t{}", whole.n_rows(), r.cd_data, r.h);
    Ok(())
}
