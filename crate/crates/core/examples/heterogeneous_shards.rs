//! Dirichlet label skew: per-client class frequencies as the concentration
//! parameter moves from strongly skewed to nearly iid.

use fedminimax::problems::{make_heterogeneous_shards, DatasetSpec};

fn main() -> fedminimax::Result<()> {
    let spec = DatasetSpec::GaussianClasses {
        num_classes: 3,
        feature_dim: 2,
        separation: 1.0,
        class_weights: None,
    };
    for concentration in [0.1, 1.0, 100.0] {
        println!("concentration {concentration}");
        for shard in make_heterogeneous_shards(&spec, 1200, 4, concentration, 0)? {
            let freq: Vec<String> = (0..3)
                .map(|c| {
                    let count = shard.labels.iter().filter(|&&l| l == c).count();
                    format!("{:.2}", count as f64 / shard.len() as f64)
                })
                .collect();
            println!(
                "  client {}: {} samples, class frequencies [{}]",
                shard.client_id,
                shard.len(),
                freq.join(", ")
            );
        }
    }
    Ok(())
}
