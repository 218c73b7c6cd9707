//! One framework iteration on the synthetic benchmark (the README example).

use overheat::classifiers::{ClassifierKind, TrainConfig};
use overheat::dataset::{generate_benchmark, GeneratorConfig};
use overheat::ensemble::{run_framework, FrameworkConfig};
use overheat::features::FeatureSetKind;

fn main() -> overheat::Result<()> {
    let records = generate_benchmark(&GeneratorConfig::default(), 0)?;
    let result = run_framework(
        &records,
        &FrameworkConfig {
            pool: ClassifierKind::ALL.to_vec(),
            k: 5,
            test_fraction: 0.3,
            cost_sensitive: true,
            feature_set: FeatureSetKind::Msd,
            seed: 7,
            train: TrainConfig::default(),
        },
    )?;
    println!("ranking:");
    for score in &result.ranked.ranking {
        println!("  {}: CV F1 {:.4}", score.kind, score.mean_f1);
    }
    println!("MVE test F1: {:.4}", result.mve_metrics.f1);
    Ok(())
}
