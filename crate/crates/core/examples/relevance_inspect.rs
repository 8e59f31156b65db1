//! Feature relevances and eigenvalue spectra of trained global and local
//! angle models.

use alvq::data::generate_football;
use alvq::evaluation::{eigen_relevance, feature_relevances, EFFECTIVE_RANK_THRESHOLD};
use alvq::models::train;
use alvq::{TrainingConfig, Variant};

fn main() -> alvq::Result<()> {
    let ds = generate_football(2000, 3);
    for (variant, beta) in [(Variant::AngleGlobal, 10.0), (Variant::AngleLocal, 30.0)] {
        let cfg = TrainingConfig {
            prototypes_per_class: 3,
            epochs: 100,
            beta,
            ..TrainingConfig::default()
        };
        let model = train(&ds, &cfg, variant)?.model;
        println!("{}", variant.display_name());
        for r in feature_relevances(&model) {
            let v: Vec<String> = r.values.iter().map(|x| format!("{x:.3}")).collect();
            println!("  {:<14} relevances [{}]", r.matrix, v.join(", "));
        }
        for e in eigen_relevance(&model) {
            let v: Vec<String> = e.eigenvalues.iter().map(|x| format!("{x:.3}")).collect();
            println!(
                "  {:<14} eigenvalues [{}], effective rank {} (threshold {EFFECTIVE_RANK_THRESHOLD})",
                e.matrix,
                v.join(", "),
                e.effective_rank
            );
        }
    }
    Ok(())
}
