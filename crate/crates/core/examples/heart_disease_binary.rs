//! Rank-3 angle LVQ on the binary Cleveland heart-disease problem.
//!
//! Needs `processed.cleveland.data` from the UCI repository:
//!
//!     cargo run --release --example heart_disease_binary -- path/to/processed.cleveland.data

use alvq::data::{parse_cleveland, relabel, ClassMode, MissingPolicy, CLEVELAND_FEATURES};
use alvq::evaluation::{run_experiment, ExperimentSpec};
use alvq::{TrainingConfig, Variant};

fn main() -> alvq::Result<()> {
    let path = std::env::args()
        .nth(1)
        .or_else(|| std::env::var("ALVQ_CLEVELAND").ok())
        .unwrap_or_else(|| "crates/core/data/processed.cleveland.data".into());
    let Ok(text) = std::fs::read_to_string(&path) else {
        eprintln!("{path}: not found; download processed.cleveland.data from the UCI heart-disease collection");
        return Ok(());
    };
    let ds = relabel(&parse_cleveland(&text)?, ClassMode::Binary, MissingPolicy::KeepMinusNine);
    println!("{} samples, class counts {:?}", ds.len(), ds.class_counts());

    let cfg = TrainingConfig {
        epochs: 500,
        beta: 1.0,
        rank: Some(3),
        seed: 1,
        ..TrainingConfig::default()
    };
    let mut spec = ExperimentSpec::new("hd-binary", Variant::AngleGlobal, cfg);
    spec.folds = 5;
    spec.runs = 5;
    spec.seed = 1;
    let report = run_experiment(&ds, &spec, None)?;
    let s = report.best();
    println!(
        "test error {:.3}, sensitivity {:.3}, specificity {:.3}",
        s.test_error.mean.unwrap_or(f64::NAN),
        s.test_sensitivity.mean.unwrap_or(f64::NAN),
        s.test_specificity.mean.unwrap_or(f64::NAN)
    );

    let rel = &s.mean_relevances[0].values;
    let mut order: Vec<usize> = (0..rel.len()).collect();
    order.sort_by(|&a, &b| rel[b].total_cmp(&rel[a]));
    for &j in &order[..6] {
        println!("  {:<9} {:.3}", CLEVELAND_FEATURES[j], rel[j]);
    }
    Ok(())
}
