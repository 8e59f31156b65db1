//! 10-fold cross-validation on the football toy problem with an extra
//! 25000-sample hold-out set.
//!
//!     cargo run --release --example football_crossval -- [al|a2m|ag|el|...] [beta]

use alvq::data::generate_football;
use alvq::evaluation::{run_experiment, ExperimentSpec};
use alvq::{TrainingConfig, Variant};

fn main() -> alvq::Result<()> {
    let mut args = std::env::args().skip(1);
    let variant: Variant = args.next().as_deref().unwrap_or("al").parse()?;
    let beta: f64 = args.next().map_or(30.0, |b| b.parse().expect("beta must be a number"));

    let train = generate_football(5000, 1);
    let holdout = generate_football(25000, 2);
    let cfg = TrainingConfig {
        prototypes_per_class: 3,
        beta,
        seed: 1,
        ..TrainingConfig::default()
    };
    let mut spec = ExperimentSpec::new("football", variant, cfg);
    spec.seed = 1;

    let report = run_experiment(&train, &spec, Some(&holdout))?;
    let s = report.best();
    let fmt = |m: Option<f64>| m.map_or("NA".to_string(), |v| format!("{v:.3}"));
    println!("{} beta={beta}, {} folds", variant.display_name(), spec.folds);
    println!("  train error   {} ({})", fmt(s.train_error.mean), fmt(s.train_error.std));
    println!("  test error    {} ({})", fmt(s.test_error.mean), fmt(s.test_error.std));
    if let Some(h) = &s.holdout_error {
        println!("  hold-out      {} ({})", fmt(h.mean), fmt(h.std));
    }
    for (name, rank) in &s.median_effective_rank {
        println!("  median effective rank of {name}: {rank}");
    }
    Ok(())
}
