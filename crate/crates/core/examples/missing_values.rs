//! Angle models train on data with missing cells; Euclidean models refuse it.

use alvq::data::{generate_football, LabeledDataset};
use alvq::models::{error_rate, train};
use alvq::{Error, TrainingConfig, Variant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Drops each cell with probability `p`, keeping two per row. With a single
/// observed cell every angle is 0 or π and training stops with `ZeroDenominator`.
fn knock_out(ds: &LabeledDataset, p: f64, seed: u64) -> LabeledDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<Option<f64>>> = (0..ds.len())
        .map(|i| {
            let skip = rng.random_range(0..ds.dim());
            let drop = rng.random_bool(p);
            ds.row(i).iter().enumerate().map(|(j, &v)| (j != skip || !drop).then_some(v)).collect()
        })
        .collect();
    LabeledDataset::from_rows(&rows, ds.labels().to_vec(), ds.feature_names.clone(), ds.class_names.clone()).unwrap()
}

fn main() -> alvq::Result<()> {
    let clean = generate_football(2000, 5);
    let test = generate_football(2000, 6);
    let cfg = TrainingConfig { prototypes_per_class: 3, epochs: 100, beta: 30.0, ..TrainingConfig::default() };
    for p in [0.0, 0.1, 0.3] {
        let ds = knock_out(&clean, p, 7);
        let model = train(&ds, &cfg, Variant::AngleLocal)?.model;
        println!(
            "missing rate {p:.1}: {} missing cells, ALVQ_l test error {:.3}",
            ds.missing_cells(),
            error_rate(&model, &test)?
        );
    }
    match train(&knock_out(&clean, 0.1, 7), &cfg, Variant::EuclidLocal) {
        Err(e @ Error::MissingNotSupported) => println!("LVQ_l: {e}"),
        other => println!("LVQ_l: unexpected {:?}", other.map(|_| ())),
    }
    Ok(())
}
