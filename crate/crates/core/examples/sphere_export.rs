//! Trains a rank-3 two-matrix angle model on the football data and writes the
//! spherical classification map as CSV (kind, x, y, z, label, correct).
//!
//!     cargo run --release --example sphere_export -- sphere.csv

use std::fs::File;
use std::io::BufWriter;

use alvq::cli::sphere_export;
use alvq::data::generate_football;
use alvq::models::train;
use alvq::{TrainingConfig, Variant};

fn main() -> alvq::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "sphere.csv".into());
    let ds = generate_football(2000, 1);
    let cfg = TrainingConfig {
        prototypes_per_class: 3,
        epochs: 100,
        beta: 50.0,
        rank: Some(3),
        ..TrainingConfig::default()
    };
    let model = train(&ds, &cfg, Variant::AngleTwoMatrix)?.model;

    let export = sphere_export(&model, 60, Some(&ds))?;
    let per_class = (0..2)
        .map(|c| export.grid.iter().filter(|(_, l)| *l == c).count())
        .collect::<Vec<_>>();
    println!("{} grid directions, per class {per_class:?}", export.grid.len());
    let correct = export.samples.iter().filter(|s| s.2).count();
    println!("{correct} of {} projected samples correctly classified", export.samples.len());

    let file = File::create(&out).map_err(|e| alvq::Error::Io { path: out.clone().into(), source: e })?;
    export.write_csv(BufWriter::new(file), &ds.class_names)?;
    println!("wrote {out}");
    Ok(())
}
