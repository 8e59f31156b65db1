//! Linear and geodesic SMOTE on an imbalanced three-class set with missing
//! cells. Geodesic samples lie on the great circle between their parents.

use alvq::data::LabeledDataset;
use alvq::resampling::{oversample_traced, OversampleConfig, OversampleVariant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn angle(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    (dot / (na * nb)).clamp(-1.0, 1.0).acos()
}

fn main() -> alvq::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (class, n) in [(0usize, 120usize), (1, 30), (2, 8)] {
        for i in 0..n {
            let row: Vec<Option<f64>> = (0..4)
                .map(|j| (i % 10 != 3 || j != 1).then(|| class as f64 + rng.random_range(-1.0..1.0) + j as f64 * 0.3))
                .collect();
            rows.push(row);
            labels.push(class);
        }
    }
    let names = |p: &str, n: usize| (0..n).map(|i| format!("{p}{i}")).collect();
    let ds = LabeledDataset::from_rows(&rows, labels, names("f", 4), names("c", 3))?;
    println!("before: {:?}, {} rows with missing cells", ds.class_counts(), ds.rows_with_missing());

    for variant in [OversampleVariant::Euclidean, OversampleVariant::Geodesic] {
        let cfg = OversampleConfig { k: 3, variant, seed: 1, target: None };
        let (out, origins) = oversample_traced(&ds, &cfg)?;
        let mut worst = 0.0f64;
        for (s, o) in origins.iter().enumerate() {
            let dims: Vec<usize> = (0..4).filter(|&j| ds.mask(o.base)[j] && ds.mask(o.neighbor)[j]).collect();
            let pick = |r: &[f64]| dims.iter().map(|&j| r[j]).collect::<Vec<_>>();
            let (a, b, x) = (pick(ds.row(o.base)), pick(ds.row(o.neighbor)), pick(out.row(ds.len() + s)));
            worst = worst.max((angle(&a, &x) + angle(&x, &b) - angle(&a, &b)).abs());
        }
        println!(
            "{variant:?}: after {:?}, {} synthetic, max arc defect {worst:.2e}",
            out.class_counts(),
            origins.len()
        );
    }
    Ok(())
}
