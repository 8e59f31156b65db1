//! Compares analytic dissimilarity gradients with central finite differences
//! for each variant on a trained model and a partially observed sample.

use alvq::data::generate_football;
use alvq::geometry::SampleView;
use alvq::models::{train, Metric, PrototypeModel};
use alvq::{TrainingConfig, Variant};
use nalgebra::DMatrix;

const H: f64 = 1e-6;

fn rel_err(a: &[f64], n: &[f64]) -> f64 {
    let diff = a.iter().zip(n).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(n.iter().map(|x| x * x).sum::<f64>().sqrt());
    if scale == 0.0 { 0.0 } else { diff / scale }
}

fn fd(model: &PrototypeModel, x: SampleView, k: usize, len: usize, at: impl Fn(&mut PrototypeModel) -> &mut [f64]) -> Vec<f64> {
    (0..len)
        .map(|i| {
            let (mut p, mut m) = (model.clone(), model.clone());
            at(&mut p)[i] += H;
            at(&mut m)[i] -= H;
            (p.dissimilarity(x, k).unwrap() - m.dissimilarity(x, k).unwrap()) / (2.0 * H)
        })
        .collect()
}

fn slice(m: &DMatrix<f64>) -> Vec<f64> {
    m.as_slice().to_vec()
}

fn main() -> alvq::Result<()> {
    let ds = generate_football(400, 9);
    let values = [0.4, f64::NAN, -0.7];
    let present = [true, false, true];
    let full = [0.4, 0.2, -0.7];
    for variant in Variant::ALL {
        let cfg = TrainingConfig { prototypes_per_class: 2, epochs: 5, beta: 5.0, ..TrainingConfig::default() };
        let model = train(&ds, &cfg, variant)?.model;
        let x = if variant.is_angle() { SampleView::new(&values, &present)? } else { SampleView::full(&full) };
        let k = 1;
        let g = model.dissimilarity_grads(x, k)?;
        let mut line = format!("{:<8} w {:.1e}", variant.display_name(), rel_err(&g.grad_w, &fd(&model, x, k, 3, |m| &mut m.prototypes[k])));
        if let Some(go) = &g.grad_omega {
            let n = fd(&model, x, k, go.len(), |m| match &mut m.metric {
                Metric::Global(gm) => gm.omega.as_mut_slice(),
                Metric::TwoMatrix(tm) => tm.omega.as_mut_slice(),
                Metric::Local(_) => unreachable!(),
            });
            line += &format!("  omega {:.1e}", rel_err(&slice(go), &n));
        }
        if let Some(gp) = &g.grad_psi {
            let c = model.proto_labels[k];
            let n = fd(&model, x, k, gp.len(), |m| match &mut m.metric {
                Metric::Local(lm) => lm.psi[c].as_mut_slice(),
                Metric::TwoMatrix(tm) => tm.psi[c].as_mut_slice(),
                Metric::Global(_) => unreachable!(),
            });
            line += &format!("  psi {:.1e}", rel_err(&slice(gp), &n));
        }
        println!("{line}");
    }
    Ok(())
}
