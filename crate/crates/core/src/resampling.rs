//! Minority-class oversampling: classic SMOTE and the geodesic variant SMOTE^g.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::geometry::DEGENERACY_EPS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OversampleVariant {
    #[default]
    Euclidean,
    Geodesic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OversampleConfig {
    pub k: usize,
    /// Samples per class after oversampling; `None` means the majority count.
    pub target: Option<usize>,
    pub seed: u64,
    pub variant: OversampleVariant,
}

impl Default for OversampleConfig {
    fn default() -> Self {
        Self {
            k: 3,
            target: None,
            seed: 0,
            variant: OversampleVariant::Euclidean,
        }
    }
}

/// Parents and interpolation parameter of one synthetic sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticOrigin {
    pub base: usize,
    pub neighbor: usize,
    pub u: f64,
}

/// Runs the variant named in `cfg`.
pub fn oversample(ds: &LabeledDataset, cfg: &OversampleConfig) -> Result<LabeledDataset> {
    Ok(oversample_traced(ds, cfg)?.0)
}

/// As [`oversample`], also returning the origin of every appended sample.
pub fn oversample_traced(ds: &LabeledDataset, cfg: &OversampleConfig) -> Result<(LabeledDataset, Vec<SyntheticOrigin>)> {
    run(ds, cfg, cfg.variant)
}

pub fn smote(ds: &LabeledDataset, cfg: &OversampleConfig) -> Result<LabeledDataset> {
    Ok(run(ds, cfg, OversampleVariant::Euclidean)?.0)
}

pub fn smote_geodesic(ds: &LabeledDataset, cfg: &OversampleConfig) -> Result<LabeledDataset> {
    Ok(run(ds, cfg, OversampleVariant::Geodesic)?.0)
}

/// `a + u (b − a)`.
pub fn interpolate_linear(a: &[f64], b: &[f64], u: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + u * (y - x)).collect()
}

/// Slerp between the directions of `a` and `b`, with the magnitude
/// interpolated linearly between `‖a‖` and `‖b‖`.
pub fn interpolate_geodesic(a: &[f64], b: &[f64], u: f64) -> Result<Vec<f64>> {
    let (na, nb) = (norm(a), norm(b));
    for n in [na, nb] {
        if n < DEGENERACY_EPS {
            return Err(Error::DegenerateVector { norm: n });
        }
    }
    let ua: Vec<f64> = a.iter().map(|v| v / na).collect();
    let ub: Vec<f64> = b.iter().map(|v| v / nb).collect();
    let cos = dot(&ua, &ub).clamp(-1.0, 1.0);
    let omega = cos.acos();
    let sin = omega.sin();
    let mut dir: Vec<f64> = if omega < 1e-8 || sin < 1e-12 {
        interpolate_linear(&ua, &ub, u)
    } else {
        let (s, t) = (((1.0 - u) * omega).sin() / sin, (u * omega).sin() / sin);
        ua.iter().zip(&ub).map(|(x, y)| s * x + t * y).collect()
    };
    let nd = norm(&dir);
    if nd < DEGENERACY_EPS {
        return Err(Error::DegenerateVector { norm: nd });
    }
    let mag = (1.0 - u) * na + u * nb;
    dir.iter_mut().for_each(|v| *v *= mag / nd);
    Ok(dir)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Dimensions observed in both rows.
fn mutual(ds: &LabeledDataset, i: usize, j: usize) -> Vec<usize> {
    let (mi, mj) = (ds.mask(i), ds.mask(j));
    (0..ds.dim()).filter(|&d| mi[d] && mj[d]).collect()
}

fn gather(row: &[f64], dims: &[usize]) -> Vec<f64> {
    dims.iter().map(|&d| row[d]).collect()
}

fn neighbor_distance(ds: &LabeledDataset, i: usize, j: usize, variant: OversampleVariant) -> f64 {
    let dims = mutual(ds, i, j);
    if dims.is_empty() {
        return f64::INFINITY;
    }
    let (a, b) = (gather(ds.row(i), &dims), gather(ds.row(j), &dims));
    match variant {
        OversampleVariant::Euclidean => {
            let sq: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum();
            (sq * ds.dim() as f64 / dims.len() as f64).sqrt()
        }
        OversampleVariant::Geodesic => {
            let (na, nb) = (norm(&a), norm(&b));
            if na < DEGENERACY_EPS || nb < DEGENERACY_EPS {
                return f64::INFINITY;
            }
            (dot(&a, &b) / (na * nb)).clamp(-1.0, 1.0).acos()
        }
    }
}

/// Synthetic row between rows `i` and `j`; cells missing in either parent
/// stay missing.
fn synthesize(
    ds: &LabeledDataset,
    i: usize,
    j: usize,
    u: f64,
    variant: OversampleVariant,
) -> Result<(Vec<f64>, Vec<bool>)> {
    let dims = mutual(ds, i, j);
    let mut values = vec![f64::NAN; ds.dim()];
    let mut present = vec![false; ds.dim()];
    if dims.is_empty() {
        // no shared coordinates: duplicate the base sample
        return Ok((ds.row(i).to_vec(), ds.mask(i).to_vec()));
    }
    let (a, b) = (gather(ds.row(i), &dims), gather(ds.row(j), &dims));
    let mixed = match variant {
        OversampleVariant::Euclidean => interpolate_linear(&a, &b, u),
        OversampleVariant::Geodesic => interpolate_geodesic(&a, &b, u)?,
    };
    for (&d, v) in dims.iter().zip(mixed) {
        values[d] = v;
        present[d] = true;
    }
    Ok((values, present))
}

fn run(
    ds: &LabeledDataset,
    cfg: &OversampleConfig,
    variant: OversampleVariant,
) -> Result<(LabeledDataset, Vec<SyntheticOrigin>)> {
    if cfg.k == 0 {
        return Err(Error::Config("oversampling k must be at least 1".into()));
    }
    let counts = ds.class_counts();
    let target = cfg.target.unwrap_or_else(|| counts.iter().copied().max().unwrap_or(0));
    let mut out = ds.subset(&(0..ds.len()).collect::<Vec<_>>());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut origins = Vec::new();

    for (class, &count) in counts.iter().enumerate() {
        if count >= target {
            continue;
        }
        if count < 2 {
            return Err(Error::TooFewSamples {
                class: ds.class_names[class].clone(),
                count,
            });
        }
        let members: Vec<usize> = (0..ds.len()).filter(|&i| ds.label(i) == class).collect();
        if variant == OversampleVariant::Geodesic {
            for &i in &members {
                let n = norm(&gather(ds.row(i), &ds.sample(i).observed().collect::<Vec<_>>()));
                if n < DEGENERACY_EPS {
                    return Err(Error::DegenerateVector { norm: n });
                }
            }
        }
        let k = if cfg.k > count - 1 {
            log::warn!(
                "class {}: k={} clamped to {} neighbours",
                ds.class_names[class],
                cfg.k,
                count - 1
            );
            count - 1
        } else {
            cfg.k
        };
        let neighbors: Vec<Vec<usize>> = members
            .iter()
            .map(|&i| {
                let mut cand: Vec<(f64, usize)> = members
                    .iter()
                    .filter(|&&j| j != i)
                    .map(|&j| (neighbor_distance(ds, i, j, variant), j))
                    .collect();
                cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                cand.into_iter().take(k).map(|(_, j)| j).collect()
            })
            .collect();

        for s in 0..target - count {
            let base = s % count;
            let nn = neighbors[base][rng.random_range(0..k)];
            let u: f64 = rng.random();
            let (values, present) = synthesize(ds, members[base], nn, u, variant)?;
            out.push_row(&values, &present, class)?;
            origins.push(SyntheticOrigin {
                base: members[base],
                neighbor: nn,
                u,
            });
        }
    }
    Ok((out, origins))
}
