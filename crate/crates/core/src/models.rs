//! Prototype models, the GLVQ relative-distance cost and stochastic gradient
//! training for the six Euclidean / angle variants.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::geometry::{
    self, AngleParams, Attachment, GlobalMatrix, Grads, LocalMatrix, SampleView, TwoMatrix,
};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "eg")]
    EuclidGlobal,
    #[serde(rename = "el")]
    EuclidLocal,
    #[serde(rename = "e2m")]
    EuclidTwoMatrix,
    #[serde(rename = "ag")]
    AngleGlobal,
    #[serde(rename = "al")]
    AngleLocal,
    #[serde(rename = "a2m")]
    AngleTwoMatrix,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::EuclidGlobal,
        Variant::EuclidLocal,
        Variant::EuclidTwoMatrix,
        Variant::AngleGlobal,
        Variant::AngleLocal,
        Variant::AngleTwoMatrix,
    ];

    pub fn is_angle(self) -> bool {
        matches!(
            self,
            Variant::AngleGlobal | Variant::AngleLocal | Variant::AngleTwoMatrix
        )
    }

    pub fn code(self) -> &'static str {
        match self {
            Variant::EuclidGlobal => "eg",
            Variant::EuclidLocal => "el",
            Variant::EuclidTwoMatrix => "e2m",
            Variant::AngleGlobal => "ag",
            Variant::AngleLocal => "al",
            Variant::AngleTwoMatrix => "a2m",
        }
    }

    /// Conventional abbreviation, e.g. `ALVQ_l`.
    pub fn display_name(self) -> &'static str {
        match self {
            Variant::EuclidGlobal => "LVQ_g",
            Variant::EuclidLocal => "LVQ_l",
            Variant::EuclidTwoMatrix => "LVQ_2M",
            Variant::AngleGlobal => "ALVQ_g",
            Variant::AngleLocal => "ALVQ_l",
            Variant::AngleTwoMatrix => "ALVQ_2M",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.code() == s)
            .ok_or_else(|| Error::Config(format!("unknown variant {s:?} (eg, el, e2m, ag, al, a2m)")))
    }
}

/// Adaptive matrices owned by a model.
#[derive(Debug, Clone, PartialEq)]
pub enum Metric {
    Global(GlobalMatrix),
    Local(LocalMatrix),
    TwoMatrix(TwoMatrix),
}

impl Metric {
    pub fn normalize(&mut self) {
        match self {
            Metric::Global(m) => m.normalize(),
            Metric::Local(m) => m.normalize(),
            Metric::TwoMatrix(m) => m.normalize(),
        }
    }

    pub fn rank(&self) -> usize {
        match self {
            Metric::Global(m) => m.rank(),
            Metric::Local(m) => m.rank(),
            Metric::TwoMatrix(m) => m.rank(),
        }
    }

    fn is_finite(&self) -> bool {
        let fin = |m: &DMatrix<f64>| m.iter().all(|v| v.is_finite());
        match self {
            Metric::Global(m) => fin(&m.omega),
            Metric::Local(m) => m.psi.iter().all(fin),
            Metric::TwoMatrix(m) => fin(&m.omega) && m.psi.iter().all(fin),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LrSchedule {
    Constant,
    /// `lr / (1 + epoch / epochs)`.
    InverseEpoch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub prototypes_per_class: usize,
    pub epochs: usize,
    pub lr_prototype: f64,
    pub lr_matrix: f64,
    pub lr_decay: LrSchedule,
    pub beta: f64,
    /// Rows of `Ω` / `Ψᶜ`; `None` means full rank `D`.
    pub rank: Option<usize>,
    pub seed: u64,
    pub normalize_matrices_every: usize,
    pub attachment: Attachment,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            prototypes_per_class: 1,
            epochs: 300,
            lr_prototype: 0.01,
            lr_matrix: 0.001,
            lr_decay: LrSchedule::InverseEpoch,
            beta: 1.0,
            rank: None,
            seed: 0,
            normalize_matrices_every: 1,
            attachment: Attachment::ClassWise,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self, dim: usize) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.prototypes_per_class == 0 {
            return bad("prototypes per class must be positive".into());
        }
        if self.epochs == 0 {
            return bad("epochs must be positive".into());
        }
        if !(self.lr_prototype >= 0.0 && self.lr_matrix >= 0.0) {
            return bad("learning rates must be non-negative".into());
        }
        if self.lr_matrix > self.lr_prototype {
            return bad(format!(
                "lr_matrix ({}) must not exceed lr_prototype ({})",
                self.lr_matrix, self.lr_prototype
            ));
        }
        AngleParams::new(self.beta)?;
        if let Some(r) = self.rank {
            if r == 0 || r > dim {
                return bad(format!("rank {r} must be in 1..={dim}"));
            }
        }
        if self.normalize_matrices_every == 0 {
            return bad("normalize_matrices_every must be positive".into());
        }
        Ok(())
    }

    fn lr_scale(&self, epoch: usize) -> f64 {
        match self.lr_decay {
            LrSchedule::Constant => 1.0,
            LrSchedule::InverseEpoch => 1.0 / (1.0 + epoch as f64 / self.epochs as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub seed: u64,
    pub epochs: usize,
    pub lr_prototype: f64,
    pub lr_matrix: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeModel {
    pub variant: Variant,
    pub prototypes: Vec<Vec<f64>>,
    pub proto_labels: Vec<usize>,
    pub metric: Metric,
    /// Present for angle variants only.
    pub angle: Option<AngleParams>,
    pub feature_names: Option<Vec<String>>,
    pub class_names: Option<Vec<String>>,
    pub training_meta: Option<TrainingMeta>,
}

/// Closest correct (`J`) and closest wrong (`K`) prototype for one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginTerms {
    pub dj: f64,
    pub dk: f64,
    pub jdx: usize,
    pub kdx: usize,
}

impl MarginTerms {
    /// Relative distance `μ = (d_J − d_K) / (d_J + d_K)`.
    pub fn mu(&self) -> f64 {
        let s = self.dj + self.dk;
        if s > 0.0 {
            (self.dj - self.dk) / s
        } else {
            0.0
        }
    }
}

/// `γ_J = 2 d_K / (d_J + d_K)²`, `γ_K = −2 d_J / (d_J + d_K)²`.
pub fn gamma_weights(t: &MarginTerms) -> Result<(f64, f64)> {
    let s = t.dj + t.dk;
    if !(s > f64::MIN_POSITIVE) {
        return Err(Error::ZeroDenominator);
    }
    // divide twice rather than squaring: s can be ~1e-200 for large β
    Ok((2.0 * (t.dk / s) / s, -2.0 * (t.dj / s) / s))
}

impl PrototypeModel {
    pub fn dim(&self) -> usize {
        self.prototypes.first().map_or(0, Vec::len)
    }

    pub fn n_prototypes(&self) -> usize {
        self.prototypes.len()
    }

    pub fn n_classes(&self) -> usize {
        self.proto_labels.iter().max().map_or(0, |m| m + 1)
    }

    fn local_index(&self, k: usize) -> usize {
        match &self.metric {
            Metric::Local(m) if m.attachment == Attachment::PrototypeWise => k,
            _ => self.proto_labels[k],
        }
    }

    fn angle_params(&self) -> AngleParams {
        self.angle.expect("angle variants carry a beta")
    }

    /// Dissimilarity between `x` and prototype `k`.
    pub fn dissimilarity(&self, x: SampleView, k: usize) -> Result<f64> {
        let w = &self.prototypes[k];
        let idx = self.local_index(k);
        match (&self.metric, self.variant.is_angle()) {
            (Metric::Global(m), true) => Ok(geometry::g_beta(geometry::angle_global(x, w, m)?, self.angle_params())),
            (Metric::Local(m), true) => Ok(geometry::g_beta(geometry::angle_local(x, w, m, idx)?, self.angle_params())),
            (Metric::TwoMatrix(m), true) => Ok(geometry::g_beta(geometry::angle_twomatrix(x, w, m, idx)?, self.angle_params())),
            (Metric::Global(m), false) => geometry::euclid_quadform(x, w, &m.omega),
            (Metric::Local(m), false) => geometry::euclid_quadform(x, w, &m.psi[idx]),
            (Metric::TwoMatrix(m), false) => geometry::euclid_twomatrix(x, w, m, idx),
        }
    }

    /// Dissimilarity and gradients for prototype `k`. For single-matrix local
    /// variants the matrix gradient is reported in `grad_psi`.
    pub fn dissimilarity_grads(&self, x: SampleView, k: usize) -> Result<Grads> {
        let w = &self.prototypes[k];
        let idx = self.local_index(k);
        match (&self.metric, self.variant.is_angle()) {
            (Metric::Global(m), true) => geometry::angle_global_grads(x, w, m, self.angle_params()),
            (Metric::Local(m), true) => geometry::angle_local_grads(x, w, m, idx, self.angle_params()),
            (Metric::TwoMatrix(m), true) => geometry::angle_twomatrix_grads(x, w, m, idx, self.angle_params()),
            (Metric::Global(m), false) => geometry::euclid_quadform_grads(x, w, &m.omega),
            (Metric::Local(m), false) => {
                let mut g = geometry::euclid_quadform_grads(x, w, &m.psi[idx])?;
                g.grad_psi = g.grad_omega.take();
                Ok(g)
            }
            (Metric::TwoMatrix(m), false) => geometry::euclid_twomatrix_grads(x, w, m, idx),
        }
    }

    pub fn dissimilarities(&self, x: SampleView) -> Result<Vec<f64>> {
        (0..self.n_prototypes()).map(|k| self.dissimilarity(x, k)).collect()
    }

    pub fn margin_terms(&self, x: SampleView, label: usize) -> Result<MarginTerms> {
        let mut best_j: Option<(f64, usize)> = None;
        let mut best_k: Option<(f64, usize)> = None;
        for k in 0..self.n_prototypes() {
            let d = self.dissimilarity(x, k)?;
            let slot = if self.proto_labels[k] == label {
                &mut best_j
            } else {
                &mut best_k
            };
            if slot.is_none_or(|(bd, _)| d < bd) {
                *slot = Some((d, k));
            }
        }
        match (best_j, best_k) {
            (Some((dj, jdx)), Some((dk, kdx))) => Ok(MarginTerms { dj, dk, jdx, kdx }),
            _ => Err(Error::Config(format!(
                "model needs prototypes of class {label} and of another class"
            ))),
        }
    }

    /// Label of the closest prototype; ties go to the lowest index.
    pub fn predict(&self, x: SampleView) -> Result<usize> {
        let mut best = (f64::INFINITY, 0);
        for k in 0..self.n_prototypes() {
            let d = self.dissimilarity(x, k)?;
            if d < best.0 {
                best = (d, k);
            }
        }
        Ok(self.proto_labels[best.1])
    }

    pub fn predict_dataset(&self, ds: &LabeledDataset) -> Result<Vec<usize>> {
        (0..ds.len()).map(|i| self.predict(ds.sample(i))).collect()
    }

    /// One stochastic gradient step on `(x, label)`. Returns the margin terms
    /// evaluated before the update.
    pub fn sgd_step(&mut self, x: SampleView, label: usize, cfg: &TrainingConfig, epoch: usize) -> Result<MarginTerms> {
        let t = self.margin_terms(x, label)?;
        if !(t.dj.is_finite() && t.dk.is_finite()) {
            return Err(Error::NonFinite { epoch });
        }
        let (gamma_j, gamma_k) = gamma_weights(&t)?;
        let scale = cfg.lr_scale(epoch);
        let lr_w = cfg.lr_prototype * scale;
        let lr_m = cfg.lr_matrix * scale;
        if lr_w == 0.0 && lr_m == 0.0 {
            return Ok(t);
        }
        let gj = self.dissimilarity_grads(x, t.jdx)?;
        let gk = self.dissimilarity_grads(x, t.kdx)?;

        for (k, gamma, g) in [(t.jdx, gamma_j, &gj), (t.kdx, gamma_k, &gk)] {
            for (w, dw) in self.prototypes[k].iter_mut().zip(&g.grad_w) {
                *w -= lr_w * gamma * dw;
            }
        }

        let (ij, ik) = (self.local_index(t.jdx), self.local_index(t.kdx));
        match &mut self.metric {
            Metric::Global(m) => {
                let (oj, ok) = (gj.grad_omega.as_ref().unwrap(), gk.grad_omega.as_ref().unwrap());
                m.omega -= (oj * gamma_j + ok * gamma_k) * lr_m;
            }
            Metric::Local(m) => {
                m.psi[ij] -= gj.grad_psi.as_ref().unwrap() * (lr_m * gamma_j);
                m.psi[ik] -= gk.grad_psi.as_ref().unwrap() * (lr_m * gamma_k);
            }
            Metric::TwoMatrix(m) => {
                let (oj, ok) = (gj.grad_omega.as_ref().unwrap(), gk.grad_omega.as_ref().unwrap());
                m.omega -= (oj * gamma_j + ok * gamma_k) * lr_m;
                m.psi[ij] -= gj.grad_psi.as_ref().unwrap() * (lr_m * gamma_j);
                m.psi[ik] -= gk.grad_psi.as_ref().unwrap() * (lr_m * gamma_k);
            }
        }
        Ok(t)
    }

    fn is_finite(&self) -> bool {
        self.prototypes.iter().flatten().all(|v| v.is_finite()) && self.metric.is_finite()
    }

    pub fn to_document(&self) -> ModelDocument {
        let rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
            (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect()
        };
        let (omega, psi, attachment) = match &self.metric {
            Metric::Global(m) => (Some(rows(&m.omega)), None, None),
            Metric::Local(m) => (None, Some(m.psi.iter().map(rows).collect()), Some(m.attachment)),
            Metric::TwoMatrix(m) => (Some(rows(&m.omega)), Some(m.psi.iter().map(rows).collect()), None),
        };
        ModelDocument {
            format_version: FORMAT_VERSION,
            variant: self.variant,
            beta: self.angle.map(|a| a.beta()),
            prototypes: self.prototypes.clone(),
            proto_labels: self.proto_labels.clone(),
            omega,
            psi,
            attachment,
            feature_names: self.feature_names.clone(),
            class_names: self.class_names.clone(),
            training_meta: self.training_meta.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("model documents serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument =
            serde_json::from_str(text).map_err(|e| Error::format(format!("model document: {e}")))?;
        doc.into_model()
    }
}

/// Versioned on-disk representation. Matrices are row-major nested arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format_version: u32,
    pub variant: Variant,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub beta: Option<f64>,
    pub prototypes: Vec<Vec<f64>>,
    pub proto_labels: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub omega: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub psi: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub attachment: Option<Attachment>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub feature_names: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub class_names: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub training_meta: Option<TrainingMeta>,
}

fn matrix_from_rows(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
        return Err(Error::format(format!("{what} is not a non-empty rectangular matrix")));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

impl ModelDocument {
    pub fn into_model(self) -> Result<PrototypeModel> {
        let fe = |m: String| Err(Error::Format(m));
        if self.format_version != FORMAT_VERSION {
            return fe(format!(
                "unsupported format_version {} (expected {FORMAT_VERSION})",
                self.format_version
            ));
        }
        let dim = self.prototypes.first().map_or(0, Vec::len);
        if dim == 0 || self.prototypes.iter().any(|p| p.len() != dim) {
            return fe("prototypes must be non-empty vectors of equal length".into());
        }
        if self.proto_labels.len() != self.prototypes.len() {
            return fe("proto_labels length differs from prototype count".into());
        }
        let n_classes = self.proto_labels.iter().max().map_or(0, |m| m + 1);
        let psi_stack = |ps: &[Vec<Vec<f64>>]| -> Result<Vec<DMatrix<f64>>> {
            ps.iter().enumerate().map(|(i, p)| matrix_from_rows(p, &format!("psi[{i}]"))).collect()
        };
        let variant = self.variant;
        let metric = match variant {
            Variant::EuclidGlobal | Variant::AngleGlobal => {
                let omega = matrix_from_rows(self.omega.as_deref().unwrap_or_default(), "omega")?;
                if omega.ncols() != dim || omega.nrows() > dim {
                    return fe(format!("omega must be M x {dim} with M <= {dim}"));
                }
                Metric::Global(GlobalMatrix::new(omega))
            }
            Variant::EuclidLocal | Variant::AngleLocal => {
                let psi = psi_stack(self.psi.as_deref().unwrap_or_default())?;
                let attachment = self.attachment.unwrap_or_default();
                let want = match attachment {
                    Attachment::ClassWise => n_classes,
                    Attachment::PrototypeWise => self.prototypes.len(),
                };
                if psi.len() != want || psi.iter().any(|p| p.ncols() != dim || p.nrows() > dim) {
                    return fe(format!("psi must hold {want} matrices of shape M x {dim}"));
                }
                Metric::Local(LocalMatrix::new(psi, attachment).map_err(|e| Error::Format(e.to_string()))?)
            }
            Variant::EuclidTwoMatrix | Variant::AngleTwoMatrix => {
                let omega = matrix_from_rows(self.omega.as_deref().unwrap_or_default(), "omega")?;
                let psi = psi_stack(self.psi.as_deref().unwrap_or_default())?;
                if omega.ncols() != dim || psi.len() != n_classes {
                    return fe(format!("two-matrix model needs omega M x {dim} and {n_classes} psi matrices"));
                }
                Metric::TwoMatrix(TwoMatrix::new(omega, psi).map_err(|e| Error::Format(e.to_string()))?)
            }
        };
        let angle = match (variant.is_angle(), self.beta) {
            (true, Some(b)) => Some(AngleParams::new(b).map_err(|e| Error::Format(e.to_string()))?),
            (true, None) => return fe("angle variant without beta".into()),
            (false, _) => None,
        };
        if self.feature_names.as_ref().is_some_and(|f| f.len() != dim) {
            return fe("feature_names length differs from dimension".into());
        }
        Ok(PrototypeModel {
            variant,
            prototypes: self.prototypes,
            proto_labels: self.proto_labels,
            metric,
            angle,
            feature_names: self.feature_names,
            class_names: self.class_names,
            training_meta: self.training_meta,
        })
    }
}

/// Prototypes at noisy class means, matrices at unit-trace truncated identity.
pub fn init_model(ds: &LabeledDataset, cfg: &TrainingConfig, variant: Variant) -> Result<PrototypeModel> {
    cfg.validate(ds.dim())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let d = ds.dim();
    let c = ds.n_classes();
    let counts = ds.class_counts();
    if let Some(empty) = counts.iter().position(|&n| n == 0) {
        return Err(Error::EmptyClass {
            class: ds.class_names[empty].clone(),
        });
    }

    let mut sum = vec![vec![0.0; d]; c];
    let mut seen = vec![vec![0usize; d]; c];
    let mut all_sum = vec![0.0; d];
    let mut all_sq = vec![0.0; d];
    let mut all_n = vec![0usize; d];
    for i in 0..ds.len() {
        let (row, mask, l) = (ds.row(i), ds.mask(i), ds.label(i));
        for j in 0..d {
            if mask[j] {
                sum[l][j] += row[j];
                seen[l][j] += 1;
                all_sum[j] += row[j];
                all_sq[j] += row[j] * row[j];
                all_n[j] += 1;
            }
        }
    }
    let std: Vec<f64> = (0..d)
        .map(|j| {
            if all_n[j] == 0 {
                return 1.0;
            }
            let n = all_n[j] as f64;
            let m = all_sum[j] / n;
            (all_sq[j] / n - m * m).max(0.0).sqrt()
        })
        .collect();

    let mut prototypes = Vec::with_capacity(c * cfg.prototypes_per_class);
    let mut proto_labels = Vec::with_capacity(c * cfg.prototypes_per_class);
    for class in 0..c {
        let mean: Vec<f64> = (0..d)
            .map(|j| if seen[class][j] > 0 { sum[class][j] / seen[class][j] as f64 } else { 0.0 })
            .collect();
        for _ in 0..cfg.prototypes_per_class {
            let w = mean
                .iter()
                .zip(&std)
                .map(|(m, s)| m + rng.random_range(-0.01..=0.01) * s)
                .collect();
            prototypes.push(w);
            proto_labels.push(class);
        }
    }

    let rank = cfg.rank.unwrap_or(d);
    let metric = match variant {
        Variant::EuclidGlobal | Variant::AngleGlobal => Metric::Global(GlobalMatrix::truncated_identity(rank, d)),
        Variant::EuclidLocal | Variant::AngleLocal => {
            let count = match cfg.attachment {
                Attachment::ClassWise => c,
                Attachment::PrototypeWise => prototypes.len(),
            };
            Metric::Local(LocalMatrix::truncated_identity(count, rank, d, cfg.attachment))
        }
        Variant::EuclidTwoMatrix | Variant::AngleTwoMatrix => {
            Metric::TwoMatrix(TwoMatrix::truncated_identity(c, rank, d))
        }
    };
    Ok(PrototypeModel {
        variant,
        prototypes,
        proto_labels,
        metric,
        angle: variant.is_angle().then(|| AngleParams::new(cfg.beta)).transpose()?,
        feature_names: Some(ds.feature_names.clone()),
        class_names: Some(ds.class_names.clone()),
        training_meta: Some(TrainingMeta {
            seed: cfg.seed,
            epochs: cfg.epochs,
            lr_prototype: cfg.lr_prototype,
            lr_matrix: cfg.lr_matrix,
        }),
    })
}

/// `E = Σ μ_i` over the dataset.
pub fn cost(model: &PrototypeModel, ds: &LabeledDataset) -> Result<f64> {
    (0..ds.len())
        .map(|i| Ok(model.margin_terms(ds.sample(i), ds.label(i))?.mu()))
        .sum()
}

/// Fraction of misclassified samples.
pub fn error_rate(model: &PrototypeModel, ds: &LabeledDataset) -> Result<f64> {
    let wrong = (0..ds.len())
        .map(|i| Ok(usize::from(model.predict(ds.sample(i))? != ds.label(i))))
        .sum::<Result<usize>>()?;
    Ok(wrong as f64 / ds.len() as f64)
}

/// Per-epoch averages accumulated during the pass (before each update).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_mu: f64,
    pub error: f64,
}

#[derive(Debug, Clone)]
pub struct TrainingOutcome {
    pub model: PrototypeModel,
    pub trace: Vec<EpochStats>,
}

pub fn train(ds: &LabeledDataset, cfg: &TrainingConfig, variant: Variant) -> Result<TrainingOutcome> {
    if !variant.is_angle() && ds.has_missing() {
        return Err(Error::MissingNotSupported);
    }
    let mut model = init_model(ds, cfg, variant)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_5eed_5eed_5eed);
    let mut order: Vec<usize> = (0..ds.len()).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);
    let mut steps = 0usize;
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut mu_sum = 0.0;
        let mut wrong = 0usize;
        for &i in &order {
            let t = model.sgd_step(ds.sample(i), ds.label(i), cfg, epoch)?;
            mu_sum += t.mu();
            wrong += usize::from(t.dj >= t.dk && !(t.dj == t.dk && t.jdx < t.kdx));
            steps += 1;
            if steps % cfg.normalize_matrices_every == 0 {
                model.metric.normalize();
            }
        }
        if !model.is_finite() {
            return Err(Error::NonFinite { epoch });
        }
        trace.push(EpochStats {
            epoch,
            mean_mu: mu_sum / ds.len() as f64,
            error: wrong as f64 / ds.len() as f64,
        });
    }
    model.metric.normalize();
    Ok(TrainingOutcome { model, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand_distr_free::gaussian_pair;

    /// Box–Muller without extra dependencies.
    mod rand_distr_free {
        use rand::Rng;
        pub fn gaussian_pair(rng: &mut impl Rng) -> (f64, f64) {
            let u1: f64 = rng.random_range(f64::EPSILON..1.0);
            let u2: f64 = rng.random();
            let r = (-2.0 * u1.ln()).sqrt();
            let t = 2.0 * std::f64::consts::PI * u2;
            (r * t.cos(), r * t.sin())
        }
    }

    fn two_gaussians(n: usize, seed: u64) -> LabeledDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let c = i % 2;
            let (a, b) = gaussian_pair(&mut rng);
            let centre = if c == 0 { (2.0, 0.5) } else { (-0.5, 2.0) };
            rows.push(vec![centre.0 + 0.4 * a, centre.1 + 0.4 * b]);
            labels.push(c);
        }
        LabeledDataset::from_dense(&rows, labels, vec!["a".into(), "b".into()], vec!["0".into(), "1".into()]).unwrap()
    }

    fn cfg() -> TrainingConfig {
        TrainingConfig {
            epochs: 100,
            beta: 5.0,
            ..TrainingConfig::default()
        }
    }

    #[test]
    fn variant_codes_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.code().parse::<Variant>().unwrap(), v);
        }
        assert!("xx".parse::<Variant>().is_err());
    }

    #[test]
    fn init_model_shapes_and_determinism() {
        let ds = two_gaussians(40, 1);
        let m = init_model(&ds, &cfg(), Variant::AngleGlobal).unwrap();
        assert_eq!(m.n_prototypes(), 2);
        assert_eq!(m.proto_labels, vec![0, 1]);
        assert!((m.prototypes[0][0] - 2.0).abs() < 0.3);
        let again = init_model(&ds, &cfg(), Variant::AngleGlobal).unwrap();
        assert_eq!(m, again);

        let rows: Vec<Vec<f64>> = (0..20).map(|i| (0..13).map(|j| ((i * 7 + j * 3) % 11) as f64).collect()).collect();
        let labels = (0..20).map(|i| i % 2).collect();
        let names = (0..13).map(|j| format!("f{j}")).collect();
        let wide = LabeledDataset::from_dense(&rows, labels, names, vec!["0".into(), "1".into()]).unwrap();
        let c = TrainingConfig { rank: Some(3), ..cfg() };
        let m = init_model(&wide, &c, Variant::AngleGlobal).unwrap();
        match &m.metric {
            Metric::Global(g) => {
                assert_eq!(g.omega.shape(), (3, 13));
                assert!((g.lambda().trace() - 1.0).abs() < 1e-9);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn init_rejects_empty_class() {
        let ds = LabeledDataset::from_dense(
            &[vec![1.0, 2.0]],
            vec![0],
            vec!["a".into(), "b".into()],
            vec!["0".into(), "1".into()],
        )
        .unwrap();
        assert!(matches!(init_model(&ds, &cfg(), Variant::AngleGlobal), Err(Error::EmptyClass { .. })));
    }

    #[test]
    fn config_validation() {
        let bad = TrainingConfig { lr_matrix: 0.1, lr_prototype: 0.01, ..cfg() };
        assert!(bad.validate(2).is_err());
        let bad = TrainingConfig { rank: Some(5), ..cfg() };
        assert!(bad.validate(2).is_err());
        let bad = TrainingConfig { beta: 0.0, ..cfg() };
        assert!(bad.validate(2).is_err());
    }

    #[test]
    fn gamma_examples() {
        let t = |dj, dk| MarginTerms { dj, dk, jdx: 0, kdx: 1 };
        assert_eq!(gamma_weights(&t(1.0, 1.0)).unwrap(), (0.5, -0.5));
        let (gj, gk) = gamma_weights(&t(0.0, 1.0)).unwrap();
        assert_eq!(gj, 2.0);
        assert_eq!(gk, 0.0);
        let (gj, gk) = gamma_weights(&t(0.3, 0.7)).unwrap();
        assert!(gj > 0.0 && gk < 0.0);
        assert!(matches!(gamma_weights(&t(0.0, 0.0)), Err(Error::ZeroDenominator)));
        // tiny but valid dissimilarities, as produced by g_β with large β
        let (gj, gk) = gamma_weights(&t(1e-150, 3e-150)).unwrap();
        assert!(gj.is_finite() && gk.is_finite() && gj > 0.0);
    }

    #[test]
    fn margin_examples() {
        let ds = two_gaussians(10, 2);
        let mut m = init_model(&ds, &cfg(), Variant::AngleGlobal).unwrap();
        let x = m.prototypes[0].clone();
        let t = m.margin_terms(SampleView::full(&x), 0).unwrap();
        assert!(t.dj.abs() < 1e-12);
        assert_eq!((t.jdx, t.kdx), (0, 1));

        m.prototypes[1] = m.prototypes[0].clone();
        let t = m.margin_terms(SampleView::full(&[1.0, 1.0]), 0).unwrap();
        assert_eq!(t.dj, t.dk);
        assert_eq!(t.mu(), 0.0);
    }

    #[test]
    fn cost_examples() {
        let ds = two_gaussians(10, 3);
        let m = init_model(&ds, &cfg(), Variant::AngleGlobal).unwrap();
        // samples sitting on their own prototypes
        let on_protos = LabeledDataset::from_dense(
            &m.prototypes,
            m.proto_labels.clone(),
            ds.feature_names.clone(),
            ds.class_names.clone(),
        )
        .unwrap();
        assert!((cost(&m, &on_protos).unwrap() + 2.0).abs() < 1e-12);

        let hand: f64 = (0..ds.len())
            .map(|i| {
                let d: Vec<f64> = (0..2).map(|k| m.dissimilarity(ds.sample(i), k).unwrap()).collect();
                let (dj, dk) = (d[ds.label(i)], d[1 - ds.label(i)]);
                (dj - dk) / (dj + dk)
            })
            .sum();
        assert!((cost(&m, &ds).unwrap() - hand).abs() < 1e-12);
    }

    #[test]
    fn zero_learning_rate_leaves_model_unchanged() {
        let ds = two_gaussians(10, 4);
        let c = TrainingConfig { lr_prototype: 0.0, lr_matrix: 0.0, ..cfg() };
        for v in Variant::ALL {
            let mut m = init_model(&ds, &c, v).unwrap();
            let before = m.clone();
            m.sgd_step(ds.sample(0), ds.label(0), &c, 0).unwrap();
            assert_eq!(m, before);
        }
    }

    #[test]
    fn single_step_decreases_mu() {
        let ds = two_gaussians(10, 5);
        let c = TrainingConfig { lr_prototype: 1e-3, lr_matrix: 1e-3, ..cfg() };
        for v in Variant::ALL {
            let mut m = init_model(&ds, &c, v).unwrap();
            let x = ds.sample(3);
            let before = m.margin_terms(x, ds.label(3)).unwrap().mu();
            m.sgd_step(x, ds.label(3), &c, 0).unwrap();
            let after = m.margin_terms(x, ds.label(3)).unwrap().mu();
            assert!(after < before, "{v}: {before} -> {after}");
        }
    }

    #[test]
    fn missing_dimension_receives_no_update() {
        let ds = two_gaussians(10, 6);
        let c = TrainingConfig { lr_prototype: 0.01, lr_matrix: 0.001, ..cfg() };
        for v in [Variant::AngleGlobal, Variant::AngleLocal, Variant::AngleTwoMatrix] {
            let mut m = init_model(&ds, &c, v).unwrap();
            let before = m.clone();
            let x = [0.7, 123.0];
            let mask = [true, false];
            m.sgd_step(SampleView::new(&x, &mask).unwrap(), 0, &c, 0).unwrap();
            for k in 0..2 {
                assert_eq!(m.prototypes[k][1], before.prototypes[k][1]);
            }
        }
    }

    #[test]
    fn training_separates_gaussians_for_every_variant() {
        let ds = two_gaussians(200, 7);
        // nearest class mean as sanity oracle
        let mut means = [[0.0; 2]; 2];
        for i in 0..ds.len() {
            for j in 0..2 {
                means[ds.label(i)][j] += ds.row(i)[j] / 100.0;
            }
        }
        let ncm_err = (0..ds.len())
            .filter(|&i| {
                let d = |m: &[f64; 2]| (0..2).map(|j| (ds.row(i)[j] - m[j]).powi(2)).sum::<f64>();
                usize::from(d(&means[1]) < d(&means[0])) != ds.label(i)
            })
            .count() as f64
            / ds.len() as f64;
        assert!(ncm_err <= 0.05);
        for v in Variant::ALL {
            let out = train(&ds, &cfg(), v).unwrap();
            let err = error_rate(&out.model, &ds).unwrap();
            assert!(err <= 0.05, "{v}: {err}");
            assert_eq!(out.trace.len(), 100);
        }
    }

    #[test]
    fn euclidean_training_rejects_missing() {
        let rows = vec![vec![Some(1.0), None, Some(0.2)], vec![Some(0.5), Some(1.0), Some(-0.4)]];
        let names = vec!["a".into(), "b".into(), "c".into()];
        let ds = LabeledDataset::from_rows(&rows, vec![0, 1], names, vec!["0".into(), "1".into()]).unwrap();
        assert!(matches!(train(&ds, &cfg(), Variant::EuclidLocal), Err(Error::MissingNotSupported)));
        let r = train(&ds, &cfg(), Variant::AngleLocal);
        assert!(r.is_ok(), "{r:?}");
    }

    #[test]
    fn huge_learning_rate_reports_non_finite() {
        let ds = two_gaussians(50, 8);
        let c = TrainingConfig { lr_prototype: 1e300, lr_matrix: 1e300, epochs: 5, ..cfg() };
        let r = train(&ds, &c, Variant::EuclidGlobal);
        assert!(matches!(r, Err(Error::NonFinite { .. })), "{r:?}");
    }

    #[test]
    fn predict_examples() {
        let ds = two_gaussians(40, 9);
        let m = train(&ds, &TrainingConfig { epochs: 5, ..cfg() }, Variant::AngleGlobal).unwrap().model;
        for k in 0..m.n_prototypes() {
            assert_eq!(m.predict(SampleView::full(&m.prototypes[k])).unwrap(), m.proto_labels[k]);
        }
        // one prototype per class: prediction is the class of maximal cosine
        let plain = PrototypeModel {
            metric: Metric::Global(GlobalMatrix::new(DMatrix::identity(2, 2))),
            ..m.clone()
        };
        for i in 0..ds.len() {
            let x = ds.sample(i);
            let b: Vec<f64> = plain.prototypes.iter().map(|w| geometry::cosine_available(x, w).unwrap()).collect();
            let expect = if b[1] > b[0] { 1 } else { 0 };
            assert_eq!(plain.predict(x).unwrap(), expect);
        }
    }

    #[test]
    fn serialization_round_trip_and_errors() {
        let ds = two_gaussians(30, 10);
        for v in Variant::ALL {
            let c = TrainingConfig { epochs: 3, prototypes_per_class: 2, rank: Some(2), ..cfg() };
            let m = train(&ds, &c, v).unwrap().model;
            let back = PrototypeModel::from_json(&m.to_json()).unwrap();
            assert_eq!(back, m);
        }
        let m = train(&ds, &TrainingConfig { epochs: 2, ..cfg() }, Variant::AngleLocal).unwrap().model;
        let text = m.to_json();
        assert!(matches!(PrototypeModel::from_json(&text[..text.len() / 2]), Err(Error::Format(_))));
        let bumped = text.replace("\"format_version\": 1", "\"format_version\": 9");
        assert!(matches!(PrototypeModel::from_json(&bumped), Err(Error::Format(_))));
        let mut doc = m.to_document();
        doc.psi.as_mut().unwrap().pop();
        assert!(doc.into_model().is_err());
    }

    fn random_model(variant: Variant, seed: u64) -> (PrototypeModel, LabeledDataset) {
        let ds = two_gaussians(30, seed);
        let c = TrainingConfig { epochs: 3, prototypes_per_class: 2, ..cfg() };
        (train(&ds, &c, variant).unwrap().model, ds)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn angle_predictions_ignore_sample_scale(seed in 0u64..1000, scale in 1e-3f64..1e3, x in prop::collection::vec(-3.0f64..3.0, 2)) {
            prop_assume!(x[0].abs() + x[1].abs() > 1e-3);
            for v in [Variant::AngleGlobal, Variant::AngleLocal, Variant::AngleTwoMatrix] {
                let (m, _) = random_model(v, seed);
                let scaled: Vec<f64> = x.iter().map(|a| a * scale).collect();
                prop_assert_eq!(m.predict(SampleView::full(&x)).unwrap(), m.predict(SampleView::full(&scaled)).unwrap());
            }
        }

        #[test]
        fn mu_strictly_decreases_with_dj(dk in 1e-6f64..1.0, dj in 1e-6f64..1.0, f in 0.01f64..0.99) {
            let a = MarginTerms { dj, dk, jdx: 0, kdx: 1 };
            let b = MarginTerms { dj: dj * f, ..a };
            prop_assert!(b.mu() < a.mu());
            prop_assert!((-1.0..=1.0).contains(&a.mu()));
        }

        #[test]
        fn cost_per_sample_is_bounded(seed in 0u64..1000) {
            for v in Variant::ALL {
                let (m, ds) = random_model(v, seed);
                let e = cost(&m, &ds).unwrap() / ds.len() as f64;
                prop_assert!((-1.0..=1.0).contains(&e));
            }
        }

        #[test]
        fn angle_dissimilarities_stay_in_unit_interval(seed in 0u64..1000) {
            let ds = two_gaussians(40, seed);
            let c = TrainingConfig { lr_prototype: 0.5, lr_matrix: 0.05, beta: 20.0, prototypes_per_class: 2, seed, ..cfg() };
            for v in [Variant::AngleGlobal, Variant::AngleLocal, Variant::AngleTwoMatrix] {
                let mut m = init_model(&ds, &c, v).unwrap();
                for epoch in 0..5 {
                    for i in 0..ds.len() {
                        let t = m.sgd_step(ds.sample(i), ds.label(i), &c, epoch).unwrap();
                        prop_assert!((0.0..=1.0).contains(&t.dj) && (0.0..=1.0).contains(&t.dk));
                        m.metric.normalize();
                    }
                }
                for i in 0..ds.len() {
                    for d in m.dissimilarities(ds.sample(i)).unwrap() {
                        prop_assert!((0.0..=1.0).contains(&d));
                    }
                }
            }
        }

        #[test]
        fn reloaded_models_predict_identically(seed in 0u64..1000, xs in prop::collection::vec(-3.0f64..3.0, 200)) {
            for v in Variant::ALL {
                let (m, _) = random_model(v, seed);
                let back = PrototypeModel::from_json(&m.to_json()).unwrap();
                for x in xs.chunks(2) {
                    prop_assert_eq!(m.predict(SampleView::full(x)).unwrap(), back.predict(SampleView::full(x)).unwrap());
                }
            }
        }
    }

    #[test]
    fn training_is_deterministic() {
        let ds = two_gaussians(60, 11);
        for v in Variant::ALL {
            let c = TrainingConfig { epochs: 10, prototypes_per_class: 2, seed: 5, ..cfg() };
            let a = train(&ds, &c, v).unwrap();
            let b = train(&ds, &c, v).unwrap();
            assert_eq!(a.model.to_json(), b.model.to_json());
            assert_eq!(a.trace, b.trace);
        }
    }

}
