//! Dissimilarity measures and their analytic gradients.
//!
//! Every angle is a cosine between two vectors after a linear map `T`
//! (identity, `Ω`, `Ψᶜ` or `Ψᶜ·Ω`). Dimensions that are not observed in the
//! sample are dropped from *both* vectors, which is the same as deleting the
//! corresponding columns of `T`. The angle dissimilarity is `g_β(b)`.
//!
//! Euclidean quadratic forms `‖T(x − w)‖²` are provided for the baseline
//! variants and reject samples with missing values.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Norms below this are treated as degenerate.
pub const DEGENERACY_EPS: f64 = 1e-12;

/// A sample together with its observation mask.
///
/// `present == None` means every dimension is observed.
#[derive(Debug, Clone, Copy)]
pub struct SampleView<'a> {
    values: &'a [f64],
    present: Option<&'a [bool]>,
}

impl<'a> SampleView<'a> {
    pub fn new(values: &'a [f64], present: &'a [bool]) -> Result<Self> {
        if values.len() != present.len() {
            return Err(Error::Shape(format!(
                "sample has {} values but a mask of length {}",
                values.len(),
                present.len()
            )));
        }
        Ok(Self {
            values,
            present: Some(present),
        })
    }

    /// A fully observed sample.
    pub fn full(values: &'a [f64]) -> Self {
        Self {
            values,
            present: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &'a [f64] {
        self.values
    }

    #[inline]
    pub fn is_present(&self, j: usize) -> bool {
        self.present.is_none_or(|p| p[j])
    }

    pub fn has_missing(&self) -> bool {
        self.present.is_some_and(|p| p.iter().any(|&o| !o))
    }

    pub fn observed_count(&self) -> usize {
        match self.present {
            None => self.values.len(),
            Some(p) => p.iter().filter(|&&o| o).count(),
        }
    }

    /// Indices of observed dimensions in increasing order.
    pub fn observed(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.values.len()).filter(move |&j| self.is_present(j))
    }
}

/// Slope parameter of `g_β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleParams {
    beta: f64,
}

impl AngleParams {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Config(format!("beta must be positive, got {beta}")));
        }
        Ok(Self { beta })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// Scales `m` so that `trace(mᵀm)` (the squared Frobenius norm) is one.
/// A zero matrix is left unchanged.
pub fn normalize_unit_trace(m: &mut DMatrix<f64>) {
    let t = m.norm_squared();
    if t > 0.0 && t.is_finite() {
        *m /= t.sqrt();
    }
}

/// `M×D` global projection `Ω`; `Λ = ΩᵀΩ`.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalMatrix {
    pub omega: DMatrix<f64>,
}

impl GlobalMatrix {
    pub fn new(omega: DMatrix<f64>) -> Self {
        Self { omega }
    }

    /// First `rank` rows of the `dim×dim` identity, scaled to unit trace.
    pub fn truncated_identity(rank: usize, dim: usize) -> Self {
        let mut omega = DMatrix::identity(rank, dim);
        normalize_unit_trace(&mut omega);
        Self { omega }
    }

    pub fn rank(&self) -> usize {
        self.omega.nrows()
    }

    pub fn dim(&self) -> usize {
        self.omega.ncols()
    }

    pub fn normalize(&mut self) {
        normalize_unit_trace(&mut self.omega);
    }

    pub fn lambda(&self) -> DMatrix<f64> {
        self.omega.transpose() * &self.omega
    }
}

/// Whether local matrices belong to classes or to individual prototypes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Attachment {
    #[default]
    ClassWise,
    PrototypeWise,
}

/// Stack of local `M×D` matrices `Ψᶜ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalMatrix {
    pub psi: Vec<DMatrix<f64>>,
    pub attachment: Attachment,
}

impl LocalMatrix {
    pub fn new(psi: Vec<DMatrix<f64>>, attachment: Attachment) -> Result<Self> {
        if let Some(first) = psi.first() {
            let shape = first.shape();
            if psi.iter().any(|p| p.shape() != shape) {
                return Err(Error::Shape("local matrices differ in shape".into()));
            }
        }
        Ok(Self { psi, attachment })
    }

    pub fn truncated_identity(count: usize, rank: usize, dim: usize, attachment: Attachment) -> Self {
        let m = GlobalMatrix::truncated_identity(rank, dim).omega;
        Self {
            psi: vec![m; count],
            attachment,
        }
    }

    pub fn rank(&self) -> usize {
        self.psi.first().map_or(0, |p| p.nrows())
    }

    pub fn normalize(&mut self) {
        self.psi.iter_mut().for_each(normalize_unit_trace);
    }
}

/// Shared `M×D` projection `Ω` followed by class-wise square `M×M` matrices `Ψᶜ`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoMatrix {
    pub omega: DMatrix<f64>,
    pub psi: Vec<DMatrix<f64>>,
}

impl TwoMatrix {
    pub fn new(omega: DMatrix<f64>, psi: Vec<DMatrix<f64>>) -> Result<Self> {
        let m = omega.nrows();
        if psi.iter().any(|p| p.shape() != (m, m)) {
            return Err(Error::Shape(format!(
                "two-matrix local matrices must be {m}x{m}"
            )));
        }
        Ok(Self { omega, psi })
    }

    pub fn truncated_identity(classes: usize, rank: usize, dim: usize) -> Self {
        let omega = GlobalMatrix::truncated_identity(rank, dim).omega;
        let psi = GlobalMatrix::truncated_identity(rank, rank).omega;
        Self {
            omega,
            psi: vec![psi; classes],
        }
    }

    pub fn rank(&self) -> usize {
        self.omega.nrows()
    }

    pub fn normalize(&mut self) {
        normalize_unit_trace(&mut self.omega);
        self.psi.iter_mut().for_each(normalize_unit_trace);
    }
}

/// Dissimilarity value and gradients with respect to the prototype and the
/// matrices that took part in the evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Grads {
    pub d: f64,
    pub grad_w: Vec<f64>,
    pub grad_omega: Option<DMatrix<f64>>,
    pub grad_psi: Option<DMatrix<f64>>,
}

// ---------------------------------------------------------------------------
// g_β

/// `g_β(b) = (exp(−β(b−1)) − 1) / (exp(2β) − 1)`, evaluated as
/// `exp(−β(1+b))·(1 − exp(−β(1−b))) / (1 − exp(−2β))` so large β cannot overflow.
pub fn g_beta(b: f64, p: AngleParams) -> f64 {
    let beta = p.beta;
    let b = b.clamp(-1.0, 1.0);
    (-beta * (1.0 + b)).exp() * -(-beta * (1.0 - b)).exp_m1() / -(-2.0 * beta).exp_m1()
}

/// `∂g_β/∂b = −β exp(−βb + β) / (exp(2β) − 1)`.
pub fn g_beta_derivative(b: f64, p: AngleParams) -> f64 {
    let beta = p.beta;
    let b = b.clamp(-1.0, 1.0);
    -beta * (-beta * (1.0 + b)).exp() / -(-2.0 * beta).exp_m1()
}

// ---------------------------------------------------------------------------
// cosine machinery

struct Cosine {
    b: f64,
    nu: f64,
    nv: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn cosine_of(u: &[f64], v: &[f64]) -> Result<Cosine> {
    let nu = dot(u, u).sqrt();
    let nv = dot(v, v).sqrt();
    for norm in [nu, nv] {
        if !(norm >= DEGENERACY_EPS) {
            return Err(Error::DegenerateVector { norm });
        }
    }
    let b = (dot(u, v) / (nu * nv)).clamp(-1.0, 1.0);
    Ok(Cosine { b, nu, nv })
}

/// `(∂b/∂u, ∂b/∂v)` for `b = u·v / (‖u‖‖v‖)`.
fn cosine_grads(u: &[f64], v: &[f64], c: &Cosine) -> (Vec<f64>, Vec<f64>) {
    // (v̂ − b û)/‖u‖ cancels exactly when u, v are collinear 1-vectors
    let gu = u.iter().zip(v).map(|(ui, vi)| (vi / c.nv - c.b * (ui / c.nu)) / c.nu).collect();
    let gv = u.iter().zip(v).map(|(ui, vi)| (ui / c.nu - c.b * (vi / c.nv)) / c.nv).collect();
    (gu, gv)
}

/// `T x_r` and `T w_r` using only the columns observed in `x`.
fn project_pair(t: &DMatrix<f64>, x: SampleView, w: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let rows = t.nrows();
    let mut u = vec![0.0; rows];
    let mut v = vec![0.0; rows];
    for j in x.observed() {
        let (xj, wj) = (x.values[j], w[j]);
        for m in 0..rows {
            let tmj = t[(m, j)];
            u[m] += tmj * xj;
            v[m] += tmj * wj;
        }
    }
    (u, v)
}

fn check_dims(x: SampleView, w: &[f64], cols: usize) -> Result<()> {
    if x.dim() != w.len() || w.len() != cols {
        return Err(Error::Shape(format!(
            "dimension mismatch: sample {}, prototype {}, matrix columns {}",
            x.dim(),
            w.len(),
            cols
        )));
    }
    if x.observed_count() == 0 {
        return Err(Error::EmptyMask);
    }
    Ok(())
}

/// Cosine between `x` and `w` over the dimensions observed in `x`.
pub fn cosine_available(x: SampleView, w: &[f64]) -> Result<f64> {
    check_dims(x, w, w.len())?;
    let (u, v): (Vec<f64>, Vec<f64>) = x.observed().map(|j| (x.values[j], w[j])).unzip();
    Ok(cosine_of(&u, &v)?.b)
}

fn transformed_angle(t: &DMatrix<f64>, x: SampleView, w: &[f64]) -> Result<f64> {
    check_dims(x, w, t.ncols())?;
    let (u, v) = project_pair(t, x, w);
    Ok(cosine_of(&u, &v)?.b)
}

/// Gradients of `g_β(b_T)` for a single linear map `T` (Ω or Ψᶜ).
fn transformed_grads(t: &DMatrix<f64>, x: SampleView, w: &[f64], p: AngleParams) -> Result<(f64, Vec<f64>, DMatrix<f64>)> {
    check_dims(x, w, t.ncols())?;
    let (u, v) = project_pair(t, x, w);
    let c = cosine_of(&u, &v)?;
    let (gu, gv) = cosine_grads(&u, &v, &c);
    let dg = g_beta_derivative(c.b, p);

    let rows = t.nrows();
    let mut grad_w = vec![0.0; w.len()];
    let mut grad_t = DMatrix::zeros(rows, t.ncols());
    for j in x.observed() {
        let (xj, wj) = (x.values[j], w[j]);
        let mut acc = 0.0;
        for m in 0..rows {
            acc += t[(m, j)] * gv[m];
            grad_t[(m, j)] = dg * (gu[m] * xj + gv[m] * wj);
        }
        grad_w[j] = dg * acc;
    }
    Ok((g_beta(c.b, p), grad_w, grad_t))
}

// ---------------------------------------------------------------------------
// parameterized angles

/// `b_Ω = xᵀΩᵀΩw / (‖x‖_Ω ‖w‖_Ω)`.
pub fn angle_global(x: SampleView, w: &[f64], m: &GlobalMatrix) -> Result<f64> {
    transformed_angle(&m.omega, x, w)
}

/// Gradients of `d = g_β(b_Ω)` with respect to `w` and `Ω`.
pub fn angle_global_grads(x: SampleView, w: &[f64], m: &GlobalMatrix, p: AngleParams) -> Result<Grads> {
    let (d, grad_w, grad_omega) = transformed_grads(&m.omega, x, w, p)?;
    Ok(Grads {
        d,
        grad_w,
        grad_omega: Some(grad_omega),
        grad_psi: None,
    })
}

fn local_at(m: &LocalMatrix, idx: usize) -> Result<&DMatrix<f64>> {
    m.psi
        .get(idx)
        .ok_or_else(|| Error::Shape(format!("no local matrix with index {idx}")))
}

/// `b_Ψ = xᵀΨᶜᵀΨᶜw / (‖x‖_Ψ ‖w‖_Ψ)` with the matrix at `idx`.
pub fn angle_local(x: SampleView, w: &[f64], m: &LocalMatrix, idx: usize) -> Result<f64> {
    transformed_angle(local_at(m, idx)?, x, w)
}

/// Gradients of `d = g_β(b_Ψ)`; `grad_psi` refers to the matrix at `idx` only.
pub fn angle_local_grads(x: SampleView, w: &[f64], m: &LocalMatrix, idx: usize, p: AngleParams) -> Result<Grads> {
    let (d, grad_w, grad_psi) = transformed_grads(local_at(m, idx)?, x, w, p)?;
    Ok(Grads {
        d,
        grad_w,
        grad_omega: None,
        grad_psi: Some(grad_psi),
    })
}

fn two_matrix_local(m: &TwoMatrix, class: usize) -> Result<&DMatrix<f64>> {
    m.psi
        .get(class)
        .ok_or_else(|| Error::Shape(format!("no local matrix for class {class}")))
}

/// `b_2M = xᵀΩᵀΨᶜᵀΨᶜΩw / (‖x‖_2M ‖w‖_2M)`.
pub fn angle_twomatrix(x: SampleView, w: &[f64], m: &TwoMatrix, class: usize) -> Result<f64> {
    let psi = two_matrix_local(m, class)?;
    check_dims(x, w, m.omega.ncols())?;
    let (p, q) = project_pair(&m.omega, x, w);
    Ok(cosine_of(&mat_vec(psi, &p), &mat_vec(psi, &q))?.b)
}

/// Gradients of `d = g_β(b_2M)` with respect to `w`, `Ω` and `Ψᶜ`.
pub fn angle_twomatrix_grads(x: SampleView, w: &[f64], m: &TwoMatrix, class: usize, params: AngleParams) -> Result<Grads> {
    let psi = two_matrix_local(m, class)?;
    check_dims(x, w, m.omega.ncols())?;
    let omega = &m.omega;
    let rank = omega.nrows();
    let (p, q) = project_pair(omega, x, w);
    let u = mat_vec(psi, &p);
    let v = mat_vec(psi, &q);
    let c = cosine_of(&u, &v)?;
    let (gu, gv) = cosine_grads(&u, &v, &c);
    let dg = g_beta_derivative(c.b, params);

    let mut grad_psi = DMatrix::zeros(rank, rank);
    for a in 0..rank {
        for b in 0..rank {
            grad_psi[(a, b)] = dg * (gu[a] * p[b] + gv[a] * q[b]);
        }
    }
    let hp = mat_t_vec(psi, &gu);
    let hq = mat_t_vec(psi, &gv);
    let mut grad_omega = DMatrix::zeros(rank, omega.ncols());
    let mut grad_w = vec![0.0; w.len()];
    for j in x.observed() {
        let (xj, wj) = (x.values[j], w[j]);
        let mut acc = 0.0;
        for r in 0..rank {
            grad_omega[(r, j)] = dg * (hp[r] * xj + hq[r] * wj);
            acc += omega[(r, j)] * hq[r];
        }
        grad_w[j] = dg * acc;
    }
    Ok(Grads {
        d: g_beta(c.b, params),
        grad_w,
        grad_omega: Some(grad_omega),
        grad_psi: Some(grad_psi),
    })
}

fn mat_vec(m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| m[(r, c)] * v[c]).sum())
        .collect()
}

fn mat_t_vec(m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (0..m.ncols())
        .map(|c| (0..m.nrows()).map(|r| m[(r, c)] * v[r]).sum())
        .collect()
}

// ---------------------------------------------------------------------------
// Euclidean quadratic forms

fn full_difference(x: SampleView, w: &[f64], cols: usize) -> Result<Vec<f64>> {
    if x.has_missing() {
        return Err(Error::MissingNotSupported);
    }
    check_dims(x, w, cols)?;
    Ok(x.values.iter().zip(w).map(|(a, b)| a - b).collect())
}

/// `‖T(x − w)‖²` for `T = Ω` or `Ψᶜ`.
pub fn euclid_quadform(x: SampleView, w: &[f64], t: &DMatrix<f64>) -> Result<f64> {
    let diff = full_difference(x, w, t.ncols())?;
    Ok(mat_vec(t, &diff).iter().map(|z| z * z).sum())
}

/// Gradients of `‖T(x − w)‖²` with respect to `w` and `T`.
///
/// The matrix gradient is reported in `grad_omega`.
pub fn euclid_quadform_grads(x: SampleView, w: &[f64], t: &DMatrix<f64>) -> Result<Grads> {
    let diff = full_difference(x, w, t.ncols())?;
    let z = mat_vec(t, &diff);
    let d = z.iter().map(|v| v * v).sum();
    let grad_w = mat_t_vec(t, &z).into_iter().map(|g| -2.0 * g).collect();
    let mut grad_t = DMatrix::zeros(t.nrows(), t.ncols());
    for r in 0..t.nrows() {
        for c in 0..t.ncols() {
            grad_t[(r, c)] = 2.0 * z[r] * diff[c];
        }
    }
    Ok(Grads {
        d,
        grad_w,
        grad_omega: Some(grad_t),
        grad_psi: None,
    })
}

/// `‖Ψᶜ Ω (x − w)‖²`.
pub fn euclid_twomatrix(x: SampleView, w: &[f64], m: &TwoMatrix, class: usize) -> Result<f64> {
    let psi = two_matrix_local(m, class)?;
    let diff = full_difference(x, w, m.omega.ncols())?;
    let z = mat_vec(psi, &mat_vec(&m.omega, &diff));
    Ok(z.iter().map(|v| v * v).sum())
}

pub fn euclid_twomatrix_grads(x: SampleView, w: &[f64], m: &TwoMatrix, class: usize) -> Result<Grads> {
    let psi = two_matrix_local(m, class)?;
    let diff = full_difference(x, w, m.omega.ncols())?;
    let p = mat_vec(&m.omega, &diff);
    let z = mat_vec(psi, &p);
    let d = z.iter().map(|v| v * v).sum();
    let h = mat_t_vec(psi, &z);
    let rank = m.omega.nrows();
    let mut grad_psi = DMatrix::zeros(rank, rank);
    for a in 0..rank {
        for b in 0..rank {
            grad_psi[(a, b)] = 2.0 * z[a] * p[b];
        }
    }
    let mut grad_omega = DMatrix::zeros(rank, m.omega.ncols());
    for r in 0..rank {
        for c in 0..m.omega.ncols() {
            grad_omega[(r, c)] = 2.0 * h[r] * diff[c];
        }
    }
    let grad_w = mat_t_vec(&m.omega, &h).into_iter().map(|g| -2.0 * g).collect();
    Ok(Grads {
        d,
        grad_w,
        grad_omega: Some(grad_omega),
        grad_psi: Some(grad_psi),
    })
}

/// Cosine of `u` and `v` under the symmetric map `Ψᵀ Ψ` in an already reduced space.
pub(crate) fn reduced_cosine(psi: Option<&DMatrix<f64>>, u: &[f64], v: &[f64]) -> Result<f64> {
    match psi {
        None => Ok(cosine_of(u, v)?.b),
        Some(psi) => Ok(cosine_of(&mat_vec(psi, u), &mat_vec(psi, v))?.b),
    }
}

pub(crate) fn project(t: &DMatrix<f64>, x: SampleView) -> Vec<f64> {
    let mut u = vec![0.0; t.nrows()];
    for j in x.observed() {
        for (m, um) in u.iter_mut().enumerate() {
            *um += t[(m, j)] * x.values[j];
        }
    }
    u
}
