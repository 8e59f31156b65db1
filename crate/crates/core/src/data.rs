//! Labeled datasets with per-cell missing markers, ingestion, z-scoring and
//! the synthetic football generator.

use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::SampleView;

/// `S×D` samples, an observation mask of the same shape and integer labels.
///
/// Missing cells hold `NaN` in `values` and `false` in the mask.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    dim: usize,
    values: Vec<f64>,
    present: Vec<bool>,
    labels: Vec<usize>,
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
}

impl LabeledDataset {
    /// Builds a dataset from rows of optional cells (`None` = missing).
    pub fn from_rows(
        rows: &[Vec<Option<f64>>],
        labels: Vec<usize>,
        feature_names: Vec<String>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let dim = feature_names.len();
        let mut ds = Self::empty(feature_names, class_names);
        if rows.len() != labels.len() {
            return Err(Error::Shape(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        for (i, (row, &label)) in rows.iter().zip(&labels).enumerate() {
            if row.len() != dim {
                return Err(Error::Shape(format!(
                    "row {i} has {} cells, expected {dim}",
                    row.len()
                )));
            }
            ds.push_cells(row.iter().copied(), label)?;
        }
        ds.check_nonempty()?;
        Ok(ds)
    }

    /// Builds a fully observed dataset.
    pub fn from_dense(
        rows: &[Vec<f64>],
        labels: Vec<usize>,
        feature_names: Vec<String>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let cells: Vec<Vec<Option<f64>>> = rows
            .iter()
            .map(|r| r.iter().map(|&v| Some(v)).collect())
            .collect();
        Self::from_rows(&cells, labels, feature_names, class_names)
    }

    pub(crate) fn empty(feature_names: Vec<String>, class_names: Vec<String>) -> Self {
        Self {
            dim: feature_names.len(),
            values: Vec::new(),
            present: Vec::new(),
            labels: Vec::new(),
            feature_names,
            class_names,
        }
    }

    fn check_nonempty(&self) -> Result<()> {
        if self.dim == 0 || self.labels.is_empty() {
            return Err(Error::Shape("dataset needs at least one sample and one feature".into()));
        }
        if self.class_names.is_empty() {
            return Err(Error::Shape("dataset declares no classes".into()));
        }
        Ok(())
    }

    fn push_cells(&mut self, cells: impl Iterator<Item = Option<f64>>, label: usize) -> Result<()> {
        if label >= self.class_names.len() {
            return Err(Error::Shape(format!(
                "label {label} outside 0..{}",
                self.class_names.len()
            )));
        }
        for cell in cells {
            match cell {
                Some(v) if v.is_finite() => {
                    self.values.push(v);
                    self.present.push(true);
                }
                _ => {
                    self.values.push(f64::NAN);
                    self.present.push(false);
                }
            }
        }
        self.labels.push(label);
        Ok(())
    }

    /// Appends a row given values and mask; masked values are stored as `NaN`.
    pub(crate) fn push_row(&mut self, values: &[f64], present: &[bool], label: usize) -> Result<()> {
        self.push_cells(
            values.iter().zip(present).map(|(&v, &p)| p.then_some(v)),
            label,
        )
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn mask(&self, i: usize) -> &[bool] {
        &self.present[i * self.dim..(i + 1) * self.dim]
    }

    pub fn sample(&self, i: usize) -> SampleView<'_> {
        SampleView::new(self.row(i), self.mask(i)).expect("row and mask share length")
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Number of masked cells in the whole dataset.
    pub fn missing_cells(&self) -> usize {
        self.present.iter().filter(|&&p| !p).count()
    }

    /// Number of samples with at least one masked cell.
    pub fn rows_with_missing(&self) -> usize {
        (0..self.len()).filter(|&i| self.mask(i).contains(&false)).count()
    }

    pub fn has_missing(&self) -> bool {
        self.present.contains(&false)
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut out = Self::empty(self.feature_names.clone(), self.class_names.clone());
        for &i in indices {
            out.values.extend_from_slice(self.row(i));
            out.present.extend_from_slice(self.mask(i));
            out.labels.push(self.labels[i]);
        }
        out
    }

    /// Same samples and labels with the columns reordered by `order`.
    pub fn permute_features(&self, order: &[usize]) -> Self {
        let mut out = Self::empty(
            order.iter().map(|&j| self.feature_names[j].clone()).collect(),
            self.class_names.clone(),
        );
        for i in 0..self.len() {
            let (row, mask) = (self.row(i), self.mask(i));
            out.values.extend(order.iter().map(|&j| row[j]));
            out.present.extend(order.iter().map(|&j| mask[j]));
            out.labels.push(self.labels[i]);
        }
        out
    }

    fn map_cells(&self, mut f: impl FnMut(usize, f64, bool) -> Option<f64>) -> Self {
        let mut out = Self::empty(self.feature_names.clone(), self.class_names.clone());
        for i in 0..self.len() {
            let (row, mask) = (self.row(i), self.mask(i));
            for j in 0..self.dim {
                match f(j, row[j], mask[j]) {
                    Some(v) => {
                        out.values.push(v);
                        out.present.push(true);
                    }
                    None => {
                        out.values.push(f64::NAN);
                        out.present.push(false);
                    }
                }
            }
            out.labels.push(self.labels[i]);
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Football

/// `f(x) = 2 sinh(5 x₁x₂x₃)`.
pub fn football_function(x: &[f64; 3]) -> f64 {
    2.0 * (5.0 * x[0] * x[1] * x[2]).sinh()
}

/// Class 1 iff `f(x) > 0.5`.
pub fn football_label(x: &[f64; 3]) -> usize {
    usize::from(football_function(x) > 0.5)
}

/// `n` points uniform on `[−1, 1]³`, labeled by thresholding the football function.
pub fn generate_football(n: usize, seed: u64) -> LabeledDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ds = LabeledDataset::empty(
        vec!["x1".into(), "x2".into(), "x3".into()],
        vec!["0".into(), "1".into()],
    );
    for _ in 0..n {
        let x: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..=1.0));
        ds.push_row(&x, &[true; 3], football_label(&x))
            .expect("labels are 0 or 1");
    }
    ds
}

// ---------------------------------------------------------------------------
// Cleveland heart disease

pub const CLEVELAND_FEATURES: [&str; 13] = [
    "age", "sex", "cp", "trestbps", "chol", "fbs", "restecg", "thalach", "exang", "oldpeak",
    "slope", "ca", "thal",
];

/// Parses the UCI `processed.cleveland.data` format: 14 comma-separated
/// fields, `?` for missing, last field the 0–4 diagnosis.
pub fn parse_cleveland(text: &str) -> Result<LabeledDataset> {
    let class_names = ["healthy", "sick1", "sick2", "sick3", "sick4"]
        .map(String::from)
        .to_vec();
    let mut ds = LabeledDataset::empty(
        CLEVELAND_FEATURES.map(String::from).to_vec(),
        class_names,
    );
    for (lineno, line) in text.lines().enumerate() {
        let row = lineno + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 14 {
            return Err(Error::format(format!(
                "row {row}: expected 14 fields, found {}",
                fields.len()
            )));
        }
        let mut cells = Vec::with_capacity(13);
        for (col, f) in fields[..13].iter().enumerate() {
            cells.push(parse_cell(f).map_err(|_| {
                Error::format(format!("row {row}, column {}: cannot parse {f:?}", col + 1))
            })?);
        }
        let target = fields[13]
            .parse::<f64>()
            .ok()
            .filter(|t| t.fract() == 0.0 && (0.0..=4.0).contains(t))
            .ok_or_else(|| {
                Error::format(format!("row {row}: diagnosis {:?} not in 0..=4", fields[13]))
            })?;
        ds.push_cells(cells.into_iter(), target as usize)?;
    }
    ds.check_nonempty()?;
    Ok(ds)
}

fn parse_cell(s: &str) -> std::result::Result<Option<f64>, std::num::ParseFloatError> {
    if s.is_empty() || s == "?" {
        Ok(None)
    } else {
        s.parse::<f64>().map(Some)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassMode {
    /// Healthy versus any disease grade.
    Binary,
    FiveClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MissingPolicy {
    /// Missing cells become the literal value −9.
    KeepMinusNine,
    /// Missing cells (and literal −9 sentinels) are masked.
    ToMissing,
}

pub const MISSING_SENTINEL: f64 = -9.0;

/// Applies the class grouping and missing-value convention used for the
/// heart-disease experiments.
pub fn relabel(ds: &LabeledDataset, mode: ClassMode, policy: MissingPolicy) -> LabeledDataset {
    let mut out = match policy {
        MissingPolicy::KeepMinusNine => {
            ds.map_cells(|_, v, present| Some(if present { v } else { MISSING_SENTINEL }))
        }
        MissingPolicy::ToMissing => {
            ds.map_cells(|_, v, present| (present && v != MISSING_SENTINEL).then_some(v))
        }
    };
    if mode == ClassMode::Binary && ds.n_classes() > 2 {
        for l in &mut out.labels {
            *l = usize::from(*l > 0);
        }
        out.class_names = vec!["healthy".into(), "disease".into()];
    }
    out
}

// ---------------------------------------------------------------------------
// z-score

/// Per-feature mean and (population) standard deviation over observed cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZScoreParams {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

pub fn zscore_fit(train: &LabeledDataset) -> ZScoreParams {
    let d = train.dim();
    let mut mean = vec![0.0; d];
    let mut std = vec![1.0; d];
    for j in 0..d {
        let col: Vec<f64> = (0..train.len())
            .filter(|&i| train.mask(i)[j])
            .map(|i| train.row(i)[j])
            .collect();
        if col.is_empty() {
            continue;
        }
        let n = col.len() as f64;
        let m = col.iter().sum::<f64>() / n;
        let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
        mean[j] = m;
        let s = var.sqrt();
        std[j] = if s < 1e-12 { 1.0 } else { s };
    }
    ZScoreParams { mean, std }
}

pub fn zscore_apply(ds: &LabeledDataset, params: &ZScoreParams) -> LabeledDataset {
    ds.map_cells(|j, v, present| present.then(|| (v - params.mean[j]) / params.std[j]))
}

pub fn zscore_invert(ds: &LabeledDataset, params: &ZScoreParams) -> LabeledDataset {
    ds.map_cells(|j, v, present| present.then(|| v * params.std[j] + params.mean[j]))
}

// ---------------------------------------------------------------------------
// CSV

/// Which column holds the label and, optionally, the admissible class names
/// (their order defines the class ids).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvSchema {
    pub label_column: String,
    pub classes: Option<Vec<String>>,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            label_column: "label".into(),
            classes: None,
        }
    }
}

pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Reads a header-first CSV; empty cells and `?` are missing.
pub fn read_csv(reader: impl Read, schema: &CsvSchema) -> Result<LabeledDataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| Error::format(format!("header: {e}")))?
        .clone();
    let label_idx = header
        .iter()
        .position(|h| h == schema.label_column)
        .ok_or_else(|| Error::format(format!("no label column {:?}", schema.label_column)))?;
    let feature_names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != label_idx)
        .map(|(_, h)| h.to_string())
        .collect();

    let mut rows = Vec::new();
    let mut raw_labels = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::format(format!("row {line}: {e}")))?;
        if rec.len() != header.len() {
            return Err(Error::format(format!(
                "row {line}: {} fields, header has {}",
                rec.len(),
                header.len()
            )));
        }
        let mut cells = Vec::with_capacity(feature_names.len());
        for (j, field) in rec.iter().enumerate() {
            if j == label_idx {
                continue;
            }
            cells.push(parse_cell(field).map_err(|_| {
                Error::format(format!("row {line}, column {}: cannot parse {field:?}", header[j].to_string()))
            })?);
        }
        rows.push(cells);
        raw_labels.push((line, rec[label_idx].to_string()));
    }

    let class_names = match &schema.classes {
        Some(c) => c.clone(),
        None => infer_classes(raw_labels.iter().map(|(_, l)| l.as_str())),
    };
    let mut labels = Vec::with_capacity(raw_labels.len());
    for (line, l) in &raw_labels {
        let id = class_names.iter().position(|c| c == l).ok_or_else(|| {
            Error::format(format!(
                "row {line}, column {}: label {l:?} is not a declared class",
                schema.label_column
            ))
        })?;
        labels.push(id);
    }
    LabeledDataset::from_rows(&rows, labels, feature_names, class_names)
}

/// Distinct label strings, numerically ordered when they are all integers.
fn infer_classes<'a>(labels: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut distinct: Vec<String> = labels.map(String::from).collect();
    distinct.sort();
    distinct.dedup();
    if distinct.iter().all(|l| l.parse::<i64>().is_ok()) {
        distinct.sort_by_key(|l| l.parse::<i64>().unwrap());
    }
    distinct
}

/// Writes the feature columns followed by `label`; missing cells become `?`.
pub fn write_csv(ds: &LabeledDataset, writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let to_err = |e: csv::Error| Error::format(e.to_string());
    let mut header: Vec<&str> = ds.feature_names.iter().map(String::as_str).collect();
    header.push("label");
    w.write_record(&header).map_err(to_err)?;
    for i in 0..ds.len() {
        let mut rec: Vec<String> = ds
            .row(i)
            .iter()
            .zip(ds.mask(i))
            .map(|(v, &p)| if p { v.to_string() } else { "?".into() })
            .collect();
        rec.push(ds.class_names[ds.label(i)].clone());
        w.write_record(&rec).map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::format(e.to_string()))?;
    Ok(())
}

pub fn save_csv(ds: &LabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(ds, std::io::BufWriter::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    const CLEVELAND_SAMPLE: &str = "\
63.0,1.0,1.0,145.0,233.0,1.0,2.0,150.0,0.0,2.3,3.0,0.0,6.0,0
67.0,1.0,4.0,160.0,286.0,0.0,2.0,108.0,1.0,1.5,2.0,3.0,3.0,2
67.0,1.0,4.0,120.0,229.0,0.0,2.0,129.0,1.0,2.6,2.0,2.0,7.0,1
53.0,0.0,3.0,128.0,216.0,0.0,2.0,115.0,0.0,0.0,1.0,0.0,?,0
52.0,1.0,4.0,128.0,204.0,1.0,0.0,156.0,1.0,1.0,2.0,0.0,?,2
";

    #[test]
    fn football_labels() {
        assert_eq!(football_label(&[0.0, 0.3, -0.8]), 0);
        assert!((football_function(&[0.5, 0.5, 0.5]) - 1.3330).abs() < 1e-4);
        assert_eq!(football_label(&[0.5, 0.5, 0.5]), 1);
        assert!((football_function(&[-0.5, 0.5, 0.5]) + 1.3330).abs() < 1e-4);
        assert_eq!(football_label(&[-0.5, 0.5, 0.5]), 0);
    }

    #[test]
    fn football_generator_is_seeded() {
        let a = generate_football(500, 9);
        let b = generate_football(500, 9);
        let c = generate_football(500, 10);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 500);
        assert_eq!(a.dim(), 3);
        for i in 0..a.len() {
            let r = a.row(i);
            assert!(r.iter().all(|v| (-1.0..=1.0).contains(v)));
            assert_eq!(a.label(i), football_label(&[r[0], r[1], r[2]]));
        }
    }

    #[test]
    fn cleveland_parsing() {
        let ds = parse_cleveland(CLEVELAND_SAMPLE).unwrap();
        assert_eq!(ds.len(), 5);
        assert_eq!(ds.dim(), 13);
        assert_eq!(ds.class_counts(), vec![2, 1, 2, 0, 0]);
        assert_eq!(ds.rows_with_missing(), 2);
        assert!(!ds.mask(3)[12]);
        assert_eq!(ds.row(0)[0], 63.0);
    }

    #[test]
    fn cleveland_rejects_short_row() {
        let err = parse_cleveland("63.0,1.0,1.0,145.0,233.0,1.0,2.0,150.0,0.0,2.3,3.0,0.0,6.0\n").unwrap_err();
        match err {
            Error::Format(msg) => assert!(msg.contains("row 1"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
        let err = parse_cleveland(&format!("{CLEVELAND_SAMPLE}1,2,x,4,5,6,7,8,9,10,11,12,13,0\n")).unwrap_err();
        assert!(err.to_string().contains("row 6"));
        assert!(parse_cleveland("1,2,3,4,5,6,7,8,9,10,11,12,13,7\n").is_err());
    }

    #[test]
    fn relabel_modes() {
        let ds = parse_cleveland(CLEVELAND_SAMPLE).unwrap();
        let bin = relabel(&ds, ClassMode::Binary, MissingPolicy::KeepMinusNine);
        assert_eq!(bin.class_counts(), vec![2, 3]);
        assert_eq!(bin.missing_cells(), 0);
        let sentinel_rows = (0..bin.len()).filter(|&i| bin.row(i).contains(&MISSING_SENTINEL)).count();
        assert_eq!(sentinel_rows, 2);

        let five = relabel(&ds, ClassMode::FiveClass, MissingPolicy::ToMissing);
        assert_eq!(five.missing_cells(), ds.missing_cells());
        assert_eq!(five.labels(), ds.labels());

        // reverting the sentinel restores the mask; binary twice is stable
        let back = relabel(&bin, ClassMode::Binary, MissingPolicy::ToMissing);
        assert_eq!(back.missing_cells(), ds.missing_cells());
        let again = relabel(&back, ClassMode::Binary, MissingPolicy::ToMissing);
        assert_eq!(again.labels(), back.labels());
        assert_eq!(again.class_names, back.class_names);
        for i in 0..back.len() {
            assert_eq!(again.mask(i), back.mask(i));
            let kept = |d: &LabeledDataset| -> Vec<f64> {
                d.row(i).iter().zip(d.mask(i)).filter(|(_, &m)| m).map(|(v, _)| *v).collect()
            };
            assert_eq!(kept(&again), kept(&back));
        }
    }

    #[test]
    fn zscore_behaviour() {
        let rows = vec![
            vec![Some(1.0), Some(5.0), Some(2.0)],
            vec![Some(2.0), Some(5.0), None],
            vec![Some(4.0), Some(5.0), Some(6.0)],
            vec![Some(7.0), Some(5.0), Some(1.0)],
        ];
        let names = vec!["a".into(), "b".into(), "c".into()];
        let ds = LabeledDataset::from_rows(&rows, vec![0, 1, 0, 1], names, vec!["x".into(), "y".into()]).unwrap();
        let p = zscore_fit(&ds);
        assert_eq!(p.std[1], 1.0);
        let z = zscore_apply(&ds, &p);
        assert!(!z.mask(1)[2]);
        for j in [0, 2] {
            let col: Vec<f64> = (0..z.len()).filter(|&i| z.mask(i)[j]).map(|i| z.row(i)[j]).collect();
            let n = col.len() as f64;
            let m = col.iter().sum::<f64>() / n;
            let s = (col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt();
            assert!(m.abs() < 1e-9 && (s - 1.0).abs() < 1e-9);
        }
        assert!((0..z.len()).all(|i| z.row(i)[1] == 0.0));

        let back = zscore_invert(&z, &p);
        for i in 0..ds.len() {
            for j in 0..3 {
                if ds.mask(i)[j] {
                    assert!((back.row(i)[j] - ds.row(i)[j]).abs() < 1e-9);
                }
            }
        }

        // test split uses train statistics, so its mean is generally not zero
        let test = LabeledDataset::from_rows(
            &[vec![Some(10.0), Some(5.0), Some(10.0)], vec![Some(12.0), Some(5.0), Some(8.0)]],
            vec![0, 1],
            ds.feature_names.clone(),
            ds.class_names.clone(),
        )
        .unwrap();
        let zt = zscore_apply(&test, &p);
        assert!((zt.row(0)[0] + zt.row(1)[0]).abs() > 1.0);
    }

    #[test]
    fn csv_reading() {
        let text = "f1,f2,label\n1.5,2,a\n?,3,b\n4,,a\n";
        let ds = read_csv(text.as_bytes(), &CsvSchema::default()).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.feature_names, vec!["f1", "f2"]);
        assert_eq!(ds.class_names, vec!["a", "b"]);
        assert_eq!(ds.labels(), &[0, 1, 0]);
        assert_eq!(ds.row(0), &[1.5, 2.0]);
        assert!(!ds.mask(1)[0]);
        assert!(!ds.mask(2)[1]);

        let schema = CsvSchema {
            label_column: "label".into(),
            classes: Some(vec!["a".into()]),
        };
        let err = read_csv(text.as_bytes(), &schema).unwrap_err();
        assert!(err.to_string().contains("row 3"), "{err}");

        assert!(read_csv("f1,label\nzz,0\n".as_bytes(), &CsvSchema::default()).is_err());
    }

    #[test]
    fn csv_round_trip_keeps_missing() {
        let ds = parse_cleveland(CLEVELAND_SAMPLE).unwrap();
        let mut buf = Vec::new();
        write_csv(&ds, &mut buf).unwrap();
        let schema = CsvSchema {
            label_column: "label".into(),
            classes: Some(ds.class_names.clone()),
        };
        let back = read_csv(buf.as_slice(), &schema).unwrap();
        assert_eq!(back.labels(), ds.labels());
        assert_eq!(back.missing_cells(), ds.missing_cells());
        for i in 0..ds.len() {
            assert_eq!(back.mask(i), ds.mask(i));
        }
    }
}
