//! Stratified cross-validation, classification metrics, eigen-relevance
//! analysis and the experiment runner.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{zscore_apply, zscore_fit, LabeledDataset, ZScoreParams};
use crate::error::{Error, Result};
use crate::geometry::Attachment;
use crate::models::{train, Metric, PrototypeModel, TrainingConfig, Variant};
use crate::resampling::{oversample, OversampleConfig, OversampleVariant};

/// Eigenvalues above this fraction of the trace count towards the effective rank.
pub const EFFECTIVE_RANK_THRESHOLD: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub assignments: Vec<usize>,
    pub k: usize,
    pub stratified: bool,
    pub seed: u64,
}

impl FoldSplit {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] != fold).collect()
    }
}

/// Shuffles each class and deals its members round-robin over the folds.
pub fn stratified_kfold(ds: &LabeledDataset, k: usize, seed: u64) -> Result<FoldSplit> {
    if k < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {k}")));
    }
    let counts = ds.class_counts();
    for (c, &count) in counts.iter().enumerate() {
        if count < k {
            return Err(Error::ClassTooSmall {
                class: ds.class_names[c].clone(),
                count,
                k,
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = vec![0; ds.len()];
    let mut offset = 0;
    for c in 0..counts.len() {
        let mut members: Vec<usize> = (0..ds.len()).filter(|&i| ds.label(i) == c).collect();
        members.shuffle(&mut rng);
        for (p, &i) in members.iter().enumerate() {
            assignments[i] = (offset + p) % k;
        }
        offset += members.len();
    }
    Ok(FoldSplit {
        assignments,
        k,
        stratified: true,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub error: f64,
    /// Pooled exact-class recall over the positive (disease) classes.
    pub sensitivity: Option<f64>,
    /// Pooled recall over the remaining classes.
    pub specificity: Option<f64>,
    pub classwise_accuracy: Vec<Option<f64>>,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
}

/// Rates with an empty denominator are `None`, never zero.
pub fn compute_metrics(
    predictions: &[usize],
    labels: &[usize],
    n_classes: usize,
    positive: &[usize],
) -> Result<Metrics> {
    if predictions.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::Shape("no samples to score".into()));
    }
    let mut confusion = vec![vec![0usize; n_classes]; n_classes];
    for (&p, &l) in predictions.iter().zip(labels) {
        if p >= n_classes || l >= n_classes {
            return Err(Error::Shape(format!("class id outside 0..{n_classes}")));
        }
        confusion[l][p] += 1;
    }
    let correct: usize = (0..n_classes).map(|c| confusion[c][c]).sum();
    let rate = |classes: &mut dyn Iterator<Item = usize>| {
        let (hit, total) = classes.fold((0, 0), |(h, t), c| {
            (h + confusion[c][c], t + confusion[c].iter().sum::<usize>())
        });
        (total > 0).then(|| hit as f64 / total as f64)
    };
    Ok(Metrics {
        error: 1.0 - correct as f64 / labels.len() as f64,
        sensitivity: rate(&mut positive.iter().copied()),
        specificity: rate(&mut (0..n_classes).filter(|c| !positive.contains(c))),
        classwise_accuracy: (0..n_classes).map(|c| rate(&mut std::iter::once(c))).collect(),
        confusion,
    })
}

pub fn evaluate(model: &PrototypeModel, ds: &LabeledDataset, positive: &[usize]) -> Result<Metrics> {
    let pred = model.predict_dataset(ds)?;
    compute_metrics(&pred, ds.labels(), ds.n_classes(), positive)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenProfile {
    pub matrix: String,
    /// Descending, negatives from round-off clamped to zero.
    pub eigenvalues: Vec<f64>,
    pub effective_rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevanceProfile {
    pub matrix: String,
    pub values: Vec<f64>,
}

fn local_names(model: &PrototypeModel, count: usize, attachment: Attachment) -> Vec<String> {
    (0..count)
        .map(|i| match attachment {
            Attachment::ClassWise => format!(
                "psi[{}]",
                model.class_names.as_ref().and_then(|n| n.get(i)).cloned().unwrap_or_else(|| i.to_string())
            ),
            Attachment::PrototypeWise => format!("psi[w{i}]"),
        })
        .collect()
}

/// `(name, Λ)` for every adaptive matrix: `ΩᵀΩ`, `ΨᵀΨ` per local matrix and,
/// for the two-matrix form, `ΩᵀΩ` plus the `M×M` `ΨᶜᵀΨᶜ`.
pub fn relevance_matrices(model: &PrototypeModel) -> Vec<(String, DMatrix<f64>)> {
    let gram = |m: &DMatrix<f64>| m.transpose() * m;
    match &model.metric {
        Metric::Global(g) => vec![("omega".into(), gram(&g.omega))],
        Metric::Local(l) => local_names(model, l.psi.len(), l.attachment)
            .into_iter()
            .zip(l.psi.iter().map(gram))
            .collect(),
        Metric::TwoMatrix(t) => std::iter::once(("omega".to_string(), gram(&t.omega)))
            .chain(local_names(model, t.psi.len(), Attachment::ClassWise).into_iter().zip(t.psi.iter().map(gram)))
            .collect(),
    }
}

pub fn eigen_profile(name: &str, lambda: &DMatrix<f64>) -> EigenProfile {
    let mut ev: Vec<f64> = SymmetricEigen::new(lambda.clone())
        .eigenvalues
        .iter()
        .map(|&v| v.max(0.0))
        .collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    let trace: f64 = ev.iter().sum();
    let effective_rank = ev.iter().filter(|&&v| v > EFFECTIVE_RANK_THRESHOLD * trace).count();
    EigenProfile {
        matrix: name.to_string(),
        eigenvalues: ev,
        effective_rank,
    }
}

pub fn eigen_relevance(model: &PrototypeModel) -> Vec<EigenProfile> {
    relevance_matrices(model).iter().map(|(n, l)| eigen_profile(n, l)).collect()
}

/// Diagonal of each `Λ` in feature space. Two-matrix models report `ΩᵀΩ`
/// and, per class, the diagonal of `(ΨᶜΩ)ᵀ(ΨᶜΩ)` scaled to unit sum.
pub fn feature_relevances(model: &PrototypeModel) -> Vec<RelevanceProfile> {
    let diag = |m: &DMatrix<f64>| m.diagonal().iter().copied().collect::<Vec<f64>>();
    match &model.metric {
        Metric::TwoMatrix(t) => {
            let mut out = vec![RelevanceProfile {
                matrix: "omega".into(),
                values: diag(&(t.omega.transpose() * &t.omega)),
            }];
            for (name, psi) in local_names(model, t.psi.len(), Attachment::ClassWise).into_iter().zip(&t.psi) {
                let comp = psi * &t.omega;
                let mut values = diag(&(comp.transpose() * &comp));
                let s: f64 = values.iter().sum();
                if s > 0.0 {
                    values.iter_mut().for_each(|v| *v /= s);
                }
                out.push(RelevanceProfile { matrix: name, values });
            }
            out
        }
        _ => relevance_matrices(model)
            .into_iter()
            .map(|(matrix, l)| RelevanceProfile { matrix, values: diag(&l) })
            .collect(),
    }
}

/// One point of the hyperparameter grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub beta: f64,
    pub prototypes_per_class: usize,
    pub rank: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub variant: Variant,
    /// Learning rates, epochs, attachment and seed; grid fields override the rest.
    pub training: TrainingConfig,
    pub grid: Vec<GridPoint>,
    pub folds: usize,
    pub runs: usize,
    pub seed: u64,
    pub zscore: bool,
    pub oversample: Option<OversampleConfig>,
    pub positive_classes: Vec<usize>,
}

impl ExperimentSpec {
    pub fn new(name: impl Into<String>, variant: Variant, training: TrainingConfig) -> Self {
        let grid = vec![GridPoint {
            beta: training.beta,
            prototypes_per_class: training.prototypes_per_class,
            rank: training.rank,
        }];
        Self {
            name: name.into(),
            variant,
            training,
            grid,
            folds: 10,
            runs: 1,
            seed: 0,
            zscore: true,
            oversample: None,
            positive_classes: vec![1],
        }
    }

    /// Grid over `betas × prototypes_per_class`, sharing one rank.
    pub fn with_grid(mut self, betas: &[f64], protos: &[usize], rank: Option<usize>) -> Self {
        self.grid = protos
            .iter()
            .flat_map(|&p| {
                betas.iter().map(move |&beta| GridPoint {
                    beta,
                    prototypes_per_class: p,
                    rank,
                })
            })
            .collect();
        self
    }

    fn cell_config(&self, point: &GridPoint, run: usize, fold: usize) -> TrainingConfig {
        TrainingConfig {
            beta: point.beta,
            prototypes_per_class: point.prototypes_per_class,
            rank: point.rank,
            seed: mix_seed(self.training.seed, run, fold),
            ..self.training.clone()
        }
    }

    pub fn preprocessing(&self) -> Vec<String> {
        let mut steps = Vec::new();
        if self.zscore {
            steps.push("zscore fitted on training split".to_string());
        }
        if let Some(o) = &self.oversample {
            let name = match o.variant {
                OversampleVariant::Euclidean => "smote",
                OversampleVariant::Geodesic => "smote-g",
            };
            steps.push(format!("{name} (k={}) on training split, after zscore", o.k));
        }
        steps
    }
}

fn mix_seed(seed: u64, run: usize, fold: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add((run as u64) << 32)
        .wrapping_add(fold as u64)
}

/// Train/test pair for one fold after z-scoring (fit on train) and
/// oversampling of the training split. Returns the training split before
/// oversampling as well.
pub struct PreparedFold {
    pub train: LabeledDataset,
    pub train_original: LabeledDataset,
    pub test: LabeledDataset,
    pub zscore: Option<ZScoreParams>,
}

pub fn prepare_fold(
    ds: &LabeledDataset,
    split: &FoldSplit,
    fold: usize,
    spec: &ExperimentSpec,
    run: usize,
) -> Result<PreparedFold> {
    let mut train_set = ds.subset(&split.train_indices(fold));
    let mut test_set = ds.subset(&split.test_indices(fold));
    let params = spec.zscore.then(|| zscore_fit(&train_set));
    if let Some(p) = &params {
        train_set = zscore_apply(&train_set, p);
        test_set = zscore_apply(&test_set, p);
    }
    let train_original = train_set.clone();
    if let Some(o) = &spec.oversample {
        let cfg = OversampleConfig {
            seed: mix_seed(o.seed, run, fold),
            ..o.clone()
        };
        train_set = oversample(&train_set, &cfg)?;
    }
    Ok(PreparedFold {
        train: train_set,
        train_original,
        test: test_set,
        zscore: params,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub config: usize,
    pub run: usize,
    pub fold: usize,
    /// Scored on the training split without synthetic samples.
    pub train: Metrics,
    pub test: Metrics,
    pub holdout: Option<Metrics>,
    pub final_mean_mu: f64,
    pub eigen: Vec<EigenProfile>,
    pub relevances: Vec<RelevanceProfile>,
}

/// Mean and sample standard deviation; `std_within_runs` averages the
/// per-run standard deviation over folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub std_within_runs: Option<f64>,
    pub n: usize,
}

fn mean_std(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = (values.len() > 1)
        .then(|| (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
    (Some(mean), std)
}

impl Summary {
    /// `values` grouped by run, undefined entries skipped.
    pub fn of(by_run: &[Vec<Option<f64>>]) -> Self {
        let all: Vec<f64> = by_run.iter().flatten().flatten().copied().collect();
        let (mean, std) = mean_std(&all);
        let within: Vec<f64> = by_run
            .iter()
            .filter_map(|r| mean_std(&r.iter().flatten().copied().collect::<Vec<_>>()).1)
            .collect();
        Summary {
            mean,
            std,
            std_within_runs: mean_std(&within).0,
            n: all.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSummary {
    pub config: GridPoint,
    pub train_error: Summary,
    pub test_error: Summary,
    pub test_sensitivity: Summary,
    pub test_specificity: Summary,
    pub test_classwise_accuracy: Vec<Summary>,
    pub holdout_error: Option<Summary>,
    pub holdout_sensitivity: Option<Summary>,
    pub holdout_specificity: Option<Summary>,
    /// Mean diagonal relevance per matrix over all cells.
    pub mean_relevances: Vec<RelevanceProfile>,
    /// Median effective rank per matrix over all cells.
    pub median_effective_rank: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub samples: usize,
    pub features: Vec<String>,
    pub class_names: Vec<String>,
    pub class_counts: Vec<usize>,
    pub rows_with_missing: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CVReport {
    pub format_version: u32,
    pub spec: ExperimentSpec,
    pub dataset: DatasetInfo,
    pub preprocessing: Vec<String>,
    pub cells: Vec<CellResult>,
    pub summaries: Vec<ConfigSummary>,
    /// Lowest mean training error, ties broken by lower test-error std.
    pub best_config: usize,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn summarize(spec: &ExperimentSpec, point: &GridPoint, cells: &[&CellResult], n_classes: usize) -> ConfigSummary {
    let by_run = |f: &dyn Fn(&CellResult) -> Option<f64>| -> Summary {
        let groups: Vec<Vec<Option<f64>>> = (0..spec.runs)
            .map(|r| cells.iter().filter(|c| c.run == r).map(|c| f(c)).collect())
            .collect();
        Summary::of(&groups)
    };
    let has_holdout = cells.first().is_some_and(|c| c.holdout.is_some());
    let holdout = |f: fn(&Metrics) -> Option<f64>| {
        has_holdout.then(|| by_run(&|c| c.holdout.as_ref().and_then(f)))
    };

    let mut mean_relevances: Vec<RelevanceProfile> = cells[0].relevances.clone();
    for (k, prof) in mean_relevances.iter_mut().enumerate() {
        for (j, v) in prof.values.iter_mut().enumerate() {
            *v = cells.iter().map(|c| c.relevances[k].values[j]).sum::<f64>() / cells.len() as f64;
        }
    }
    let median_effective_rank = cells[0]
        .eigen
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let ranks = cells.iter().map(|c| c.eigen[k].effective_rank as f64).collect();
            (e.matrix.clone(), median(ranks))
        })
        .collect();

    ConfigSummary {
        config: point.clone(),
        train_error: by_run(&|c| Some(c.train.error)),
        test_error: by_run(&|c| Some(c.test.error)),
        test_sensitivity: by_run(&|c| c.test.sensitivity),
        test_specificity: by_run(&|c| c.test.specificity),
        test_classwise_accuracy: (0..n_classes)
            .map(|k| by_run(&|c| c.test.classwise_accuracy[k]))
            .collect(),
        holdout_error: holdout(|m| Some(m.error)),
        holdout_sensitivity: holdout(|m| m.sensitivity),
        holdout_specificity: holdout(|m| m.specificity),
        mean_relevances,
        median_effective_rank,
    }
}

/// Runs every `config × run × fold` cell. Cells are independent and trained
/// in parallel; results keep that nesting order.
pub fn run_experiment(
    ds: &LabeledDataset,
    spec: &ExperimentSpec,
    holdout: Option<&LabeledDataset>,
) -> Result<CVReport> {
    if spec.grid.is_empty() || spec.runs == 0 {
        return Err(Error::Config("experiment needs at least one grid point and one run".into()));
    }
    for point in &spec.grid {
        spec.cell_config(point, 0, 0).validate(ds.dim())?;
    }
    let splits: Vec<FoldSplit> = (0..spec.runs)
        .map(|r| stratified_kfold(ds, spec.folds, spec.seed.wrapping_add(r as u64)))
        .collect::<Result<_>>()?;

    let jobs: Vec<(usize, usize, usize)> = (0..spec.grid.len())
        .flat_map(|c| (0..spec.runs).flat_map(move |r| (0..spec.folds).map(move |f| (c, r, f))))
        .collect();
    let cells: Vec<CellResult> = jobs
        .par_iter()
        .map(|&(c, r, f)| {
            run_cell(ds, spec, &splits[r], c, r, f, holdout).map_err(|e| Error::Cell {
                config: c,
                run: r,
                fold: f,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;

    let summaries: Vec<ConfigSummary> = spec
        .grid
        .iter()
        .enumerate()
        .map(|(c, point)| {
            let mine: Vec<&CellResult> = cells.iter().filter(|x| x.config == c).collect();
            summarize(spec, point, &mine, ds.n_classes())
        })
        .collect();
    let key = |s: &ConfigSummary| (s.train_error.mean.unwrap_or(f64::INFINITY), s.test_error.std.unwrap_or(0.0));
    let best_config = (0..summaries.len())
        .min_by(|&a, &b| {
            let (ka, kb) = (key(&summaries[a]), key(&summaries[b]));
            ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1)).then(a.cmp(&b))
        })
        .unwrap_or(0);

    Ok(CVReport {
        format_version: 1,
        spec: spec.clone(),
        dataset: DatasetInfo {
            samples: ds.len(),
            features: ds.feature_names.clone(),
            class_names: ds.class_names.clone(),
            class_counts: ds.class_counts(),
            rows_with_missing: ds.rows_with_missing(),
        },
        preprocessing: spec.preprocessing(),
        cells,
        summaries,
        best_config,
    })
}

fn run_cell(
    ds: &LabeledDataset,
    spec: &ExperimentSpec,
    split: &FoldSplit,
    config: usize,
    run: usize,
    fold: usize,
    holdout: Option<&LabeledDataset>,
) -> Result<CellResult> {
    let prepared = prepare_fold(ds, split, fold, spec, run)?;
    let cfg = spec.cell_config(&spec.grid[config], run, fold);
    let outcome = train(&prepared.train, &cfg, spec.variant)?;
    let model = &outcome.model;
    let pos = &spec.positive_classes;
    let holdout = holdout
        .map(|h| {
            let h = match &prepared.zscore {
                Some(p) => zscore_apply(h, p),
                None => h.clone(),
            };
            evaluate(model, &h, pos)
        })
        .transpose()?;
    Ok(CellResult {
        config,
        run,
        fold,
        train: evaluate(model, &prepared.train_original, pos)?,
        test: evaluate(model, &prepared.test, pos)?,
        holdout,
        final_mean_mu: outcome.trace.last().map_or(f64::NAN, |t| t.mean_mu),
        eigen: eigen_relevance(model),
        relevances: feature_relevances(model),
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

impl CVReport {
    pub fn best(&self) -> &ConfigSummary {
        &self.summaries[self.best_config]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::format(format!("report: {e}")))
    }

    /// One row per `config × run × fold`; undefined rates are written as `NA`.
    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let classes = &self.dataset.class_names;
        let has_holdout = self.cells.first().is_some_and(|c| c.holdout.is_some());
        let mut header: Vec<String> = [
            "config", "variant", "beta", "prototypes_per_class", "rank", "run", "fold",
            "train_error", "test_error", "test_sensitivity", "test_specificity",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        if has_holdout {
            header.extend(["holdout_error", "holdout_sensitivity", "holdout_specificity"].map(String::from));
        }
        header.extend(classes.iter().map(|c| format!("test_accuracy_{c}")));
        header.push("final_mean_mu".into());
        let to_err = |e: csv::Error| Error::format(format!("writing report csv: {e}"));
        w.write_record(&header).map_err(to_err)?;
        for c in &self.cells {
            let p = &self.spec.grid[c.config];
            let mut row = vec![
                c.config.to_string(),
                self.spec.variant.code().to_string(),
                p.beta.to_string(),
                p.prototypes_per_class.to_string(),
                p.rank.map_or_else(|| "full".to_string(), |r| r.to_string()),
                c.run.to_string(),
                c.fold.to_string(),
                c.train.error.to_string(),
                c.test.error.to_string(),
                fmt_opt(c.test.sensitivity),
                fmt_opt(c.test.specificity),
            ];
            if let Some(h) = &c.holdout {
                row.extend([h.error.to_string(), fmt_opt(h.sensitivity), fmt_opt(h.specificity)]);
            }
            row.extend(c.test.classwise_accuracy.iter().map(|&a| fmt_opt(a)));
            row.push(c.final_mean_mu.to_string());
            w.write_record(&row).map_err(to_err)?;
        }
        w.flush().map_err(|e| Error::format(e.to_string()))?;
        Ok(())
    }

    /// Writes `<prefix>.json` and `<prefix>.csv`.
    pub fn save(&self, prefix: impl AsRef<Path>) -> Result<()> {
        let prefix = prefix.as_ref().to_string_lossy().to_string();
        let json = format!("{prefix}.json");
        std::fs::write(&json, self.to_json()).map_err(|e| Error::io(&json, e))?;
        let csv_path = format!("{prefix}.csv");
        let f = std::fs::File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::generate_football;
    use crate::geometry::GlobalMatrix;
    use proptest::prelude::*;

    fn toy(counts: &[usize]) -> LabeledDataset {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (c, &n) in counts.iter().enumerate() {
            for i in 0..n {
                rows.push(vec![c as f64 + 0.01 * i as f64, 1.0 - c as f64]);
                labels.push(c);
            }
        }
        let names = (0..counts.len()).map(|c| format!("c{c}")).collect();
        LabeledDataset::from_dense(&rows, labels, vec!["a".into(), "b".into()], names).unwrap()
    }

    #[test]
    fn kfold_examples() {
        let ds = toy(&[10, 10]);
        let s = stratified_kfold(&ds, 5, 3).unwrap();
        for f in 0..5 {
            let t = s.test_indices(f);
            assert_eq!(t.iter().filter(|&&i| ds.label(i) == 0).count(), 2);
            assert_eq!(t.iter().filter(|&&i| ds.label(i) == 1).count(), 2);
        }
        assert_eq!(s, stratified_kfold(&ds, 5, 3).unwrap());
        assert_ne!(s, stratified_kfold(&ds, 5, 4).unwrap());

        let hd = toy(&[164, 55, 36, 35, 13]);
        let s = stratified_kfold(&hd, 5, 0).unwrap();
        let mut small: Vec<usize> = (0..5)
            .map(|f| s.test_indices(f).iter().filter(|&&i| hd.label(i) == 4).count())
            .collect();
        small.sort();
        assert_eq!(small, vec![2, 2, 3, 3, 3]);

        match stratified_kfold(&hd, 25, 0) {
            Err(Error::ClassTooSmall { class, count: 13, k: 25 }) => assert_eq!(class, "c4"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn metrics_examples() {
        let m = compute_metrics(&[0, 1, 1, 0], &[0, 1, 1, 0], 2, &[1]).unwrap();
        assert_eq!(m.error, 0.0);
        assert_eq!((m.sensitivity, m.specificity), (Some(1.0), Some(1.0)));

        let m = compute_metrics(&[0, 0, 0, 0], &[0, 1, 1, 0], 2, &[1]).unwrap();
        assert_eq!((m.sensitivity, m.specificity), (Some(0.0), Some(1.0)));
        assert_eq!(m.error, 0.5);

        // rows: true class; by hand, recalls 2/3, 1/2, 1/1
        let labels = [0, 0, 0, 1, 1, 2];
        let preds = [0, 0, 2, 1, 0, 2];
        let m = compute_metrics(&preds, &labels, 3, &[1, 2]).unwrap();
        assert_eq!(m.confusion, vec![vec![2, 0, 1], vec![1, 1, 0], vec![0, 0, 1]]);
        assert_eq!(m.classwise_accuracy, vec![Some(2.0 / 3.0), Some(0.5), Some(1.0)]);
        assert_eq!(m.specificity, Some(2.0 / 3.0));
        assert_eq!(m.sensitivity, Some(2.0 / 3.0));
        assert!((m.error - 2.0 / 6.0).abs() < 1e-15);

        let m = compute_metrics(&[0, 0], &[0, 0], 2, &[1]).unwrap();
        assert_eq!(m.sensitivity, None);
        assert_eq!(m.classwise_accuracy[1], None);
        assert!(compute_metrics(&[0], &[0, 1], 2, &[1]).is_err());
    }

    fn model_with(omega: DMatrix<f64>) -> PrototypeModel {
        let d = omega.ncols();
        PrototypeModel {
            variant: Variant::AngleGlobal,
            prototypes: vec![vec![1.0; d], vec![-1.0; d]],
            proto_labels: vec![0, 1],
            metric: Metric::Global(GlobalMatrix::new(omega)),
            angle: Some(crate::geometry::AngleParams::new(1.0).unwrap()),
            feature_names: None,
            class_names: None,
            training_meta: None,
        }
    }

    #[test]
    fn eigen_and_relevance_examples() {
        let d = 6;
        let m = model_with(DMatrix::identity(d, d) / (d as f64).sqrt());
        let rel = feature_relevances(&m);
        for v in &rel[0].values {
            assert!((v - 1.0 / d as f64).abs() < 1e-12);
        }
        let mut g = GlobalMatrix::new(DMatrix::from_fn(3, d, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0));
        g.normalize();
        let m = model_with(g.omega);
        let e = &eigen_relevance(&m)[0];
        assert!(e.eigenvalues.iter().skip(3).all(|&v| v < 1e-10));
        assert!((e.eigenvalues.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        assert!(e.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        assert!(e.effective_rank <= 3);
        assert!((feature_relevances(&m)[0].values.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn relevances_are_permutation_covariant(
            entries in prop::collection::vec(-2.0f64..2.0, 12),
            shift in 0usize..4,
        ) {
            let omega = DMatrix::from_row_slice(3, 4, &entries);
            prop_assume!(omega.norm() > 1e-3);
            let mut g = GlobalMatrix::new(omega);
            g.normalize();
            let order: Vec<usize> = (0..4).map(|j| (j + shift) % 4).collect();
            let permuted = DMatrix::from_fn(3, 4, |i, j| g.omega[(i, order[j])]);
            let a = feature_relevances(&model_with(g.omega.clone()));
            let b = feature_relevances(&model_with(permuted.clone()));
            for j in 0..4 {
                prop_assert!((b[0].values[j] - a[0].values[order[j]]).abs() < 1e-12);
            }
            let ea = eigen_relevance(&model_with(g.omega));
            let eb = eigen_relevance(&model_with(permuted));
            for (x, y) in ea[0].eigenvalues.iter().zip(&eb[0].eigenvalues) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }

        #[test]
        fn summary_matches_recomputation(vals in prop::collection::vec(0.0f64..1.0, 6)) {
            let by_run = vec![vals[..3].iter().map(|&v| Some(v)).collect(), vals[3..].iter().map(|&v| Some(v)).collect()];
            let s = Summary::of(&by_run);
            let mean = vals.iter().sum::<f64>() / 6.0;
            prop_assert_eq!(s.mean, Some(mean));
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 5.0;
            prop_assert!((s.std.unwrap() - var.sqrt()).abs() < 1e-15);
            prop_assert_eq!(s.n, 6);
        }
    }

    fn quick_spec() -> ExperimentSpec {
        let training = TrainingConfig {
            epochs: 5,
            beta: 5.0,
            ..TrainingConfig::default()
        };
        let mut spec = ExperimentSpec::new("quick", Variant::AngleGlobal, training).with_grid(&[1.0, 5.0], &[1], None);
        spec.folds = 3;
        spec.runs = 2;
        spec
    }

    #[test]
    fn no_leakage_into_test_split() {
        let ds = toy(&[12, 5]);
        let mut spec = quick_spec();
        spec.oversample = Some(OversampleConfig::default());
        let split = stratified_kfold(&ds, 3, 0).unwrap();
        let p = prepare_fold(&ds, &split, 1, &spec, 0).unwrap();
        let raw_train = ds.subset(&split.train_indices(1));
        let raw_test = ds.subset(&split.test_indices(1));
        let expect = zscore_apply(&raw_test, &zscore_fit(&raw_train));
        assert_eq!(p.test.len(), raw_test.len());
        for i in 0..p.test.len() {
            assert_eq!(p.test.row(i), expect.row(i));
        }
        assert_eq!(p.train.class_counts(), vec![8, 8]);
        assert_eq!(p.train_original.len(), raw_train.len());
    }

    #[test]
    fn experiment_aggregates_cells() {
        let ds = generate_football(120, 5);
        let spec = quick_spec();
        let holdout = generate_football(50, 6);
        let rep = run_experiment(&ds, &spec, Some(&holdout)).unwrap();
        assert_eq!(rep.cells.len(), 2 * 2 * 3);
        for (c, s) in rep.summaries.iter().enumerate() {
            let errs: Vec<f64> = rep.cells.iter().filter(|x| x.config == c).map(|x| x.test.error).collect();
            assert_eq!(s.test_error.n, 6);
            assert_eq!(s.test_error.mean, Some(errs.iter().sum::<f64>() / 6.0));
            assert!(s.holdout_error.is_some());
        }
        let best = rep.best_config;
        for s in &rep.summaries {
            assert!(rep.summaries[best].train_error.mean <= s.train_error.mean);
        }
        let again = run_experiment(&ds, &spec, Some(&holdout)).unwrap();
        assert_eq!(rep.to_json(), again.to_json());
        assert_eq!(CVReport::from_json(&rep.to_json()).unwrap(), rep);

        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 13);
        assert!(text.lines().next().unwrap().contains("holdout_error"));
    }

    #[test]
    fn too_many_folds_fails_before_training() {
        let ds = toy(&[20, 4]);
        let mut spec = quick_spec();
        spec.folds = 5;
        spec.training.epochs = 1_000_000;
        assert!(matches!(run_experiment(&ds, &spec, None), Err(Error::ClassTooSmall { .. })));
    }
}
