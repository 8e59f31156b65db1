//! Command-line front end. The `alvq` binary parses [`Cli`] and calls [`run`].

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::data::{self, ClassMode, CsvSchema, LabeledDataset, MissingPolicy};
use crate::error::{Error, Result};
use crate::evaluation::{self, ExperimentSpec, GridPoint};
use crate::geometry::{self, Attachment, SampleView};
use crate::models::{self, Metric, PrototypeModel, TrainingConfig, Variant};
use crate::resampling::{OversampleConfig, OversampleVariant};

#[derive(Debug, Parser)]
#[command(name = "alvq", version, about = "Angle-based LVQ: training, cross-validation, inspection and sphere export")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset as CSV.
    Generate(GenerateArgs),
    /// Train one model on a whole dataset.
    Train(TrainArgs),
    /// Stratified cross-validation over a hyperparameter grid.
    Crossval(CrossvalArgs),
    /// Export relevances, prototypes and eigenvalues of a model.
    Inspect(InspectArgs),
    /// Export the spherical classification map of a rank-2/3 angle model.
    ExportSphere(SphereArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SyntheticDataset {
    Football,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum, default_value = "football")]
    pub dataset: SyntheticDataset,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DataFormat {
    /// `cleveland` for `*.data` files, `csv` otherwise.
    Auto,
    Csv,
    Cleveland,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    pub format: DataFormat,
    /// Label column of CSV input.
    #[arg(long, default_value = "label")]
    pub label_column: String,
    /// Cleveland: merge classes 1-4 into one disease class (default).
    #[arg(long, conflicts_with = "five_class")]
    pub binary: bool,
    /// Cleveland: keep the five original classes.
    #[arg(long)]
    pub five_class: bool,
    /// Cleveland: write -9 into missing cells instead of masking them.
    #[arg(long)]
    pub keep_minus_nine: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AttachmentArg {
    Class,
    Prototype,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, value_parser = parse_variant)]
    pub variant: Variant,
    /// Comma-separated list allowed for cross-validation grids.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub beta: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub protos_per_class: Vec<usize>,
    /// Rows of the projection matrices; full rank when omitted.
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long, default_value_t = 300)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.001)]
    pub lr_matrix: f64,
    /// Keep learning rates constant instead of decaying with 1/(1+epoch/epochs).
    #[arg(long)]
    pub constant_lr: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "class")]
    pub attachment: AttachmentArg,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OversampleArg {
    None,
    Smote,
    Smoteg,
}

#[derive(Debug, Args)]
pub struct CrossvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long, default_value_t = 1)]
    pub runs: usize,
    #[arg(long, value_enum, default_value = "none")]
    pub oversample: OversampleArg,
    #[arg(long, default_value_t = 3)]
    pub smote_k: usize,
    /// Skip the per-fold z-score transform.
    #[arg(long)]
    pub no_zscore: bool,
    /// Extra test set scored by every fold model.
    #[arg(long)]
    pub holdout: Option<PathBuf>,
    /// Writes `<out>.json` and `<out>.csv`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub out_prefix: PathBuf,
}

#[derive(Debug, Args)]
pub struct SphereArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// The grid holds resolution² directions.
    #[arg(long, default_value_t = 40)]
    pub resolution: usize,
    /// Optional CSV whose samples are projected alongside the grid.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, default_value = "label")]
    pub label_column: String,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_variant(s: &str) -> std::result::Result<Variant, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => cmd_generate(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Crossval(a) => cmd_crossval(&a),
        Command::Inspect(a) => cmd_inspect(&a),
        Command::ExportSphere(a) => cmd_export_sphere(&a),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::format(format!("{}: {e}", path.display()))
}

/// Loads CSV or Cleveland input according to `args`.
pub fn load_data(args: &DataArgs) -> Result<LabeledDataset> {
    let cleveland = match args.format {
        DataFormat::Cleveland => true,
        DataFormat::Csv => false,
        DataFormat::Auto => args.data.extension().is_some_and(|e| e == "data"),
    };
    if !cleveland {
        return data::load_csv(
            &args.data,
            &CsvSchema {
                label_column: args.label_column.clone(),
                classes: None,
            },
        );
    }
    let text = std::fs::read_to_string(&args.data).map_err(|e| Error::io(&args.data, e))?;
    let raw = data::parse_cleveland(&text)?;
    let mode = if args.five_class { ClassMode::FiveClass } else { ClassMode::Binary };
    let policy = if args.keep_minus_nine {
        MissingPolicy::KeepMinusNine
    } else {
        MissingPolicy::ToMissing
    };
    Ok(data::relabel(&raw, mode, policy))
}

fn class_balance(ds: &LabeledDataset) -> String {
    ds.class_counts()
        .iter()
        .zip(&ds.class_names)
        .map(|(n, c)| format!("{c}: {n} ({:.1}%)", 100.0 * *n as f64 / ds.len() as f64))
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    if args.n == 0 {
        return Err(Error::Config("--n must be at least 1".into()));
    }
    let ds = match args.dataset {
        SyntheticDataset::Football => data::generate_football(args.n, args.seed),
    };
    data::save_csv(&ds, &args.out)?;
    println!("wrote {} samples to {}; {}", ds.len(), args.out.display(), class_balance(&ds));
    Ok(())
}

fn training_config(m: &ModelArgs) -> TrainingConfig {
    TrainingConfig {
        prototypes_per_class: m.protos_per_class[0],
        epochs: m.epochs,
        lr_prototype: m.lr,
        lr_matrix: m.lr_matrix,
        lr_decay: if m.constant_lr {
            models::LrSchedule::Constant
        } else {
            models::LrSchedule::InverseEpoch
        },
        beta: m.beta[0],
        rank: m.rank,
        seed: m.seed,
        normalize_matrices_every: 1,
        attachment: match m.attachment {
            AttachmentArg::Class => Attachment::ClassWise,
            AttachmentArg::Prototype => Attachment::PrototypeWise,
        },
    }
}

/// `model.json` → `model.trace.csv`.
pub fn trace_path(model_path: &Path) -> PathBuf {
    model_path.with_extension("trace.csv")
}

pub fn cmd_train(args: &TrainArgs) -> Result<()> {
    if args.model.beta.len() != 1 || args.model.protos_per_class.len() != 1 {
        return Err(Error::Config("train takes a single --beta and --protos-per-class".into()));
    }
    let ds = load_data(&args.data)?;
    let cfg = training_config(&args.model);
    cfg.validate(ds.dim())?;
    let out = models::train(&ds, &cfg, args.model.variant)?;
    std::fs::write(&args.out, out.model.to_json()).map_err(|e| Error::io(&args.out, e))?;

    let tpath = trace_path(&args.out);
    let mut w = csv::Writer::from_writer(create(&tpath)?);
    let err = csv_err(&tpath);
    w.write_record(["epoch", "mean_mu", "error"]).map_err(&err)?;
    for t in &out.trace {
        w.write_record([t.epoch.to_string(), t.mean_mu.to_string(), t.error.to_string()])
            .map_err(&err)?;
    }
    w.flush().map_err(|e| Error::io(&tpath, e))?;

    let train_error = models::error_rate(&out.model, &ds)?;
    println!(
        "{} trained on {} samples: training error {:.4}; model {}, trace {}",
        args.model.variant.display_name(),
        ds.len(),
        train_error,
        args.out.display(),
        tpath.display()
    );
    Ok(())
}

pub fn cmd_crossval(args: &CrossvalArgs) -> Result<()> {
    let ds = load_data(&args.data)?;
    let holdout = args
        .holdout
        .as_ref()
        .map(|p| {
            load_data(&DataArgs {
                data: p.clone(),
                format: args.data.format,
                label_column: args.data.label_column.clone(),
                binary: args.data.binary,
                five_class: args.data.five_class,
                keep_minus_nine: args.data.keep_minus_nine,
            })
        })
        .transpose()?;
    let m = &args.model;
    let mut spec = ExperimentSpec::new(
        args.data.data.file_stem().map_or("experiment".into(), |s| s.to_string_lossy().to_string()),
        m.variant,
        training_config(m),
    );
    spec.grid = m
        .protos_per_class
        .iter()
        .flat_map(|&p| {
            m.beta.iter().map(move |&beta| GridPoint {
                beta,
                prototypes_per_class: p,
                rank: m.rank,
            })
        })
        .collect();
    spec.folds = args.folds;
    spec.runs = args.runs;
    spec.seed = m.seed;
    spec.zscore = !args.no_zscore;
    spec.positive_classes = (1..ds.n_classes()).collect();
    spec.oversample = match args.oversample {
        OversampleArg::None => None,
        v => Some(OversampleConfig {
            k: args.smote_k,
            target: None,
            seed: m.seed,
            variant: if v == OversampleArg::Smote {
                OversampleVariant::Euclidean
            } else {
                OversampleVariant::Geodesic
            },
        }),
    };
    let report = evaluation::run_experiment(&ds, &spec, holdout.as_ref())?;
    report.save(&args.out)?;

    let f = |v: Option<f64>| v.map_or_else(|| "NA".into(), |x| format!("{x:.3}"));
    println!("{:>6} {:>5} {:>5} {:>15} {:>15} {:>15} {:>15}", "beta", "ppc", "rank", "train", "test", "sensitivity", "specificity");
    for (i, s) in report.summaries.iter().enumerate() {
        println!(
            "{:>6} {:>5} {:>5} {:>15} {:>15} {:>15} {:>15}{}",
            s.config.beta,
            s.config.prototypes_per_class,
            s.config.rank.map_or("full".into(), |r| r.to_string()),
            format!("{} ({})", f(s.train_error.mean), f(s.train_error.std)),
            format!("{} ({})", f(s.test_error.mean), f(s.test_error.std)),
            format!("{} ({})", f(s.test_sensitivity.mean), f(s.test_sensitivity.std)),
            format!("{} ({})", f(s.test_specificity.mean), f(s.test_specificity.std)),
            if i == report.best_config { "  *" } else { "" }
        );
    }
    let out = args.out.display();
    println!("report written to {out}.json and {out}.csv");
    Ok(())
}

pub fn load_model(path: &Path) -> Result<PrototypeModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    PrototypeModel::from_json(&text)
}

fn feature_names(model: &PrototypeModel) -> Vec<String> {
    model
        .feature_names
        .clone()
        .unwrap_or_else(|| (0..model.dim()).map(|j| format!("x{}", j + 1)).collect())
}

fn class_name(model: &PrototypeModel, c: usize) -> String {
    model
        .class_names
        .as_ref()
        .and_then(|n| n.get(c).cloned())
        .unwrap_or_else(|| c.to_string())
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn cmd_inspect(args: &InspectArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let names = feature_names(&model);

    let path = with_suffix(&args.out_prefix, "_relevances.csv");
    let mut w = csv::Writer::from_writer(create(&path)?);
    let err = csv_err(&path);
    let profiles = evaluation::feature_relevances(&model);
    let mut header = vec!["feature".to_string()];
    header.extend(profiles.iter().map(|p| p.matrix.clone()));
    w.write_record(&header).map_err(&err)?;
    for (j, name) in names.iter().enumerate() {
        let mut row = vec![name.clone()];
        row.extend(profiles.iter().map(|p| p.values[j].to_string()));
        w.write_record(&row).map_err(&err)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = with_suffix(&args.out_prefix, "_prototypes.csv");
    let mut w = csv::Writer::from_writer(create(&path)?);
    let err = csv_err(&path);
    let mut header = vec!["prototype".to_string(), "label".to_string()];
    header.extend(names.iter().cloned());
    w.write_record(&header).map_err(&err)?;
    for (k, p) in model.prototypes.iter().enumerate() {
        let mut row = vec![k.to_string(), class_name(&model, model.proto_labels[k])];
        row.extend(p.iter().map(|v| v.to_string()));
        w.write_record(&row).map_err(&err)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = with_suffix(&args.out_prefix, "_eigen.csv");
    let mut w = csv::Writer::from_writer(create(&path)?);
    let err = csv_err(&path);
    w.write_record(["matrix", "index", "eigenvalue", "effective_rank"]).map_err(&err)?;
    let eigen = evaluation::eigen_relevance(&model);
    for e in &eigen {
        for (i, v) in e.eigenvalues.iter().enumerate() {
            w.write_record([e.matrix.clone(), i.to_string(), v.to_string(), e.effective_rank.to_string()])
                .map_err(&err)?;
        }
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    for e in &eigen {
        println!("{}: effective rank {} of {}", e.matrix, e.effective_rank, e.eigenvalues.len());
    }
    println!("wrote {}_{{relevances,prototypes,eigen}}.csv", args.out_prefix.display());
    Ok(())
}

/// Plot-ready classification of the unit sphere (or circle) in the reduced space.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereExport {
    pub dim: usize,
    pub grid: Vec<(Vec<f64>, usize)>,
    pub prototypes: Vec<(Vec<f64>, usize)>,
    /// Projected samples with their label and whether the model gets them right.
    pub samples: Vec<(Vec<f64>, usize, bool)>,
}

/// `n` quasi-uniform directions: a Fibonacci lattice on S² or evenly spaced angles on S¹.
pub fn sphere_directions(dim: usize, n: usize) -> Vec<Vec<f64>> {
    match dim {
        2 => (0..n)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        _ => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..n)
                .map(|i| {
                    let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
                    let r = (1.0 - z * z).max(0.0).sqrt();
                    let phi = golden * i as f64;
                    vec![r * phi.cos(), r * phi.sin(), z]
                })
                .collect()
        }
    }
}

fn unit(v: Vec<f64>) -> Result<Vec<f64>> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n < geometry::DEGENERACY_EPS {
        return Err(Error::DegenerateVector { norm: n });
    }
    Ok(v.into_iter().map(|x| x / n).collect())
}

/// Reduced-space view of an angle model with a shared projection.
pub struct SphereMap<'a> {
    model: &'a PrototypeModel,
    omega: &'a nalgebra::DMatrix<f64>,
    psi: Option<&'a [nalgebra::DMatrix<f64>]>,
    protos: Vec<Vec<f64>>,
}

impl<'a> SphereMap<'a> {
    pub fn new(model: &'a PrototypeModel) -> Result<Self> {
        if !model.variant.is_angle() {
            return Err(Error::Config("sphere export needs an angle model (ag or a2m)".into()));
        }
        let (omega, psi) = match &model.metric {
            Metric::Global(g) => (&g.omega, None),
            Metric::TwoMatrix(t) => (&t.omega, Some(t.psi.as_slice())),
            Metric::Local(_) => {
                return Err(Error::Config("local models have no shared projection to export".into()))
            }
        };
        let rank = omega.nrows();
        if !(2..=3).contains(&rank) {
            return Err(Error::RankUnsupported { rank });
        }
        let protos = model
            .prototypes
            .iter()
            .map(|w| unit(geometry::project(omega, SampleView::full(w))))
            .collect::<Result<_>>()?;
        Ok(Self { model, omega, psi, protos })
    }

    pub fn dim(&self) -> usize {
        self.omega.nrows()
    }

    pub fn prototypes(&self) -> &[Vec<f64>] {
        &self.protos
    }

    /// Class of the prototype with the largest reduced-space cosine to `s`.
    pub fn classify(&self, s: &[f64]) -> Result<usize> {
        let mut best = (f64::NEG_INFINITY, 0);
        for (k, p) in self.protos.iter().enumerate() {
            let c = self.model.proto_labels[k];
            let b = geometry::reduced_cosine(self.psi.map(|ps| &ps[c]), s, p)?;
            if b > best.0 {
                best = (b, k);
            }
        }
        Ok(self.model.proto_labels[best.1])
    }

    pub fn project(&self, x: SampleView) -> Result<Vec<f64>> {
        unit(geometry::project(self.omega, x))
    }
}

pub fn sphere_export(model: &PrototypeModel, resolution: usize, data: Option<&LabeledDataset>) -> Result<SphereExport> {
    if resolution == 0 {
        return Err(Error::Config("--resolution must be positive".into()));
    }
    let map = SphereMap::new(model)?;
    let grid = sphere_directions(map.dim(), resolution * resolution)
        .into_iter()
        .map(|s| {
            let c = map.classify(&s)?;
            Ok((s, c))
        })
        .collect::<Result<_>>()?;
    let prototypes = map.prototypes().iter().cloned().zip(model.proto_labels.iter().copied()).collect();
    let samples = match data {
        None => Vec::new(),
        Some(ds) => (0..ds.len())
            .map(|i| {
                let x = ds.sample(i);
                Ok((map.project(x)?, ds.label(i), model.predict(x)? == ds.label(i)))
            })
            .collect::<Result<_>>()?,
    };
    Ok(SphereExport {
        dim: map.dim(),
        grid,
        prototypes,
        samples,
    })
}

impl SphereExport {
    /// Columns `kind,x,y[,z],label,correct`; `correct` is empty except for samples.
    pub fn write_csv(&self, writer: impl Write, class_names: &[String]) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let to_err = |e: csv::Error| Error::format(format!("sphere csv: {e}"));
        let mut header = vec!["kind", "x", "y"];
        if self.dim == 3 {
            header.push("z");
        }
        header.extend(["label", "correct"]);
        w.write_record(&header).map_err(to_err)?;
        let name = |c: usize| class_names.get(c).cloned().unwrap_or_else(|| c.to_string());
        let rows = self
            .grid
            .iter()
            .map(|(v, c)| ("grid", v, *c, None))
            .chain(self.prototypes.iter().map(|(v, c)| ("prototype", v, *c, None)))
            .chain(self.samples.iter().map(|(v, c, ok)| ("sample", v, *c, Some(*ok))));
        for (kind, v, c, ok) in rows {
            let mut rec = vec![kind.to_string()];
            rec.extend(v.iter().map(|x| x.to_string()));
            rec.push(name(c));
            rec.push(ok.map_or_else(String::new, |b| b.to_string()));
            w.write_record(&rec).map_err(to_err)?;
        }
        w.flush().map_err(|e| Error::format(e.to_string()))?;
        Ok(())
    }
}

pub fn cmd_export_sphere(args: &SphereArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let data = args
        .data
        .as_ref()
        .map(|p| {
            data::load_csv(
                p,
                &CsvSchema {
                    label_column: args.label_column.clone(),
                    classes: model.class_names.clone(),
                },
            )
        })
        .transpose()?;
    let export = sphere_export(&model, args.resolution, data.as_ref())?;
    let names = model.class_names.clone().unwrap_or_default();
    export.write_csv(create(&args.out)?, &names)?;
    let mut counts = vec![0usize; model.n_classes()];
    for (_, c) in &export.grid {
        counts[*c] += 1;
    }
    println!(
        "wrote {} grid directions on S{} to {}; grid share per class: {:?}",
        export.grid.len(),
        export.dim - 1,
        args.out.display(),
        counts
    );
    Ok(())
}
