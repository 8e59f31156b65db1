use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no dimension of the sample is observed")]
    EmptyMask,

    #[error("vector norm {norm:e} is below the degeneracy threshold")]
    DegenerateVector { norm: f64 },

    #[error("Euclidean dissimilarities do not support missing values")]
    MissingNotSupported,

    #[error("d_J + d_K is zero; sample coincides with both prototypes")]
    ZeroDenominator,

    #[error("class {class} has no samples")]
    EmptyClass { class: String },

    #[error("non-finite parameter after update at epoch {epoch}; learning rate too large?")]
    NonFinite { epoch: usize },

    #[error("class {class} needs at least 2 samples to oversample, found {count}")]
    TooFewSamples { class: String, count: usize },

    #[error("class {class} has {count} samples, fewer than the {k} folds requested")]
    ClassTooSmall {
        class: String,
        count: usize,
        k: usize,
    },

    #[error("sphere export needs rank 2 or 3, model has rank {rank}")]
    RankUnsupported { rank: usize },

    #[error("{0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("config {config}, run {run}, fold {fold}: {source}")]
    Cell {
        config: usize,
        run: usize,
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Short machine-readable code printed by the command-line front end.
    pub fn code(&self) -> &'static str {
        match self {
            Error::EmptyMask => "EmptyMask",
            Error::DegenerateVector { .. } => "DegenerateVector",
            Error::MissingNotSupported => "MissingNotSupported",
            Error::ZeroDenominator => "ZeroDenominator",
            Error::EmptyClass { .. } => "EmptyClass",
            Error::NonFinite { .. } => "NonFinite",
            Error::TooFewSamples { .. } => "TooFewSamples",
            Error::ClassTooSmall { .. } => "ClassTooSmall",
            Error::RankUnsupported { .. } => "RankUnsupported",
            Error::Shape(_) => "ShapeMismatch",
            Error::Config(_) => "ConfigError",
            Error::Format(_) => "FormatError",
            Error::Io { .. } => "IoError",
            Error::Cell { source, .. } => source.code(),
        }
    }

    /// Process exit status: 2 usage, 3 data, 4 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::RankUnsupported { .. } => 2,
            Error::EmptyMask
            | Error::MissingNotSupported
            | Error::EmptyClass { .. }
            | Error::TooFewSamples { .. }
            | Error::ClassTooSmall { .. }
            | Error::Shape(_)
            | Error::Format(_)
            | Error::Io { .. } => 3,
            Error::DegenerateVector { .. } | Error::ZeroDenominator | Error::NonFinite { .. } => 4,
            Error::Cell { source, .. } => source.exit_code(),
        }
    }
}
