use std::path::PathBuf;

/// Errors produced anywhere in the matching pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("mesh has no faces")]
    EmptyMesh,

    #[error("all geometry excluded")]
    AllGeometryExcluded,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("cloud has {have} points, need at least {need}")]
    TooFewPoints { have: usize, need: usize },

    #[error("outlier filter too aggressive: would drop {dropped} of {total} points")]
    OutlierFilterTooAggressive { dropped: usize, total: usize },

    #[error("degenerate cloud: {0}")]
    DegenerateCloud(&'static str),

    #[error("image is {width}x{height}, need at least {min}x{min}")]
    ImageTooSmall {
        width: usize,
        height: usize,
        min: usize,
    },

    #[error("need at least {need} distinct descriptors for clustering, have {have}")]
    TooFewDescriptors { have: usize, need: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("histogram is not L1-normalized (sum = {0})")]
    NotNormalized(f64),

    #[error("unsupported codebook version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("corrupt codebook: {0}")]
    CorruptCodebook(String),

    #[error("library is empty")]
    EmptyLibrary,

    #[error("unknown class `{0}`")]
    UnknownClass(String),

    #[error("confusion matrix is empty")]
    EmptyConfusionMatrix,

    #[error("kappa undefined: random match equals 1")]
    KappaUndefined,

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Wraps the error with a description of what was being done.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
