use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

/// Machine-readable category of a data-file failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataErrorCode {
    MissingFile,
    RaggedRows,
    SampleCountMismatch,
    NonNumericCell,
    FeatureCountMismatch,
    BadManifest,
    Io,
}

impl fmt::Display for DataErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::MissingFile => "MISSING_FILE",
            Self::RaggedRows => "RAGGED_ROWS",
            Self::SampleCountMismatch => "SAMPLE_COUNT_MISMATCH",
            Self::NonNumericCell => "NON_NUMERIC_CELL",
            Self::FeatureCountMismatch => "FEATURE_COUNT_MISMATCH",
            Self::BadManifest => "BAD_MANIFEST",
            Self::Io => "IO_ERROR",
        })
    }
}

fn at_line(line: &Option<u64>) -> String {
    line.map(|l| format!(":{l}")).unwrap_or_default()
}

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {detail}")]
    DimensionMismatch { op: &'static str, detail: String },

    #[error("IMAGINARY_RESIDUE: max |Im| = {max_imag:e} exceeds tolerance (max |Re| = {max_real:e})")]
    ImaginaryResidue { max_imag: f64, max_real: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("SVD did not converge on a {rows}x{cols} matrix")]
    SvdFailed { rows: usize, cols: usize },

    #[error("stationary distribution did not converge after {0} power iterations")]
    PowerIterationFailed(usize),

    #[error("view {view} has {found} samples, expected {expected}")]
    SampleCountMismatch { view: usize, expected: usize, found: usize },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("at least one trial is required")]
    EmptyTrials,

    #[error("{code}: {}{}: {detail}", path.display(), at_line(line))]
    Data {
        code: DataErrorCode,
        path: PathBuf,
        line: Option<u64>,
        detail: String,
    },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn data(code: DataErrorCode, path: impl Into<PathBuf>, line: Option<u64>, detail: impl Into<String>) -> Self {
        Error::Data {
            code,
            path: path.into(),
            line,
            detail: detail.into(),
        }
    }

    /// The data-file error code, looking through stage wrappers.
    pub fn data_code(&self) -> Option<DataErrorCode> {
        match self {
            Error::Data { code, .. } => Some(*code),
            Error::Stage { source, .. } => source.data_code(),
            _ => None,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn dim_mismatch(op: &'static str, detail: impl Into<String>) -> Error {
    Error::DimensionMismatch {
        op,
        detail: detail.into(),
    }
}
