use std::path::PathBuf;

use ggi_core::fixtures::FixtureError;
use ggi_core::ggi_io::GgiIoError;
use ggi_core::layout::LayoutError;
use ggi_core::mesh_io::ObjError;
use ggi_core::metrics::MetricsError;
use ggi_core::pattern::PatternError;
use ggi_core::pipeline::PipelineError;
use ggi_core::raster::RasterError;
use ggi_core::stitcher::StitchError;
use thiserror::Error;

/// Every failure maps to exit 1 (bad input content) or exit 2 (I/O or
/// unreadable format).
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Format(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io { .. } | CliError::Format(_) => 2,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

impl From<PatternError> for CliError {
    fn from(e: PatternError) -> Self {
        match e {
            PatternError::MalformedJson(_) => CliError::Format(e.to_string()),
            PatternError::SchemaViolation(_) | PatternError::InvariantViolation(_) => CliError::Validation(e.to_string()),
        }
    }
}

impl From<LayoutError> for CliError {
    fn from(e: LayoutError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<RasterError> for CliError {
    fn from(e: RasterError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<FixtureError> for CliError {
    fn from(e: FixtureError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<GgiIoError> for CliError {
    fn from(e: GgiIoError) -> Self {
        match e {
            GgiIoError::Io { path, source } => CliError::Io { path, source },
            other => CliError::Format(other.to_string()),
        }
    }
}

impl From<ObjError> for CliError {
    fn from(e: ObjError) -> Self {
        match e {
            ObjError::Io { path, source } => CliError::Io { path, source },
            other => CliError::Format(other.to_string()),
        }
    }
}

/// A raster that cannot be remeshed or stitched is malformed input.
impl From<StitchError> for CliError {
    fn from(e: StitchError) -> Self {
        CliError::Format(e.to_string())
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::Format(e.to_string())
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Raster(e) => e.into(),
            PipelineError::Stitch(e) => e.into(),
            PipelineError::Metrics(e) => e.into(),
        }
    }
}
