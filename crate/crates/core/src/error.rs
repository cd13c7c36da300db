use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix must have at least one row and one column (got {rows}x{cols})")]
    EmptyMatrix { rows: usize, cols: usize },

    #[error("non-finite entry {value} at ({row}, {col})")]
    NonFinite { row: usize, col: usize, value: f64 },

    #[error("buffer of length {len} cannot hold a {rows}x{cols} matrix")]
    BufferLength { len: usize, rows: usize, cols: usize },

    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    Shape {
        context: &'static str,
        expected: String,
        actual: String,
    },

    #[error("matrix is not symmetric: |m[{row},{col}] - m[{col},{row}]| = {gap:e} exceeds {tol:e}")]
    NotSymmetric { row: usize, col: usize, gap: f64, tol: f64 },

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("iterates became non-finite at iteration {iter}")]
    Diverged { iter: usize },

    #[error("eigen decomposition did not converge")]
    EigenFailure,

    #[error("subspace basis {index} is rank deficient (smallest Gram eigenvalue {min_eig:e})")]
    RankDeficient { index: usize, min_eig: f64 },

    #[error("no basis arrangement met the minimum angle {theta_min_deg:.2} deg after {attempts} draws")]
    AngleInfeasible { theta_min_deg: f64, attempts: usize },

    #[error("cluster {cluster} has no members")]
    EmptyCluster { cluster: usize },

    #[error("data is corrupted ({corrupted} masked entries); pass the clean stack instead")]
    CorruptedData { corrupted: usize },

    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("i/o error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("missing upstream artifact {path} (produced by `{producer}`)")]
    MissingArtifact { path: PathBuf, producer: &'static str },

    #[error("stage `{stage}` failed")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn shape(
        context: &'static str,
        expected: impl std::fmt::Display,
        actual: impl std::fmt::Display,
    ) -> Self {
        Error::Shape {
            context,
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        match self {
            already @ Error::Stage { .. } => already,
            other => Error::Stage {
                stage,
                source: Box::new(other),
            },
        }
    }
}
