use std::path::PathBuf;

use crate::geometry::ElementId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error(
        "point is within tolerance of elements {first} and {second}, which carry different vectors"
    )]
    AmbiguousBoundary { first: ElementId, second: ElementId },

    #[error("degenerate segment: consecutive path points {index} and {next} coincide", next = .index + 1)]
    DegenerateSegment { index: usize },

    #[error("degenerate line {index}: both defining points coincide")]
    DegenerateLine { index: usize },

    #[error("patch {patch}: lattice samples {a} and {b} map to the same point")]
    InjectivityViolation {
        patch: ElementId,
        a: usize,
        b: usize,
    },

    #[error("patch {patch}: jacobian is rank deficient at sample {sample}")]
    RankDeficient { patch: ElementId, sample: usize },

    #[error("atom of order {order} lies within {eps} m of the receiver")]
    CollocatedAtom { order: usize, eps: f64 },

    #[error("unknown boundary element {0}")]
    UnknownElement(ElementId),

    #[error("point is not on boundary element {element} (distance {distance:e})")]
    NotOnElement { element: ElementId, distance: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("validation error in `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {message}", path.display())]
    Wav { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
