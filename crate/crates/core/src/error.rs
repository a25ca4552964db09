use std::fmt;

/// Errors shared across the pipeline stages.
#[derive(Debug)]
pub enum Error {
    /// A derived constant requires positive bounds (T > 0, R > 0, N >= 2).
    InvalidBounds(String),
    /// Piece samples were taken with different mesh parameters.
    MeshMismatch {
        expected: u32,
        found: u32,
    },
    /// The inverse solve failed to reach the requested residual.
    NoConvergence {
        piece: usize,
        point: (i64, i64),
        residual: f64,
    },
    /// A lattice ball contains no vertex.
    EmptyComplex,
    /// Predicted cell count exceeds the configured cap.
    MemoryCap {
        predicted: u64,
        cap: u64,
    },
    /// The run configuration violates an input condition.
    ConfigInvalid(String),
    /// A cell value ended up below one of its faces (internal bug).
    NonMonotone {
        degree: usize,
        column: usize,
    },
    /// Bottleneck distance to the reference barcode exceeds the certified budget.
    BudgetExceeded {
        distance: f64,
        budget: f64,
    },
    Io(std::io::Error),
    Json(serde_json::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidBounds(msg) => write!(f, "invalid bounds: {msg}"),
            Error::MeshMismatch { expected, found } => {
                write!(f, "mesh mismatch: expected 1/{expected}, found 1/{found}")
            }
            Error::NoConvergence { piece, point, residual } => write!(
                f,
                "inverse solve did not converge for piece {piece} at lattice point \
                 ({}, {}): residual {residual:.3e} (tolerance too small for this mesh?)",
                point.0, point.1
            ),
            Error::EmptyComplex => write!(f, "lattice ball contains no vertex"),
            Error::MemoryCap { predicted, cap } => {
                write!(f, "predicted cell count {predicted} exceeds memory cap {cap}")
            }
            Error::ConfigInvalid(msg) => write!(f, "invalid configuration: {msg}"),
            Error::NonMonotone { degree, column } => {
                write!(f, "filtration not monotone at degree {degree}, column {column}")
            }
            Error::BudgetExceeded { distance, budget } => write!(
                f,
                "bottleneck distance {distance:.6e} to reference exceeds certified budget {budget:.6e}"
            ),
            Error::Io(e) => write!(f, "io error: {e}"),
            Error::Json(e) => write!(f, "json error: {e}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e)
    }
}
