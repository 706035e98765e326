use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A value outside the support of an operation (infinite quantile,
    /// point outside a benchmark's hypercube, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dense tensor would hold {entries} entries (cap {cap})")]
    Size { entries: u128, cap: u128 },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("surrogate variance is not positive ({0:e})")]
    ZeroVariance(f64),

    #[error("reference vector has zero norm")]
    ZeroNorm,

    #[error("missing outputs at rows {}", format_rows(.0))]
    MissingLabels(Vec<usize>),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn format_rows(rows: &[usize]) -> String {
    const SHOWN: usize = 20;
    let mut s = rows
        .iter()
        .take(SHOWN)
        .map(|r| r.to_string())
        .collect::<Vec<_>>()
        .join(", ");
    if rows.len() > SHOWN {
        s.push_str(&format!(" ... ({} rows total)", rows.len()));
    }
    s
}
