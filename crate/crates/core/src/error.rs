use thiserror::Error;

/// Everything that can go wrong inside the library.
#[derive(Debug, Error)]
pub enum SpcaError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "column {column} regression did not reach tolerance {tol:.3e}: \
         KKT residual {residual:.3e} after {sweeps} sweeps"
    )]
    QpConvergence {
        column: usize,
        residual: f64,
        tol: f64,
        sweeps: usize,
    },

    /// Branch-and-bound ran out of nodes. Carries the best incumbent found and
    /// a still-valid lower bound so callers can keep going with partial data.
    #[error(
        "master node budget exhausted after {explored} nodes \
         (incumbent {eta:.6e}, proven bound {lower_bound:.6e})"
    )]
    MasterBudget {
        z: Vec<bool>,
        eta: f64,
        lower_bound: f64,
        explored: usize,
    },

    #[error("matrix is numerically zero; no leading direction exists")]
    DegenerateMatrix,

    #[error("power iteration residual {residual:.3e} after {iters} iterations")]
    PowerIteration { residual: f64, iters: usize },

    #[error("truncated power method produced a zero iterate on every restart")]
    DegenerateIterate,

    #[error("instance too large for brute force: p = {p} exceeds {max}")]
    BruteforceSize { p: usize, max: usize },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, SpcaError>;
