use sigrt::quality::MetricError;
use sigrt::RuntimeError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("image {width}x{height} is too small (need at least {min}x{min})")]
    ImageTooSmall { width: usize, height: usize, min: usize },
    #[error("matrix is not strictly diagonally dominant at row {row}")]
    NotDiagonallyDominant { row: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("k = {k} exceeds the number of points n = {n}")]
    TooManyClusters { k: usize, n: usize },
    #[error("k must be at least 1")]
    NoClusters,
    #[error("no convergence after {0} sweeps")]
    Diverged(usize),
    #[error("{0} boundary points have no realized walks")]
    UndefinedEstimate(usize),
    #[error("invalid parameter: {0}")]
    Invalid(String),
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed output file: {0}")]
    Format(String),
}
