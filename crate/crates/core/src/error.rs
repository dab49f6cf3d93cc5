use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid size: {0}")]
    InvalidSize(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("infeasible coupling: (D_G)_{vertex} = {value} is not below 1")]
    InfeasibleCoupling { vertex: usize, value: f64 },
    #[error("singular normalization: D[{index}] = 1")]
    SingularNormalization { index: usize },
    #[error("inconsistent step size across edges (relative spread {spread:e}), offending edges {edges:?}")]
    InconsistentAlpha { spread: f64, edges: Vec<usize> },
    #[error("degenerate collapse: collapsed state {0} has zero stationary mass")]
    DegenerateCollapse(usize),
    #[error("chain not mixed within {0} steps")]
    NotMixed(usize),
    #[error("eigensolver did not converge on a {0}x{0} matrix")]
    NumericalFailure(usize),
    #[error("degenerate spectrum: every eigenvalue has unit modulus")]
    DegenerateSpectrum,
    #[error("not convergent: rate {0} is not below 1")]
    NotConvergent(f64),
    #[error("graph is disconnected: {0} zero Laplacian eigenvalues")]
    Disconnected(usize),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
