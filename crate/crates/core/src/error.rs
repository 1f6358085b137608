use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("variance {name} must be finite and strictly positive, got {value}")]
    InvalidVariance { name: &'static str, value: f64 },

    #[error("unphysical state: smallest symplectic eigenvalue {nu_min} is below 1")]
    Unphysical { nu_min: f64 },

    #[error("matrix is not symmetric (max |V_ij - V_ji| = {max_asymmetry:e})")]
    NotSymmetric { max_asymmetry: f64 },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("matrix entry ({row}, {col}) is not finite")]
    NonFiniteEntry { row: usize, col: usize },

    #[error("state is not a symmetric twin-beam state: {0}")]
    NotTwinBeam(String),

    #[error("invalid covariance matrix: two-mode discriminant is negative ({0:e})")]
    NegativeDiscriminant(f64),

    #[error("transmission must lie in [0, 1], got {0}")]
    InvalidTransmission(f64),

    #[error("transmissions are already balanced (t1 = t2 = {0})")]
    BalancedChannel(f64),

    #[error("state is not entangled at unit transmission (nu_min = {nu_min})")]
    NotEntangled { nu_min: f64 },

    #[error("too few samples: got {got}, need at least {need}")]
    TooFewSamples { got: usize, need: usize },

    #[error("sample {index} contains a non-finite value")]
    NonFiniteSample { index: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("every cell of the region map is unphysical")]
    NoPhysicalCells,

    #[error("invalid state file: {0}")]
    StateFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
