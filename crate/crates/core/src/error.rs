use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("hamiltonian is not Hermitian (deviation {0:e})")]
    NonHermitian(f64),
    #[error("operators 1, c_1, ..., c_K are linearly dependent")]
    LinearlyDependent,
    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),
    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),
    #[error("matrix is not unitary (deviation {0:e})")]
    NonUnitary(f64),
    #[error("u-matrix is not symmetric (deviation {0:e})")]
    Asymmetric(f64),
    #[error("u-matrix spectral norm {0} exceeds 1")]
    NormExceeded(f64),
    #[error("noise covariance is not positive semi-definite (eigenvalue {0:e})")]
    CovarianceFactorization(f64),
    #[error("detection efficiency {0} outside [0, 1]")]
    EfficiencyOutOfRange(f64),
    #[error("homodyne unraveling needs exactly one Lindblad operator, model has {0}")]
    HomodyneRequiresSingleChannel(usize),
    #[error("state norm collapsed to {0:e}")]
    NormCollapse(f64),
    #[error("input is not a rank-one projector (deviation {0:e})")]
    NotProjector(f64),
    #[error("measurement likelihood vanished ({0:e})")]
    VanishingLikelihood(f64),
    #[error("stationary kernel has dimension {0}, expected 1")]
    DegenerateSteadyState(usize),
    #[error("time grids do not align")]
    GridMismatch,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unsupported unraveling: {0}")]
    UnsupportedSpec(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
