use thiserror::Error;

/// Every fallible operation in the crate returns this error.
#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("pieces do not partition [0,1]: {0}")]
    Partition(String),

    #[error("density not positive: value {value} at x = {x}")]
    NonPositive { x: f64, value: f64 },

    #[error("point {0} outside [0,1]")]
    OutOfDomain(f64),

    #[error("malformed factor list: {0}")]
    Factor(String),

    #[error("grid too small: n = {0}, need at least {1}")]
    GridTooSmall(usize, usize),

    #[error("invalid boundary condition: {0}")]
    Boundary(String),

    #[error("operation undefined for boundary condition {0}")]
    Unsupported(String),

    #[error("ambiguous kernel: singular value {sigma:e} within a factor 10 of tol_zero {tol:e}")]
    AmbiguousKernel { sigma: f64, tol: f64 },

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error("zero vector")]
    ZeroVector,

    #[error("eigenvalue {0:e} below tol_zero")]
    ZeroEigenvalue(f64),

    #[error("vector outside range of T: least-squares residual {0:e}")]
    OutsideRange(f64),

    #[error("matrix numerically singular: {0}")]
    Singular(String),

    #[error("inner inverse ill-conditioned: condition number {0:e}")]
    IllConditioned(f64),

    #[error("spectral parameter within {0:e} of the spectrum")]
    NearSpectrum(f64),

    #[error("symmetry check for complex omega needs the conjugate-omega spectrum")]
    MissingCompanion,

    #[error("need {needed} eigenvalues per branch, found {found}")]
    Insufficient { needed: usize, found: usize },

    #[error("eigenvalue within {dist:e} of contour, gap_min {gap:e}")]
    ContourTooClose { dist: f64, gap: f64 },

    #[error("contour quadrature did not converge: last change {0:e}")]
    Quadrature(f64),

    #[error("eigenvalue not isolated: nearest neighbour at {0:e}")]
    NotIsolated(f64),

    #[error("clusters leave {0} eigenvalues uncovered")]
    Coverage(usize),

    #[error("empty spectrum")]
    EmptySpectrum,

    #[error("branch pairing failed: {0}")]
    Pairing(String),

    #[error("config error at {path}: {msg}")]
    Config { path: String, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
