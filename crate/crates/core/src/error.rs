use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("ellipticity violated: {0}")]
    Ellipticity(String),
    #[error("invalid coefficient field: {0}")]
    InvalidField(String),
    #[error("operator is not Hermitian (relative residual {residual:.3e})")]
    NotHermitian { residual: f64 },
    #[error("eigendecomposition failed: {0}")]
    Eigen(String),
    #[error("function is not finite at eigenvalue {eigenvalue:.6e}")]
    SingularFunction { eigenvalue: f64 },
    #[error("dimension {dim} exceeds the configured limit {max}")]
    DimensionOverflow { dim: usize, max: usize },
    #[error("kappa = {kappa} exceeds the aliasing cap {cap:.4} of the grid")]
    AliasingCap { kappa: f64, cap: f64 },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(
        "quadrature did not converge: partial estimate {partial:.10e}, error estimate {error:.3e}"
    )]
    Quadrature { partial: f64, error: f64 },
    #[error("probe range spans only a factor {ratio:.3} in <xi>; at least 10 is required")]
    ProbeRange { ratio: f64 },
    #[error("resolvent point z = {z} is not below min spec - 1 (min spec = {min_spec})")]
    ResolventPoint { z: f64, min_spec: f64 },
    #[error("iteration did not converge: {0}")]
    NoConvergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;
