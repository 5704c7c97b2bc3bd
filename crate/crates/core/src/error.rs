use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("site {site} out of range 1..={n_sites}")]
    SiteOutOfRange { site: usize, n_sites: usize },

    #[error("site {site} is an edge site; the operator needs neighbours on both sides (chain of {n_sites})")]
    EdgeSite { site: usize, n_sites: usize },

    #[error("operator is not Hermitian (max |A - A^dag| = {residual:e})")]
    NotHermitian { residual: f64 },

    #[error("dimension {dim} exceeds the dense ceiling {ceiling}")]
    DenseCeiling { dim: usize, ceiling: usize },

    #[error("Krylov propagation did not converge: {0}")]
    KrylovNonConvergence(String),

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
