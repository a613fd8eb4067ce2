use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("infeasible geometry: {0}")]
    InfeasibleGeometry(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("degenerate state: {0}")]
    DegenerateState(String),

    #[error("integration diverged at t = {t}")]
    Diverged { t: f64 },

    #[error("matrix is not positive semi-definite: leading minor {minor} has pivot {pivot:e}")]
    NotPositiveSemiDefinite { minor: usize, pivot: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty trajectory")]
    EmptyTrajectory,
}

impl Error {
    /// True for errors caused by a prescribed geometry that cannot exist.
    pub fn is_infeasible(&self) -> bool {
        matches!(self, Error::InfeasibleGeometry(_))
    }

    pub fn is_divergence(&self) -> bool {
        matches!(self, Error::Diverged { .. })
    }
}
