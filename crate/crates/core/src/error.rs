use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix {0} is not symmetric positive definite")]
    NotSpd(&'static str),

    #[error("symmetric eigenvalue solver failed: {0}")]
    EigenSolver(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular configuration: {0}")]
    Singularity(String),

    #[error("state became non-finite at t = {t}")]
    NonFinite { t: f64 },

    #[error("Newton iteration did not converge after {iterations} iterations (max residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },

    #[error("manifold ansatz does not match the dynamics: {0}")]
    AnsatzMismatch(String),

    #[error("zero denominator in {0}")]
    DegenerateDenominator(String),

    #[error("insufficient zero crossings: found {found}, need at least {needed}")]
    InsufficientCrossings { found: usize, needed: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Numeric failures (solver, singularity) as opposed to bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::EigenSolver(_)
                | Error::Singularity(_)
                | Error::NonFinite { .. }
                | Error::NewtonDiverged { .. }
                | Error::AnsatzMismatch(_)
                | Error::DegenerateDenominator(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
