use thiserror::Error;

pub type Result<T> = std::result::Result<T, AoiError>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum AoiError {
    /// Invalid model or solver parameters.
    #[error("configuration error: {0}")]
    Config(String),

    /// Argument outside the domain of the evaluated function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Requested evaluation is not defined for this input (e.g. a density
    /// of a law without one).
    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("Laplace inversion failed: {0}")]
    Inversion(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl AoiError {
    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            AoiError::Config(_) => "config",
            AoiError::Domain(_) => "domain",
            AoiError::Unsupported(_) => "unsupported",
            AoiError::Convergence { .. } => "convergence",
            AoiError::Inversion(_) => "inversion",
            AoiError::Infeasible(_) => "infeasible",
            AoiError::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for AoiError {
    fn from(e: std::io::Error) -> Self {
        AoiError::Io(e.to_string())
    }
}
