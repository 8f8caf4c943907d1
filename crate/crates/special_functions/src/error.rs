use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MathError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("pole of the Gamma function at {0}")]
    Pole(f64),
    #[error("divergent integral: {0}")]
    Divergent(String),
    #[error("degenerate value: {0}")]
    Degenerate(String),
    #[error("infinite moment: {0}")]
    InfiniteMoment(String),
    #[error("no convergence: {0}")]
    Convergence(String),
    #[error("evaluation error: {0}")]
    Evaluation(String),
}

impl MathError {
    /// Short machine-readable label.
    pub fn kind(&self) -> &'static str {
        match self {
            MathError::Domain(_) => "domain",
            MathError::Pole(_) => "pole",
            MathError::Divergent(_) => "divergent",
            MathError::Degenerate(_) => "degenerate",
            MathError::InfiniteMoment(_) => "infinite_moment",
            MathError::Convergence(_) => "convergence",
            MathError::Evaluation(_) => "evaluation",
        }
    }
}
