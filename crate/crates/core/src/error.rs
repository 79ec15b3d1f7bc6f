use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("x = {x} lies outside [0, 1]")]
    Domain { x: f64 },

    #[error("invalid resource profile: {0}")]
    InvalidProfile(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular operator: pivot {pivot:e} at row {row} (scale {scale:e})")]
    SingularOperator { row: usize, pivot: f64, scale: f64 },

    #[error("Newton failed at mu = {mu}: residual {residual:e} after {iters} iterations ({reason})")]
    NoConvergence {
        mu: f64,
        residual: f64,
        iters: usize,
        reason: &'static str,
    },

    #[error("positivity lost at node {node} (t = {t}); retry with dt smaller than {dt}")]
    StepSize { node: usize, t: f64, dt: f64 },

    #[error("continuation failed at mu = {mu}: {source}")]
    Continuation { mu: f64, source: Box<Error> },

    #[error("mean of m is {mean}; the large-diffusion expansion needs a positive mean")]
    NonPositiveMean { mean: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("every row of the sweep failed")]
    SweepFailed,
}

impl Error {
    /// Diffusion rate at which a solver error occurred, when known.
    pub fn mu(&self) -> Option<f64> {
        match self {
            Error::NoConvergence { mu, .. } | Error::Continuation { mu, .. } => Some(*mu),
            _ => None,
        }
    }
}
