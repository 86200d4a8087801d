use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("puncture `{label}` lies within {distance:.3e} of grid node ({i}, {j})")]
    PunctureOnNode {
        label: String,
        i: usize,
        j: usize,
        distance: f64,
    },

    #[error("Green's function evaluated at a lattice point")]
    SingularEvaluation,

    #[error("singularity exponent {exponent} is not integrable (needs > -2)")]
    NonIntegrable { exponent: f64 },

    #[error("field size mismatch: expected {expected} values, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("exp(v) overflowed in component {component} at node ({i}, {j})")]
    Overflow { component: usize, i: usize, j: usize },

    #[error("initial guess unavailable: mass of component {component} is not positive")]
    GuessUnavailable { component: usize },

    #[error("asymptotic fit around `{label}` rejected: another puncture lies in the annulus")]
    AnnulusOccupied { label: String },

    #[error("internal consistency failure: {0}")]
    Internal(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
