use thiserror::Error;

/// Errors raised anywhere in the engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("material error: {0}")]
    Material(String),

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error("linear solver failed: {0}")]
    LinearSolve(String),

    #[error("newton iteration did not converge after {iterations} iterations (residual history: {history:?})")]
    NewtonDiverged { iterations: usize, history: Vec<f64> },

    #[error("load step {step} failed: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True when the error originates from the scenario configuration.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::InvalidInput(_))
    }
}
