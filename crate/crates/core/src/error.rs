use thiserror::Error;

pub type Result<T, E = SdeError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SdeError {
    #[error("component index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("non-finite {quantity} in component {component} at state {state:?}")]
    NonFinite {
        quantity: &'static str,
        component: usize,
        state: Vec<f64>,
    },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error(
        "scheme {scheme} needs the diffusion factor derivative; supply one with \
         `with_diffusion_derivative` or use an Euler scheme"
    )]
    MissingDerivative { scheme: &'static str },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("state component {component} = {value} lies outside ({lower}, {upper})")]
    OutsideDomain {
        component: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("realization {realization} (seed {seed}) failed: {source}")]
    Realization {
        realization: u64,
        seed: u64,
        #[source]
        source: Box<SdeError>,
    },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for SdeError {
    fn from(err: std::io::Error) -> Self {
        SdeError::Io(err.to_string())
    }
}
