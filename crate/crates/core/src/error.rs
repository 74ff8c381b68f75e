use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HkError {
    #[error("unsupported n = {0}: cell grids need n >= 4 and n a power of 2")]
    UnsupportedGrid(usize),

    #[error("unsupported domain resolution {0}: need at least 2 elements per side")]
    UnsupportedDomain(usize),

    #[error("epsilon {0} is not the reciprocal of a positive integer")]
    InvalidEpsilon(f64),

    #[error("incommensurate pairing: {cells} epsilon-cells per side on a {elements}-element domain with an n = {n} cell grid")]
    Incommensurate {
        cells: usize,
        elements: usize,
        n: usize,
    },

    #[error("invalid operator spec: {0}")]
    InvalidSpec(String),

    #[error("field does not conform to its grid: {0}")]
    Shape(String),

    #[error("{solver} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("singular system in {0}: rigid modes not removed or operator not positive")]
    SingularSystem(&'static str),

    #[error("{0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, HkError>;
