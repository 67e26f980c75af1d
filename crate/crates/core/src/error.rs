use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("invalid sample {value} at node ({i}, {j})")]
    InvalidValue { i: usize, j: usize, value: f64 },
    #[error("point ({x}, {y}) is outside the admissible region")]
    OutOfDomain { x: f64, y: f64 },
    #[error("geometry: {0}")]
    Geometry(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("singular point ({x}, {y})")]
    SingularPoint { x: f64, y: f64 },
    #[error("degenerate normalization: {0}")]
    DegenerateNormalization(String),
    #[error("linear solver did not converge (last residual {residual:e})")]
    NoConvergence { residual: f64 },
    #[error("internal: {0}")]
    Internal(String),
    #[error("format: {0}")]
    Format(String),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
