use thiserror::Error;

/// Errors raised across the harvester toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter `{field}` = {value} outside [{min}, {max}]")]
    Bounds {
        field: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("basis degree {0} gives less than C1 continuity (need >= 2)")]
    Continuity(usize),
    #[error("parametric point ({0}, {1}) outside the unit square")]
    Domain(f64, f64),
    #[error("mesh error: {0}")]
    Mesh(String),
    #[error("assembly error: {0}")]
    Assembly(String),
    #[error("eigensolver failure: {0}")]
    Eigen(String),
    #[error("integration stalled at t = {time} s (step {step:e})")]
    Stiffness { time: f64, step: f64 },
    #[error("format error: {0}")]
    Format(String),
    #[error("data error at row {row}: {msg}")]
    Data { row: usize, msg: String },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("single cluster: silhouette undefined")]
    SingleCluster,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for problems with the inputs rather than with the computation.
    pub fn is_input(&self) -> bool {
        matches!(
            self,
            Error::Bounds { .. } | Error::Argument(_) | Error::Format(_) | Error::Data { .. } | Error::Validation(_) | Error::Json(_) | Error::Csv(_) | Error::Io(_)
        )
    }
}
