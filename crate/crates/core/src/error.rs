use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid argument: {0}")]
    Domain(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("geometry rejected after {0} draws")]
    Geometry(usize),
    #[error("solver returned {status} on {context}")]
    Solver { status: String, context: String },
    #[error("initialization failed: {0}")]
    Init(String),
    #[error("uplink rate targets cannot be met ({0})")]
    UplinkQos(String),
    #[error("monotonicity violated at iteration {iter}: {prev} -> {next}")]
    Monotonicity { iter: usize, prev: f64, next: f64 },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("parse: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
