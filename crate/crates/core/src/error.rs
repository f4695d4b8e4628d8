use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{0} is not a probability in [0, 1]")]
    InvalidProb(f64),

    #[error("{what} is undefined at {x}")]
    Domain { what: &'static str, x: f64 },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("infeasible constraints: {0}")]
    Infeasible(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid set family: {0}")]
    InvalidFamily(String),

    #[error("family is not union-closed: {a:#b} | {b:#b} = {union:#b} is missing")]
    NotUnionClosed { a: u32, b: u32, union: u32 },

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid configuration: {0}")]
    Config(String),
}
