use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("variable {name} is outside the declared arity (m = {m}, r = {r})")]
    Arity { name: String, m: usize, r: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("tensor signature mismatch: {0}")]
    Signature(String),

    #[error("invalid data: {0}")]
    Invalid(String),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
