use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("invalid frame geometry: {0}")]
    Geometry(String),

    #[error("invalid tokenizer config: {0}")]
    TokenizerConfig(String),

    #[error("token sequence length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("K = {k} exceeds sequence length {len}")]
    KOutOfRange { k: usize, len: usize },

    #[error("K = {0} does not fit the 16-bit framing field")]
    KFieldOverflow(usize),

    #[error("token code {code} does not fit in {bits} bits")]
    CodeOutOfRange { code: u32, bits: u32 },

    #[error("payload too short: {0} bits, framing prefix needs 16")]
    TruncatedPrefix(usize),

    #[error("unsupported modulation order {0}")]
    UnsupportedModulation(u32),

    #[error("payload of {len} bits exceeds budget of {budget} bits")]
    OverBudget { len: usize, budget: usize },

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid config: {0}")]
    Config(String),
}
