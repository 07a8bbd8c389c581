use std::io;

use thiserror::Error;

use crate::network::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid trit value {0}; expected -1, 0 or +1")]
    InvalidTrit(i64),

    #[error("invalid packed codeword {0}; bytes must be < 243")]
    InvalidCodeword(u8),

    #[error("value {x} outside encoder range [0, {max}]")]
    EncodingRange { x: i64, max: i64 },

    #[error("pooling and activation layers are not counted as operations")]
    NotCounted,

    #[error("format error: {0}")]
    Format(String),

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("dimension overflow: {0}")]
    DimOverflow(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("layer {layer} channel {channel}: batch-norm gain is zero")]
    DegenerateChannel { layer: usize, channel: usize },

    #[error("layer {layer} channel {channel}: negative batch-norm gain, normalize gain signs first")]
    NegativeGain { layer: usize, channel: usize },

    #[error("unsupported graph: {0}")]
    UnsupportedGraph(String),

    #[error("{layers} compute layers exceed the layer queue depth of {max}")]
    QueueOverflow { layers: usize, max: usize },

    #[error("network does not map onto the architecture ({} violations)", .0.len())]
    Validation(Vec<Violation>),

    #[error("layer {0} has real-valued weights; ternary weights are required")]
    NotTernary(usize),

    #[error("trace is empty")]
    EmptyTrace,

    #[error("undefined: {0}")]
    Undefined(String),
}
