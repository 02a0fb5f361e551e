use thiserror::Error;

use crate::smoothfn::SmoothError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Smooth(#[from] SmoothError),
    #[error("not a lune: {0}")]
    NotALune(String),
    #[error("support error: {0}")]
    Support(String),
    #[error("slice count must be at least 1, got {0}")]
    SliceCount(u64),
    #[error("word {0} has no successor")]
    NoSuccessor(String),
    #[error("invalid word {word}: {reason}")]
    InvalidWord { word: String, reason: String },
    #[error("node budget exceeded: {needed} nodes requested, budget is {budget}")]
    Budget { needed: String, budget: u64 },
    #[error("depth {requested} is not available (family depth {available})")]
    Depth { requested: usize, available: usize },
    #[error("point ({x}, {y}) lies outside the lune")]
    OutOfLune { x: f64, y: f64 },
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
