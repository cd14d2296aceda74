use thiserror::Error;

/// Errors raised by the simulation and optimization kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("combiner is ill-conditioned: W^H W is singular beyond tolerance")]
    IllConditionedCombiner,

    #[error("infeasible constant-magnitude split: |col[{index}]| = {magnitude} exceeds 2 * d_max = {bound}")]
    InfeasibleSplit {
        index: usize,
        magnitude: f64,
        bound: f64,
    },

    #[error("degenerate channel: every candidate phase scores -inf")]
    DegenerateChannel,

    #[error("integer overflow while evaluating {0}")]
    Overflow(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
