use thiserror::Error;

use crate::space::Point;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point outside the domain of the space: {0:?}")]
    OutsideDomain(Point),

    #[error("points are not causally related")]
    NotCausal,

    #[error("not a causal curve: samples {index} and {next} are not causally related")]
    NotACausalCurve { index: usize, next: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("restriction carrier is empty")]
    EmptyCarrier,

    #[error(
        "cover instance infeasible: ground point {index} {point:?} is not covered by any candidate"
    )]
    Infeasible { index: usize, point: Point },

    #[error("exact solver cap exceeded: {candidates} candidates > cap {cap}")]
    CapExceeded { candidates: usize, cap: usize },

    #[error("no interior samples found in diamond")]
    NoInteriorSamples,

    #[error("nodes are disconnected in the causal path graph at this resolution")]
    Disconnected,

    #[error("delta {delta} too small for the lattice budget ({cells} cells > {budget})")]
    BudgetExhausted {
        delta: f64,
        cells: usize,
        budget: usize,
    },

    #[error("map hypothesis violated: {0}")]
    HypothesisFailed(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
