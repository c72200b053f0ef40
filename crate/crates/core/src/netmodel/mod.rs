//! Road network, travel demand and ridehailing trip records.
//!
//! Time is discrete: every timestamp is an integer number of `dt` steps.
//! A trip's trajectory covers only the time the vehicle is assigned to the
//! rider, split into Period 2 (driving to the pickup) and Period 3 (carrying
//! the passenger).

mod demand;
mod network;
mod trip;

pub use demand::{DemandTensor, RateMatrix};
pub use network::{DelayFn, Edge, EdgeId, Network, VertexId};
pub use trip::{
    emissions, period_intervals, traversals, validate_trip, MatchNotice, Period, TrajectoryStep,
    Traversal, TripRecord, Vehicle, Violation,
};

use thiserror::Error;

use crate::codec::DecodeError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetError {
    #[error("vertex {0} does not exist")]
    UnknownVertex(usize),
    #[error("invalid delay function {0}")]
    BadDelay(String),
    #[error("{0}")]
    Parse(String),
    #[error("line {0}: {1}")]
    Line(usize, Box<NetError>),
    #[error("demand from a vertex to itself at ({0}, {0}, {1})")]
    SelfDemand(usize, u32),
    #[error("negative or non-finite demand {0}")]
    BadDemand(f64),
    #[error("index ({0}, {1}, {2}) outside the tensor")]
    OutOfRange(usize, usize, u32),
    #[error("trip violates {0:?}")]
    InvalidTrip(Vec<Violation>),
    #[error("decode: {0}")]
    Decode(#[from] DecodeError),
}
