//! The municipal authority: query functions, the evaluation circuit, verdicts
//! and fines.
//!
//! Query evaluation is written once and used by both sides. The MP calls
//! [`answer`] to produce `z` and any optimization certificate; the circuit
//! calls [`eval_query`], which only checks certificates and never re-solves.

mod circuit;
mod fine;
mod query;
pub mod wire;

pub use circuit::{
    diagnose, eval_circuit, AuditPublic, CircuitFailure, EvaluationCircuit, Verdict, Witness,
};
pub use fine::{levy_fine, rra_fine, Detection, FineSchedule, RraFineParams};
pub use query::{
    answer, edge_traversal_counts, eval_query, period_counts, region_mean_waits, Certificate,
    EvalContext, Query, QueryKind, QueryValue, RegPredicate,
};

use thiserror::Error;

use crate::codec::DecodeError;
use crate::flowopt::FlowError;
use crate::netmodel::NetError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("optimization query needs a certificate")]
    CannotVerify,
    #[error("certificate rejected: {0}")]
    CertificateRejected(String),
    #[error("bad query parameters: {0}")]
    BadParams(String),
    #[error("malformed encoding: {0}")]
    Malformed(String),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
}
