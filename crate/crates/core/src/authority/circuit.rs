//! The evaluation circuit `C(x, w)` and the MA's verdicts.

use std::fmt;

use crate::audits::{ara_test, rra_test, AuditedCount};
use crate::crypto::{commit, mcommit, Digest, Nonce, PublicKey};
use crate::netmodel::{validate_trip, Network, TripRecord};

use super::query::{eval_query, Certificate, EvalContext, Query, QueryValue};

/// Public audit results the witness is tested against.
#[derive(Clone, Debug, PartialEq)]
pub enum AuditPublic {
    None,
    Ara {
        phi: u64,
        epsilon: f64,
    },
    Rra {
        round_len: u32,
        counts: Vec<AuditedCount>,
    },
}

/// Everything the circuit treats as public input.
#[derive(Clone, Debug, PartialEq)]
pub struct EvaluationCircuit {
    pub network: Network,
    pub pk_mp: PublicKey,
    pub sigma: Digest,
    pub audit: AuditPublic,
    /// Leaf commitments from riders' receipts.
    pub rider_reports: Vec<Digest>,
    pub query: Query,
    /// Numeric tolerance for certificates and vector answers.
    pub tol: f64,
}

/// The MP's private witness `w = (Λ_w, r_w, c_w)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Witness {
    pub trips: Vec<TripRecord>,
    pub nonces: Vec<Nonce>,
    pub certificate: Certificate,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CircuitFailure {
    InvalidTrip(u64),
    UnresolvedReport(Digest),
    AuditMismatch,
    CommitmentMismatch,
    QueryError(String),
    AnswerMismatch,
}

impl CircuitFailure {
    /// Which of the three checks failed.
    pub fn class(&self) -> &'static str {
        match self {
            CircuitFailure::InvalidTrip(_)
            | CircuitFailure::UnresolvedReport(_)
            | CircuitFailure::AuditMismatch => "integrity",
            CircuitFailure::CommitmentMismatch => "commitment",
            CircuitFailure::QueryError(_) | CircuitFailure::AnswerMismatch => "query",
        }
    }
}

impl fmt::Display for CircuitFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CircuitFailure::InvalidTrip(id) => write!(f, "trip {id} is malformed"),
            CircuitFailure::UnresolvedReport(d) => write!(f, "rider report {d} matches no leaf"),
            CircuitFailure::AuditMismatch => {
                f.write_str("roadside audit disagrees with the witness")
            }
            CircuitFailure::CommitmentMismatch => {
                f.write_str("witness does not open the commitment")
            }
            CircuitFailure::QueryError(e) => write!(f, "query evaluation failed: {e}"),
            CircuitFailure::AnswerMismatch => f.write_str("answer differs from the query value"),
        }
    }
}

/// Runs the three checks in order and reports the first failure:
///
/// 1. integrity: every trip is well formed, every rider report is a leaf of
///    the witness, and the roadside audit test passes;
/// 2. the witness opens `sigma`;
/// 3. `g` evaluated on the witness equals `z`.
pub fn diagnose(c: &EvaluationCircuit, z: &QueryValue, w: &Witness) -> Result<(), CircuitFailure> {
    if w.trips.len() != w.nonces.len() {
        return Err(CircuitFailure::CommitmentMismatch);
    }
    if let Some(bad) = w
        .trips
        .iter()
        .find(|t| !validate_trip(t, &c.network).is_empty())
    {
        return Err(CircuitFailure::InvalidTrip(bad.trip_id));
    }
    let encodings: Vec<Vec<u8>> = w.trips.iter().map(TripRecord::encode).collect();
    let leaves: std::collections::BTreeSet<Digest> = encodings
        .iter()
        .zip(&w.nonces)
        .map(|(e, r)| commit(r, e))
        .collect();
    if let Some(d) = c.rider_reports.iter().find(|d| !leaves.contains(d)) {
        return Err(CircuitFailure::UnresolvedReport(*d));
    }
    let audit_ok = match &c.audit {
        AuditPublic::None => true,
        AuditPublic::Ara { phi, epsilon } => ara_test(&w.trips, *phi, *epsilon),
        AuditPublic::Rra { round_len, counts } => rra_test(&w.trips, counts, *round_len),
    };
    if !audit_ok {
        return Err(CircuitFailure::AuditMismatch);
    }
    match mcommit(&encodings, &w.nonces) {
        Ok(tree) if tree.root() == c.sigma => {}
        _ => return Err(CircuitFailure::CommitmentMismatch),
    }
    let ctx = EvalContext {
        network: &c.network,
        pk_mp: &c.pk_mp,
        tol: c.tol,
    };
    let value = eval_query(&c.query, &w.trips, &ctx, &w.certificate)
        .map_err(|e| CircuitFailure::QueryError(e.to_string()))?;
    if !value.matches(z, c.tol) {
        return Err(CircuitFailure::AnswerMismatch);
    }
    Ok(())
}

/// `C(x, w)`: true iff all three checks pass.
pub fn eval_circuit(c: &EvaluationCircuit, z: &QueryValue, w: &Witness) -> bool {
    diagnose(c, z, w).is_ok()
}

/// The MA's decision on one query.
#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub accepted: bool,
    /// Only available when the proof backend exposes diagnostics.
    pub failure_class: Option<String>,
    pub fine: f64,
}

impl Verdict {
    pub fn to_text(&self) -> String {
        format!(
            "verdict accepted={} fine={:.2} class={}",
            self.accepted,
            self.fine,
            self.failure_class.as_deref().unwrap_or("-")
        )
    }
}
