//! Traversal counts and the two roadside audit tests.

use std::collections::BTreeSet;

use crate::netmodel::{EdgeId, TripRecord};

/// Number of trips that traverse `edge` at least once.
pub fn phi(edge: EdgeId, trips: &[TripRecord]) -> u64 {
    trips
        .iter()
        .filter(|t| t.trajectory.iter().any(|s| s.edge == edge))
        .count() as u64
}

/// Round `r` covers entry times `[r * round_len, (r + 1) * round_len)`.
pub fn round_of(entry_time: u32, round_len: u32) -> u32 {
    entry_time / round_len.max(1)
}

/// Number of trips that enter `edge` at least once during `round`.
pub fn phi_round(edge: EdgeId, round: u32, round_len: u32, trips: &[TripRecord]) -> u64 {
    trips
        .iter()
        .filter(|t| {
            t.trajectory
                .iter()
                .any(|s| s.edge == edge && round_of(s.entry_time, round_len) == round)
        })
        .count() as u64
}

/// `sum_e phi(e, trips)`: distinct (trip, edge) incidences.
pub fn phi_total(trips: &[TripRecord]) -> u64 {
    trips
        .iter()
        .map(|t| {
            t.trajectory
                .iter()
                .map(|s| s.edge)
                .collect::<BTreeSet<_>>()
                .len() as u64
        })
        .sum()
}

/// ARA test with tolerance: `|phi - sum_e phi(e, trips)| <= epsilon * phi`.
/// `epsilon = 0` is the exact test.
pub fn ara_test(trips: &[TripRecord], phi: u64, epsilon: f64) -> bool {
    let claimed = phi_total(trips) as f64;
    (phi as f64 - claimed).abs() <= epsilon * phi as f64
}

/// A sensor-reported count for one audited (edge, round) pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AuditedCount {
    pub edge: EdgeId,
    pub round: u32,
    pub count: u64,
}

/// RRA test: every audited count matches the witness dataset exactly.
pub fn rra_test(trips: &[TripRecord], counts: &[AuditedCount], round_len: u32) -> bool {
    counts
        .iter()
        .all(|c| phi_round(c.edge, c.round, round_len, trips) == c.count)
}
