//! Randomized roadside audit.
//!
//! A small fleet of sensors is moved each round to a random subset of
//! roads. Assignments come from a seed the MA keeps to itself, so the MP
//! cannot tell which roads are watched. Each sensor sends the MA a signed
//! count for its road and round; individual sightings stay in the sensor.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::codec::Writer;
use crate::crypto::{hash, KeyPair, PublicKey};
use crate::harness::events::{Agent, DataClass, EventLog};
use crate::netmodel::EdgeId;

use super::phi::{round_of, AuditedCount};
use super::sensor::{
    control_payload, jointly_authorize, CountReport, SensorAction, SensorState, Sighting,
};
use super::AuditError;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RraConfig {
    /// Fraction of roads watched per round.
    pub p: f64,
    pub rounds: u32,
    pub round_len: u32,
}

/// Number of roads watched per round: `round(m * p)`.
pub fn sample_size(m: usize, p: f64) -> usize {
    ((m as f64 * p).round() as usize).min(m)
}

/// The roads watched in `round`, in increasing order. Deterministic in
/// `(seed, round)`.
pub fn rra_sample(seed: u64, m: usize, p: f64, round: u32) -> Result<Vec<EdgeId>, AuditError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(AuditError::BadProbability(p));
    }
    let mut w = Writer::new();
    w.str("rra-sample").u64(seed).u32(round);
    let mut rng = ChaCha20Rng::from_seed(hash(&w.finish()).0);
    let mut edges = sample(&mut rng, m, sample_size(m, p)).into_vec();
    edges.sort_unstable();
    Ok(edges)
}

/// Why the MA threw away a count report.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ReportRejection {
    #[error("sensor {0} is not registered")]
    UnknownSensor(usize),
    #[error("bad signature from sensor {0}")]
    BadSignature(usize),
    #[error("sensor {sensor} reported edge {reported} but was assigned edge {assigned}")]
    WrongLocation {
        sensor: usize,
        assigned: EdgeId,
        reported: EdgeId,
    },
}

/// Checks a count report against the sensor registry and the assignment.
pub fn verify_count_report(
    report: &CountReport,
    registry: &[PublicKey],
    assigned: EdgeId,
) -> Result<AuditedCount, ReportRejection> {
    let pk = registry
        .get(report.sensor)
        .ok_or(ReportRejection::UnknownSensor(report.sensor))?;
    if !report.verify(pk) {
        return Err(ReportRejection::BadSignature(report.sensor));
    }
    if report.location != assigned || report.edge != assigned {
        return Err(ReportRejection::WrongLocation {
            sensor: report.sensor,
            assigned,
            reported: report.location,
        });
    }
    Ok(AuditedCount {
        edge: report.edge,
        round: report.round,
        count: report.count,
    })
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RraRecord {
    /// `(round, sensor, edge)` for every assignment made.
    pub assignments: Vec<(u32, usize, EdgeId)>,
    pub reports: Vec<CountReport>,
    pub accepted: Vec<AuditedCount>,
    pub rejected: Vec<ReportRejection>,
}

/// `k` sensors, initially parked on edge 0.
pub fn deploy_rra_sensors<R: rand::RngCore + rand::CryptoRng>(
    k: usize,
    pk_ma: &PublicKey,
    pk_mp: &PublicKey,
    round_len: u32,
    rng: &mut R,
) -> Vec<SensorState> {
    (0..k)
        .map(|i| SensorState::new(i, 0, pk_ma.clone(), pk_mp.clone(), round_len, rng))
        .collect()
}

fn authorize(
    sensor: &mut SensorState,
    action: SensorAction,
    ma: &KeyPair,
    mp: &KeyPair,
    bus: &mut EventLog,
) -> Result<(), AuditError> {
    let auth = jointly_authorize(sensor, &action, ma, mp)?;
    let a_tag = action.tag();
    bus.push(
        Agent::Ma,
        Agent::Sensor(sensor.id),
        DataClass::Control,
        control_payload(a_tag, &auth.ma),
    );
    bus.push(
        Agent::Mp,
        Agent::Sensor(sensor.id),
        DataClass::Control,
        control_payload(a_tag, &auth.mp),
    );
    sensor.apply(&action, &auth)?;
    Ok(())
}

/// Runs every round: sample, assign, collect, report, verify. `sightings`
/// are all honest vehicle passes; a sensor only sees those on its road.
#[allow(clippy::too_many_arguments)]
pub fn rra_run(
    sensors: &mut [SensorState],
    m: usize,
    sightings: &[Sighting],
    config: &RraConfig,
    seed: u64,
    ma: &KeyPair,
    mp: &KeyPair,
    bus: &mut EventLog,
) -> Result<RraRecord, AuditError> {
    let k = sample_size(m, config.p);
    if sensors.len() < k {
        return Err(AuditError::TooFewSensors {
            needed: k,
            have: sensors.len(),
        });
    }
    let registry: Vec<PublicKey> = sensors.iter().map(|s| s.identity_key().clone()).collect();
    for s in sensors.iter_mut() {
        authorize(s, SensorAction::Permit, ma, mp, bus)?;
        let wl = SensorAction::SetWhitelists {
            senders: vec![ma.public.clone()],
            receivers: vec![],
        };
        authorize(s, wl, ma, mp, bus)?;
    }

    let mut by_round: BTreeMap<u32, Vec<&Sighting>> = BTreeMap::new();
    for s in sightings {
        by_round
            .entry(round_of(s.timestamp, config.round_len))
            .or_default()
            .push(s);
    }

    let mut record = RraRecord::default();
    for round in 0..config.rounds {
        let watched = rra_sample(seed, m, config.p, round)?;
        for (j, &edge) in watched.iter().enumerate() {
            sensors[j].reassign(edge)?;
            bus.push(
                Agent::Ma,
                Agent::Sensor(sensors[j].id),
                DataClass::Control,
                [b"assign:".as_slice(), &(edge as u64).to_be_bytes()].concat(),
            );
            record.assignments.push((round, sensors[j].id, edge));
        }
        if let Some(passes) = by_round.get(&round) {
            for s in passes {
                if let Some(j) = watched.iter().position(|&e| e == s.location) {
                    // A sensor refusing a sighting just leaves it out of the count.
                    let _ = sensors[j].observe(**s);
                }
            }
        }
        for (j, &edge) in watched.iter().enumerate() {
            let report = sensors[j].count_report(&ma.public, round)?;
            bus.push(
                Agent::Sensor(sensors[j].id),
                Agent::Ma,
                DataClass::AuditCount,
                report.encode(),
            );
            match verify_count_report(&report, &registry, edge) {
                Ok(c) => record.accepted.push(c),
                Err(e) => record.rejected.push(e),
            }
            record.reports.push(report);
        }
    }

    for s in sensors.iter_mut() {
        authorize(s, SensorAction::ClearWhitelists, ma, mp, bus)?;
        authorize(s, SensorAction::Erase, ma, mp, bus)?;
    }
    Ok(record)
}
