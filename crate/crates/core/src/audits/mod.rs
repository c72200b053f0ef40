//! Roadside audits and the rider witness test.
//!
//! Sensors count vehicles independently of the MP. The aggregated audit
//! (ARA) releases one network-wide total; the randomized audit (RRA)
//! releases counts for a secret random sample of roads each round. Riders
//! holding receipts provide a third, independent check.

pub mod ara;
mod phi;
mod rider;
pub mod rra;
pub mod sensor;

pub use ara::{ara_run, collect, deploy_ara_sensors, elect_leader, AraAggregate};
pub use phi::{ara_test, phi, phi_round, phi_total, round_of, rra_test, AuditedCount};
pub use rider::{rider_witness_test, MerkleResponder, RiderReport, RiderWitnessOutcome};
pub use rra::{
    deploy_rra_sensors, rra_run, rra_sample, sample_size, verify_count_report, ReportRejection,
    RraConfig, RraRecord,
};
pub use sensor::{
    control_payload, jointly_authorize, sightings_from_trips, CountReport, JointAuthorization,
    Lifecycle, Measurement, Party, SensorAction, SensorError, SensorState, Sighting,
};

use crate::crypto::{CoinFlipError, CryptoError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AuditError {
    #[error("audit probability {0} is outside (0, 1)")]
    BadProbability(f64),
    #[error("no sensors deployed")]
    NoSensors,
    #[error("need {needed} sensors but only {have} are deployed")]
    TooFewSensors { needed: usize, have: usize },
    #[error("malformed sensor message")]
    Malformed,
    #[error(transparent)]
    Sensor(#[from] SensorError),
    #[error(transparent)]
    CoinFlip(#[from] CoinFlipError),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}
