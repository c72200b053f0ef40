//! Honest and adversarial ways of turning ground truth into the committed
//! dataset.

use std::collections::BTreeSet;

use crate::crypto::{sign, KeyPair};
use crate::netmodel::{validate_trip, MatchNotice, Network, TripRecord};

use super::ProviderError;

/// A change to one field of a committed trip.
#[derive(Clone, Debug, PartialEq)]
pub enum TripEdit {
    Wage(f64),
    Fare(f64),
    RequestTime(u32),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub enum Strategy {
    #[default]
    Honest,
    /// Leave these trips out of the commitment.
    OmitTrips(BTreeSet<u64>),
    /// Commit fabricated trips alongside the real ones.
    InjectTrips(Vec<TripRecord>),
    /// Commit a modified version of one trip.
    TamperTrip { trip_id: u64, edit: TripEdit },
    /// Report the match `shift` steps later than it happened, so part of the
    /// Period-2 drive looks like Period 1 and drops out of the record.
    MisreportPeriod { trip_id: u64, shift: u32 },
}

impl Strategy {
    pub fn is_honest(&self) -> bool {
        matches!(self, Strategy::Honest)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Honest => "honest",
            Strategy::OmitTrips(_) => "omit",
            Strategy::InjectTrips(_) => "inject",
            Strategy::TamperTrip { .. } => "tamper",
            Strategy::MisreportPeriod { .. } => "misreport",
        }
    }

    /// The dataset the MP commits to. `truth` is never modified.
    pub fn apply(
        &self,
        truth: &[TripRecord],
        network: &Network,
        keys: &KeyPair,
    ) -> Result<Vec<TripRecord>, ProviderError> {
        let mut out = truth.to_vec();
        match self {
            Strategy::Honest => {}
            Strategy::OmitTrips(ids) => out.retain(|t| !ids.contains(&t.trip_id)),
            Strategy::InjectTrips(fakes) => {
                for f in fakes {
                    let v = validate_trip(f, network);
                    if !v.is_empty() {
                        return Err(ProviderError::InvalidFabrication(f.trip_id, v));
                    }
                    out.push(f.clone());
                }
            }
            Strategy::TamperTrip { trip_id, edit } => {
                let t = find(&mut out, *trip_id)?;
                match edit {
                    TripEdit::Wage(w) => t.driver_wage = *w,
                    TripEdit::Fare(f) => t.trip_fare = *f,
                    TripEdit::RequestTime(r) => t.request_time = *r,
                }
            }
            Strategy::MisreportPeriod { trip_id, shift } => {
                let t = find(&mut out, *trip_id)?;
                let reported = (t.match_time + shift).min(t.pickup_time);
                t.trajectory.retain(|s| s.entry_time >= reported);
                t.match_time = reported;
                // The MP holds the signing key, so the record stays
                // self-consistent; only the rider's copy of the notice differs.
                let message = MatchNotice::message_for(t.vehicle.vehicle_id, reported);
                let signature = sign(&keys.secret, message.as_bytes())?;
                t.match_notice = Some(MatchNotice { message, signature });
            }
        }
        Ok(out)
    }
}

fn find(trips: &mut [TripRecord], id: u64) -> Result<&mut TripRecord, ProviderError> {
    trips
        .iter_mut()
        .find(|t| t.trip_id == id)
        .ok_or(ProviderError::UnknownTrip(id))
}
