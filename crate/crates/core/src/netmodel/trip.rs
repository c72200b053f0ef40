use std::ops::Range;

use crate::codec::{DecodeError, Reader, Writer};
use crate::crypto::{verify_sig, PublicKey, Signature};

use super::{EdgeId, NetError, Network, VertexId};

#[derive(Clone, Debug, PartialEq)]
pub struct Vehicle {
    pub vehicle_id: u64,
    pub make_model: String,
    /// Grams emitted per edge traversal.
    pub emission_rate: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrajectoryStep {
    pub edge: EdgeId,
    pub entry_time: u32,
}

/// The signed message a rider receives at match time.
#[derive(Clone, Debug, PartialEq)]
pub struct MatchNotice {
    pub message: String,
    pub signature: Signature,
}

impl MatchNotice {
    pub fn message_for(vehicle_id: u64, time: u32) -> String {
        format!("You have been matched to vehicle {vehicle_id} at time {time}")
    }

    /// Extracts `(vehicle_id, time)` from a well-formed message.
    pub fn parse_message(message: &str) -> Option<(u64, u32)> {
        let rest = message.strip_prefix("You have been matched to vehicle ")?;
        let (veh, time) = rest.split_once(" at time ")?;
        Some((veh.parse().ok()?, time.parse().ok()?))
    }

    /// True when the signature is genuine and the message names `vehicle_id`
    /// and `time`.
    pub fn attests(&self, pk: &PublicKey, vehicle_id: u64, time: u32) -> bool {
        Self::parse_message(&self.message) == Some((vehicle_id, time))
            && verify_sig(pk, self.message.as_bytes(), &self.signature)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TripRecord {
    pub trip_id: u64,
    pub pickup_loc: VertexId,
    pub dropoff_loc: VertexId,
    pub request_time: u32,
    pub match_time: u32,
    pub pickup_time: u32,
    pub dropoff_time: u32,
    pub driver_wage: f64,
    pub trip_fare: f64,
    pub trajectory: Vec<TrajectoryStep>,
    pub vehicle: Vehicle,
    pub match_notice: Option<MatchNotice>,
}

impl TripRecord {
    /// Canonical byte encoding, fields in declaration order.
    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.u64(self.trip_id)
            .u64(self.pickup_loc as u64)
            .u64(self.dropoff_loc as u64)
            .u32(self.request_time)
            .u32(self.match_time)
            .u32(self.pickup_time)
            .u32(self.dropoff_time)
            .f64(self.driver_wage)
            .f64(self.trip_fare);
        let mut traj = Writer::new();
        traj.u32(self.trajectory.len() as u32);
        for s in &self.trajectory {
            traj.u64(s.edge as u64).u32(s.entry_time);
        }
        w.nested(&traj);
        let mut veh = Writer::new();
        veh.u64(self.vehicle.vehicle_id)
            .str(&self.vehicle.make_model)
            .f64(self.vehicle.emission_rate);
        w.nested(&veh);
        match &self.match_notice {
            None => {
                w.bool(false);
            }
            Some(n) => {
                w.bool(true).str(&n.message).bytes(&n.signature.0);
            }
        }
        w.finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let trip_id = r.u64()?;
        let pickup_loc = r.u64()? as usize;
        let dropoff_loc = r.u64()? as usize;
        let request_time = r.u32()?;
        let match_time = r.u32()?;
        let pickup_time = r.u32()?;
        let dropoff_time = r.u32()?;
        let driver_wage = r.f64()?;
        let trip_fare = r.f64()?;
        let mut traj = r.nested()?;
        let count = traj.u32()?;
        let mut trajectory = Vec::new();
        for _ in 0..count {
            let edge = traj.u64()? as usize;
            let entry_time = traj.u32()?;
            trajectory.push(TrajectoryStep { edge, entry_time });
        }
        traj.finish()?;
        let mut veh = r.nested()?;
        let vehicle = Vehicle {
            vehicle_id: veh.u64()?,
            make_model: veh.str()?.to_string(),
            emission_rate: veh.f64()?,
        };
        veh.finish()?;
        let match_notice = if r.bool()? {
            Some(MatchNotice {
                message: r.str()?.to_string(),
                signature: Signature(r.bytes()?.to_vec()),
            })
        } else {
            None
        };
        r.finish()?;
        Ok(Self {
            trip_id,
            pickup_loc,
            dropoff_loc,
            request_time,
            match_time,
            pickup_time,
            dropoff_time,
            driver_wage,
            trip_fare,
            trajectory,
            vehicle,
            match_notice,
        })
    }

    /// Wait time experienced by the rider.
    pub fn wait_time(&self) -> u32 {
        self.pickup_time.saturating_sub(self.request_time)
    }

    /// How long the vehicle spent on each trajectory step: the gap to the
    /// next entry, or to the dropoff for the last step.
    pub fn step_durations(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.trajectory.len());
        for (k, s) in self.trajectory.iter().enumerate() {
            let end = self
                .trajectory
                .get(k + 1)
                .map_or(self.dropoff_time, |n| n.entry_time);
            out.push(end.saturating_sub(s.entry_time));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Violation {
    TimestampOrder,
    UnknownVertex,
    EmptyTrajectory,
    UnknownEdge,
    BrokenPath,
    EntryOrder,
    TrajectoryOutOfWindow,
    PickupMismatch,
    DropoffMismatch,
}

/// Checks every structural invariant of a trip record. An empty list means
/// the trip is well formed.
pub fn validate_trip(trip: &TripRecord, network: &Network) -> Vec<Violation> {
    let mut v = Vec::new();
    if !(trip.request_time <= trip.match_time
        && trip.match_time <= trip.pickup_time
        && trip.pickup_time <= trip.dropoff_time)
    {
        v.push(Violation::TimestampOrder);
    }
    let n = network.vertex_count();
    if trip.pickup_loc >= n || trip.dropoff_loc >= n {
        v.push(Violation::UnknownVertex);
    }
    if trip.trajectory.is_empty() {
        if trip.pickup_loc != trip.dropoff_loc {
            v.push(Violation::EmptyTrajectory);
        }
        return v;
    }
    let edges: Option<Vec<_>> = trip
        .trajectory
        .iter()
        .map(|s| network.edge(s.edge))
        .collect();
    let Some(edges) = edges else {
        v.push(Violation::UnknownEdge);
        return v;
    };
    if edges.windows(2).any(|w| w[0].dst != w[1].src) {
        v.push(Violation::BrokenPath);
    }
    if trip
        .trajectory
        .windows(2)
        .any(|w| w[1].entry_time <= w[0].entry_time)
    {
        v.push(Violation::EntryOrder);
    }
    let first = trip.trajectory[0].entry_time;
    let last = trip.trajectory[trip.trajectory.len() - 1].entry_time;
    if first < trip.match_time || last >= trip.dropoff_time {
        v.push(Violation::TrajectoryOutOfWindow);
    }
    // Period 3 starts at the pickup location and ends at the dropoff.
    let p3 = trip
        .trajectory
        .iter()
        .position(|s| s.entry_time >= trip.pickup_time);
    match p3 {
        Some(k) if edges[k].src != trip.pickup_loc => v.push(Violation::PickupMismatch),
        None if trip.pickup_loc != trip.dropoff_loc => v.push(Violation::PickupMismatch),
        _ => {}
    }
    if p3.is_some() && edges[edges.len() - 1].dst != trip.dropoff_loc {
        v.push(Violation::DropoffMismatch);
    }
    v
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Period {
    /// Driving to the pickup.
    Two,
    /// Carrying the passenger.
    Three,
}

impl Period {
    pub fn number(self) -> u8 {
        match self {
            Period::Two => 2,
            Period::Three => 3,
        }
    }
}

/// Period 2 is `[match, pickup)` and Period 3 is `[pickup, dropoff]`.
pub fn period_intervals(trip: &TripRecord) -> Result<(Range<u32>, Range<u32>), NetError> {
    if !(trip.match_time <= trip.pickup_time && trip.pickup_time <= trip.dropoff_time) {
        return Err(NetError::InvalidTrip(vec![Violation::TimestampOrder]));
    }
    // The second range is closed in meaning; the Range end marks dropoff itself.
    Ok((
        trip.match_time..trip.pickup_time,
        trip.pickup_time..trip.dropoff_time,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Traversal {
    pub edge: EdgeId,
    pub entry_time: u32,
    pub period: Period,
}

/// One traversal per trajectory step. An entry exactly at the pickup time
/// belongs to Period 3.
pub fn traversals(trip: &TripRecord) -> Result<Vec<Traversal>, NetError> {
    let (p2, _) = period_intervals(trip)?;
    Ok(trip
        .trajectory
        .iter()
        .map(|s| Traversal {
            edge: s.edge,
            entry_time: s.entry_time,
            period: if p2.contains(&s.entry_time) {
                Period::Two
            } else {
                Period::Three
            },
        })
        .collect())
}

/// Total emissions of a set of trips: per-vehicle rate times traversals.
pub fn emissions(trips: &[TripRecord]) -> f64 {
    trips
        .iter()
        .map(|t| t.vehicle.emission_rate * t.trajectory.len() as f64)
        .sum()
}
