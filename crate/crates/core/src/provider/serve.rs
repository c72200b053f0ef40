//! Trip synthesis: turning ride requests into served trip records.

use crate::crypto::{sign, KeyPair};
use crate::netmodel::{
    EdgeId, MatchNotice, Network, TrajectoryStep, TripRecord, Vehicle, VertexId,
};

use super::ProviderError;

/// A rider's request to travel from `origin` to `dest`, made at `time`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Request {
    pub id: u64,
    pub origin: VertexId,
    pub dest: VertexId,
    pub time: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FleetVehicle {
    pub vehicle: Vehicle,
    /// Where the vehicle waits when it is matched.
    pub home: VertexId,
}

/// How the MP dispatches and prices rides.
#[derive(Clone, Debug, PartialEq)]
pub struct ServePolicy {
    pub fleet: Vec<FleetVehicle>,
    /// Steps between request and match.
    pub match_delay: u32,
    pub fare_base: f64,
    /// Fare per Period-3 edge.
    pub fare_per_edge: f64,
    /// Wage per Period-2 edge.
    pub wage_alpha: f64,
    /// Wage per Period-3 edge.
    pub wage_beta: f64,
}

impl Default for ServePolicy {
    fn default() -> Self {
        Self {
            fleet: Vec::new(),
            match_delay: 1,
            fare_base: 5.0,
            fare_per_edge: 2.0,
            wage_alpha: 1.0,
            wage_beta: 1.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum UnservedReason {
    Unreachable,
    NoVehicle,
    BadRequest,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ServeOutcome {
    pub trips: Vec<TripRecord>,
    pub unserved: Vec<(u64, UnservedReason)>,
}

/// Serves each request with the closest vehicle (free-flow time to the
/// origin, ties to the lowest fleet index) along shortest free-flow paths.
///
/// The approach leg avoids the edges of the delivery leg so that no trip
/// traverses an edge twice. Vehicles are not tracked between trips.
pub fn serve_and_record(
    requests: &[Request],
    network: &Network,
    policy: &ServePolicy,
    keys: &KeyPair,
) -> Result<ServeOutcome, ProviderError> {
    let mut out = ServeOutcome::default();
    let tau = network.tau_weights();
    for req in requests {
        let n = network.vertex_count();
        if req.origin >= n || req.dest >= n || req.origin == req.dest {
            out.unserved.push((req.id, UnservedReason::BadRequest));
            continue;
        }
        let Some((deliver, _)) = network.shortest_path(req.origin, req.dest, &tau) else {
            out.unserved.push((req.id, UnservedReason::Unreachable));
            continue;
        };
        let mut approach_w = tau.clone();
        for &e in &deliver {
            approach_w[e] = f64::INFINITY;
        }
        let best = policy
            .fleet
            .iter()
            .filter_map(|v| {
                network
                    .shortest_path(v.home, req.origin, &approach_w)
                    .filter(|(_, d)| d.is_finite())
                    .map(|(p, d)| (d, p, v))
            })
            .min_by(|a, b| a.0.total_cmp(&b.0));
        let Some((_, approach, vehicle)) = best else {
            out.unserved.push((req.id, UnservedReason::NoVehicle));
            continue;
        };
        out.trips.push(record(
            req, network, policy, keys, vehicle, &approach, &deliver,
        )?);
    }
    Ok(out)
}

fn record(
    req: &Request,
    network: &Network,
    policy: &ServePolicy,
    keys: &KeyPair,
    vehicle: &FleetVehicle,
    approach: &[EdgeId],
    deliver: &[EdgeId],
) -> Result<TripRecord, ProviderError> {
    let match_time = req.time + policy.match_delay;
    let mut clock = match_time;
    let mut trajectory = Vec::with_capacity(approach.len() + deliver.len());
    let mut pickup_time = match_time;
    for (leg, edges) in [approach, deliver].into_iter().enumerate() {
        if leg == 1 {
            pickup_time = clock;
        }
        for &e in edges {
            trajectory.push(TrajectoryStep {
                edge: e,
                entry_time: clock,
            });
            clock += network.edges()[e].tau;
        }
    }
    let message = MatchNotice::message_for(vehicle.vehicle.vehicle_id, match_time);
    let signature = sign(&keys.secret, message.as_bytes())?;
    Ok(TripRecord {
        trip_id: req.id,
        pickup_loc: req.origin,
        dropoff_loc: req.dest,
        request_time: req.time,
        match_time,
        pickup_time,
        dropoff_time: clock,
        driver_wage: policy.wage_alpha * approach.len() as f64
            + policy.wage_beta * deliver.len() as f64,
        trip_fare: policy.fare_base + policy.fare_per_edge * deliver.len() as f64,
        trajectory,
        vehicle: vehicle.vehicle.clone(),
        match_notice: Some(MatchNotice { message, signature }),
    })
}
