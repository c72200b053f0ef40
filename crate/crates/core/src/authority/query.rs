//! Query functions `g(Λ)` and their evaluation on a witness dataset.

use std::collections::BTreeMap;

use crate::crypto::PublicKey;
use crate::flowopt::{
    check_kkt, compute_tolls, kkt_certificate, solve_social_optimum_tt, solve_sop, verify_sop,
    KktCertificate, MaObjective, MpObjective, Project, RouteCertificate,
};
use crate::netmodel::{
    emissions, traversals, DemandTensor, Network, Period, RateMatrix, TripRecord,
};

use super::EvalError;

/// One regulation predicate `rho_t`, evaluating to 0 or 1.
#[derive(Clone, Debug, PartialEq)]
pub enum RegPredicate {
    /// Mean wait times of any two regions differ by at most `tau`.
    WaitTimeEquity { regions: Vec<usize>, tau: f64 },
    /// The MP's share of each road's traffic stays at or below `limit`.
    CongestionContribution { background: Vec<f64>, limit: f64 },
    /// Every step takes at least `length / limit` time. A non-positive limit
    /// means the road is unrestricted.
    SpeedLimit { limits: Vec<f64> },
    /// Every trip carries a genuine signed match notice for its vehicle and
    /// match time.
    Period2Accuracy,
    /// Total emissions at or below the limit.
    EmissionsLimit(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Query {
    TripCount,
    /// Product of regulation predicates.
    Regulation(Vec<RegPredicate>),
    /// 1 iff every wage equals `alpha * (Period-2 edges) + beta * (Period-3 edges)`.
    Wage {
        alpha: f64,
        beta: f64,
    },
    WaitEquity {
        regions: Vec<usize>,
        tau: f64,
    },
    /// Marginal-cost tolls at the travel-time social optimum of the demand
    /// rates `counts / period`.
    CongestionPricing {
        period: f64,
    },
    /// Index of the winning infrastructure project.
    SopSelection {
        projects: Vec<Project>,
        period: f64,
        mp: MpObjective,
        ma: MaObjective,
    },
    CongestionContribution {
        background: Vec<f64>,
        threshold: f64,
    },
    Emissions {
        threshold: f64,
    },
    /// Hands over the raw trip records. Never admissible; it exists so the
    /// MP's refusal path can be exercised.
    RawTrips,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum QueryKind {
    TripCount,
    Regulation,
    Wage,
    WaitEquity,
    CongestionPricing,
    SopSelection,
    CongestionContribution,
    Emissions,
    RawTrips,
}

impl QueryKind {
    pub const ALL: [QueryKind; 9] = [
        QueryKind::TripCount,
        QueryKind::Regulation,
        QueryKind::Wage,
        QueryKind::WaitEquity,
        QueryKind::CongestionPricing,
        QueryKind::SopSelection,
        QueryKind::CongestionContribution,
        QueryKind::Emissions,
        QueryKind::RawTrips,
    ];

    pub fn name(self) -> &'static str {
        match self {
            QueryKind::TripCount => "trip_count",
            QueryKind::Regulation => "regulation",
            QueryKind::Wage => "wage",
            QueryKind::WaitEquity => "wait_equity",
            QueryKind::CongestionPricing => "congestion_pricing",
            QueryKind::SopSelection => "sop",
            QueryKind::CongestionContribution => "congestion_contribution",
            QueryKind::Emissions => "emissions",
            QueryKind::RawTrips => "raw_trips",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    /// Every kind except `RawTrips`.
    pub fn default_admissible() -> Vec<QueryKind> {
        Self::ALL
            .into_iter()
            .filter(|k| *k != QueryKind::RawTrips)
            .collect()
    }
}

impl Query {
    pub fn kind(&self) -> QueryKind {
        match self {
            Query::TripCount => QueryKind::TripCount,
            Query::Regulation(_) => QueryKind::Regulation,
            Query::Wage { .. } => QueryKind::Wage,
            Query::WaitEquity { .. } => QueryKind::WaitEquity,
            Query::CongestionPricing { .. } => QueryKind::CongestionPricing,
            Query::SopSelection { .. } => QueryKind::SopSelection,
            Query::CongestionContribution { .. } => QueryKind::CongestionContribution,
            Query::Emissions { .. } => QueryKind::Emissions,
            Query::RawTrips => QueryKind::RawTrips,
        }
    }

    /// Optimization queries are verified through a certificate instead of
    /// being re-solved.
    pub fn needs_certificate(&self) -> bool {
        matches!(
            self,
            Query::CongestionPricing { .. } | Query::SopSelection { .. }
        )
    }
}

/// The message `z`.
#[derive(Clone, Debug, PartialEq)]
pub enum QueryValue {
    Count(u64),
    Bit(bool),
    Vector(Vec<f64>),
    Choice(usize),
    Records(Vec<Vec<u8>>),
}

impl QueryValue {
    /// Equality, with vectors compared entrywise to within `tol`.
    pub fn matches(&self, other: &QueryValue, tol: f64) -> bool {
        match (self, other) {
            (QueryValue::Vector(a), QueryValue::Vector(b)) => {
                a.len() == b.len()
                    && a.iter()
                        .zip(b)
                        .all(|(x, y)| (x - y).abs() <= tol * (1.0 + x.abs()))
            }
            _ => self == other,
        }
    }

    pub fn to_text(&self) -> String {
        match self {
            QueryValue::Count(c) => format!("count {c}"),
            QueryValue::Bit(b) => format!("bit {}", u8::from(*b)),
            QueryValue::Vector(v) => {
                let parts: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
                format!("vector {}", parts.join(" "))
            }
            QueryValue::Choice(i) => format!("choice {i}"),
            QueryValue::Records(r) => format!("records {}", r.len()),
        }
    }
}

/// Optimization evidence `c_w` carried in the witness.
#[derive(Clone, Debug, Default, PartialEq)]
pub enum Certificate {
    #[default]
    None,
    Kkt(KktCertificate),
    Sop(Vec<RouteCertificate>),
}

/// Public inputs an evaluation needs besides the trips.
#[derive(Clone, Copy, Debug)]
pub struct EvalContext<'a> {
    pub network: &'a Network,
    pub pk_mp: &'a PublicKey,
    /// Numeric tolerance for certificate checks.
    pub tol: f64,
}

fn rates(trips: &[TripRecord], network: &Network, period: f64) -> Result<RateMatrix, EvalError> {
    if !(period > 0.0 && period.is_finite()) {
        return Err(EvalError::BadParams("period must be positive".into()));
    }
    let d = DemandTensor::from_trips(trips, network.vertex_count(), network.horizon)?;
    Ok(d.to_rates(period))
}

/// Prover side: computes `z` and, for optimization queries, the certificate
/// that lets the verifier avoid re-solving.
pub fn answer(
    query: &Query,
    trips: &[TripRecord],
    ctx: &EvalContext,
) -> Result<(QueryValue, Certificate), EvalError> {
    let cert = match query {
        Query::CongestionPricing { period } => {
            let r = rates(trips, ctx.network, *period)?;
            let opt = solve_social_optimum_tt(ctx.network, &r)?;
            Certificate::Kkt(kkt_certificate(ctx.network, &opt))
        }
        Query::SopSelection {
            projects,
            period,
            mp,
            ma,
        } => {
            let r = rates(trips, ctx.network, *period)?;
            Certificate::Sop(solve_sop(ctx.network, projects, &r, mp, ma)?.certificates)
        }
        _ => Certificate::None,
    };
    let z = eval_query(query, trips, ctx, &cert)?;
    Ok((z, cert))
}

/// Verifier side: evaluates `g` on the witness trips. Optimization queries
/// are checked through `cert` and never re-solved.
pub fn eval_query(
    query: &Query,
    trips: &[TripRecord],
    ctx: &EvalContext,
    cert: &Certificate,
) -> Result<QueryValue, EvalError> {
    let net = ctx.network;
    Ok(match query {
        Query::TripCount => QueryValue::Count(trips.len() as u64),
        Query::Regulation(preds) => {
            let mut all = true;
            for p in preds {
                all &= predicate(p, trips, ctx)?;
            }
            QueryValue::Bit(all)
        }
        Query::Wage { alpha, beta } => QueryValue::Bit(wages_ok(trips, *alpha, *beta)?),
        Query::WaitEquity { regions, tau } => QueryValue::Bit(wait_equity(trips, regions, *tau)?),
        Query::CongestionPricing { period } => {
            let Certificate::Kkt(kkt) = cert else {
                return Err(EvalError::CannotVerify);
            };
            let r = rates(trips, net, *period)?;
            let report = check_kkt(net, &r, kkt, ctx.tol);
            if !report.accepted {
                return Err(EvalError::CertificateRejected(report.residuals.to_string()));
            }
            QueryValue::Vector(compute_tolls(net, &kkt.edge_flows(net.edge_count())))
        }
        Query::SopSelection {
            projects,
            period,
            mp,
            ma,
        } => {
            let Certificate::Sop(certs) = cert else {
                return Err(EvalError::CannotVerify);
            };
            let r = rates(trips, net, *period)?;
            let out = verify_sop(net, projects, &r, mp, ma, certs, ctx.tol)
                .map_err(EvalError::CertificateRejected)?;
            QueryValue::Choice(out.winner)
        }
        Query::CongestionContribution {
            background,
            threshold,
        } => QueryValue::Bit(congestion_ok(trips, net, background, *threshold)?),
        Query::Emissions { threshold } => QueryValue::Bit(emissions(trips) <= *threshold),
        Query::RawTrips => QueryValue::Records(trips.iter().map(TripRecord::encode).collect()),
    })
}

fn predicate(p: &RegPredicate, trips: &[TripRecord], ctx: &EvalContext) -> Result<bool, EvalError> {
    Ok(match p {
        RegPredicate::WaitTimeEquity { regions, tau } => wait_equity(trips, regions, *tau)?,
        RegPredicate::CongestionContribution { background, limit } => {
            congestion_ok(trips, ctx.network, background, *limit)?
        }
        RegPredicate::SpeedLimit { limits } => speed_ok(trips, ctx.network, limits)?,
        RegPredicate::Period2Accuracy => trips.iter().all(|t| {
            t.match_notice
                .as_ref()
                .is_some_and(|n| n.attests(ctx.pk_mp, t.vehicle.vehicle_id, t.match_time))
        }),
        RegPredicate::EmissionsLimit(limit) => emissions(trips) <= *limit,
    })
}

/// `(Period-2 steps, Period-3 steps)` of a trip.
pub fn period_counts(trip: &TripRecord) -> Result<(usize, usize), EvalError> {
    let tr = traversals(trip)?;
    let p2 = tr.iter().filter(|t| t.period == Period::Two).count();
    Ok((p2, tr.len() - p2))
}

fn wages_ok(trips: &[TripRecord], alpha: f64, beta: f64) -> Result<bool, EvalError> {
    for t in trips {
        let (p2, p3) = period_counts(t)?;
        let owed = alpha * p2 as f64 + beta * p3 as f64;
        if (t.driver_wage - owed).abs() > 1e-9 * (1.0 + owed.abs()) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Mean wait (pickup minus request) per region of the pickup vertex.
pub fn region_mean_waits(
    trips: &[TripRecord],
    regions: &[usize],
) -> Result<BTreeMap<usize, f64>, EvalError> {
    let mut acc: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for t in trips {
        let region = *regions.get(t.pickup_loc).ok_or_else(|| {
            EvalError::BadParams(format!("vertex {} has no region", t.pickup_loc))
        })?;
        let e = acc.entry(region).or_insert((0.0, 0));
        e.0 += f64::from(t.wait_time());
        e.1 += 1;
    }
    Ok(acc
        .into_iter()
        .map(|(r, (s, c))| (r, s / c as f64))
        .collect())
}

fn wait_equity(trips: &[TripRecord], regions: &[usize], tau: f64) -> Result<bool, EvalError> {
    let means = region_mean_waits(trips, regions)?;
    let lo = means.values().cloned().fold(f64::INFINITY, f64::min);
    let hi = means.values().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(means.len() < 2 || hi - lo <= tau)
}

/// Number of MP traversals per edge.
pub fn edge_traversal_counts(trips: &[TripRecord], m: usize) -> Vec<u64> {
    let mut c = vec![0u64; m];
    for t in trips {
        for s in &t.trajectory {
            if let Some(x) = c.get_mut(s.edge) {
                *x += 1;
            }
        }
    }
    c
}

fn congestion_ok(
    trips: &[TripRecord],
    net: &Network,
    background: &[f64],
    limit: f64,
) -> Result<bool, EvalError> {
    if background.len() != net.edge_count() {
        return Err(EvalError::BadParams(
            "background table must have one entry per edge".into(),
        ));
    }
    let counts = edge_traversal_counts(trips, net.edge_count());
    Ok(counts.iter().zip(background).all(|(&c, &b)| {
        if c == 0 {
            true
        } else {
            b > 0.0 && c as f64 / b <= limit
        }
    }))
}

fn speed_ok(trips: &[TripRecord], net: &Network, limits: &[f64]) -> Result<bool, EvalError> {
    if limits.len() != net.edge_count() {
        return Err(EvalError::BadParams(
            "speed limits must have one entry per edge".into(),
        ));
    }
    for t in trips {
        for (s, d) in t.trajectory.iter().zip(t.step_durations()) {
            let Some(edge) = net.edge(s.edge) else {
                return Ok(false);
            };
            let limit = limits[s.edge];
            if limit > 0.0 && f64::from(d) * net.dt < edge.length / limit {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
