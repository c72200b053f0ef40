//! Scenario files.
//!
//! A scenario is a plain-text file of top-level settings and brace-delimited
//! sections. `#` starts a comment.
//!
//! ```text
//! name honest_small
//! seed 7
//! backend opaque          # or transparent
//! tol 1e-6
//! fine rider 50
//! fine rra u_d 100 u_h 80 margin 1 floor 10
//!
//! network {
//!   vertices 3
//!   horizon 40
//!   edge 0 1 affine 1 0.5
//! }
//! demand {
//!   vehicle 1 0 sedan 120        # id home model grams-per-edge
//!   request 1 0 2 3              # id origin dest time
//!   generate 10                  # seeded random requests
//!   policy match_delay 1 fare_base 5 fare_per_edge 2 alpha 1 beta 1.5
//! }
//! mp {
//!   strategy honest              # omit <ids..> | tamper <id> wage|fare|request <v>
//!                                # | misreport <id> <shift>
//!                                # | inject <id> <start> <vehicle> <edges..> (repeatable)
//!   admissible trip_count wage   # defaults to every kind except raw_trips
//! }
//! audit {
//!   mode ara epsilon 0 noise 0   # or: mode rra p 0.3 rounds 10 round_len 4
//!   riders all                   # none | <trip ids..>
//! }
//! queries {
//!   query trip_count {}
//!   query wage { alpha 1 beta 1.5 }
//! }
//! ```

use std::collections::BTreeSet;

use thiserror::Error;

use crate::authority::{FineSchedule, Query, QueryKind, RegPredicate};
use crate::flowopt::{parse_edit, MaObjective, MpObjective, Project};
use crate::netmodel::{NetError, Network, TripRecord, Vehicle};
use crate::proofsys::Backend;
use crate::provider::{fabricate_trip, FleetVehicle, Request, ServePolicy, Strategy, TripEdit};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}: {msg}")]
pub struct ScenarioError {
    pub line: usize,
    pub msg: String,
}

fn err<T>(line: usize, msg: impl Into<String>) -> Result<T, ScenarioError> {
    Err(ScenarioError {
        line,
        msg: msg.into(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum AuditSpec {
    None,
    /// `noise` is the chance that a sensor misses any one pass.
    Ara {
        epsilon: f64,
        noise: f64,
    },
    Rra {
        p: f64,
        rounds: u32,
        round_len: u32,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RiderSpec {
    All,
    None,
    Some(BTreeSet<u64>),
}

impl RiderSpec {
    pub fn reports(&self, trip_id: u64) -> bool {
        match self {
            RiderSpec::All => true,
            RiderSpec::None => false,
            RiderSpec::Some(ids) => ids.contains(&trip_id),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub backend: Backend,
    pub tol: f64,
    pub fines: FineSchedule,
    pub network: Network,
    pub policy: ServePolicy,
    pub requests: Vec<Request>,
    /// Extra random requests drawn from the run seed.
    pub generate: usize,
    pub strategy: Strategy,
    pub admissible: Vec<QueryKind>,
    pub audit: AuditSpec,
    pub riders: RiderSpec,
    pub queries: Vec<Query>,
}

/// A line or a brace block, with its 1-based line number.
#[derive(Clone, Debug)]
enum Item {
    Line(usize, Vec<String>),
    Block(usize, Vec<String>, Vec<Item>),
}

fn tokenize(text: &str) -> Result<Vec<Item>, ScenarioError> {
    let mut stack: Vec<(usize, Vec<String>, Vec<Item>)> = vec![(0, vec![], vec![])];
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        if line == "}" {
            if stack.len() == 1 {
                return err(ln, "unmatched `}`");
            }
            let (l, h, items) = stack.pop().unwrap();
            stack.last_mut().unwrap().2.push(Item::Block(l, h, items));
            continue;
        }
        if let Some(head) = line.strip_suffix('{') {
            stack.push((ln, words(head), vec![]));
            continue;
        }
        // One-line block: `query wage { alpha 1 beta 2 }` or `query x {}`.
        if let (Some(open), true) = (line.find('{'), line.ends_with('}')) {
            let head = words(&line[..open]);
            let body = words(&line[open + 1..line.len() - 1]);
            let inner = if body.is_empty() {
                vec![]
            } else {
                vec![Item::Line(ln, body)]
            };
            stack
                .last_mut()
                .unwrap()
                .2
                .push(Item::Block(ln, head, inner));
            continue;
        }
        stack
            .last_mut()
            .unwrap()
            .2
            .push(Item::Line(ln, words(line)));
    }
    if stack.len() > 1 {
        let (l, h, _) = stack.last().unwrap();
        return err(*l, format!("block `{}` is never closed", h.join(" ")));
    }
    Ok(stack.pop().unwrap().2)
}

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

fn num<T: std::str::FromStr>(ln: usize, w: &[String], i: usize) -> Result<T, ScenarioError> {
    match w.get(i) {
        Some(s) => s.parse().or_else(|_| err(ln, format!("bad number {s:?}"))),
        None => err(
            ln,
            format!(
                "`{}` needs more arguments",
                w.first().map(String::as_str).unwrap_or("")
            ),
        ),
    }
}

/// `key value key value ...` pairs from word `start` on.
fn pairs(ln: usize, w: &[String], start: usize) -> Result<Vec<(String, f64)>, ScenarioError> {
    let rest = &w[start.min(w.len())..];
    if !rest.len().is_multiple_of(2) {
        return err(ln, "expected `key value` pairs");
    }
    rest.chunks(2)
        .map(|c| {
            Ok((
                c[0].clone(),
                c[1].parse()
                    .or_else(|_| err(ln, format!("bad number {:?}", c[1])))?,
            ))
        })
        .collect()
}

fn nums(ln: usize, w: &[String]) -> Result<Vec<f64>, ScenarioError> {
    w.iter()
        .map(|s| s.parse().or_else(|_| err(ln, format!("bad number {s:?}"))))
        .collect()
}

fn body_lines(items: &[Item]) -> Result<Vec<(usize, Vec<String>)>, ScenarioError> {
    items
        .iter()
        .map(|it| match it {
            Item::Line(l, w) => Ok((*l, w.clone())),
            Item::Block(l, h, _) => err(*l, format!("unexpected block `{}`", h.join(" "))),
        })
        .collect()
}

/// Lines as a single word stream, for one-line blocks like `{ alpha 1 beta 2 }`.
fn flat(items: &[Item]) -> Result<(usize, Vec<String>), ScenarioError> {
    let lines = body_lines(items)?;
    let ln = lines.first().map(|l| l.0).unwrap_or(0);
    Ok((ln, lines.into_iter().flat_map(|l| l.1).collect()))
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let items = tokenize(text)?;
        let mut name = String::from("unnamed");
        let mut seed = 0u64;
        let mut backend = Backend::OpaqueSealed;
        let mut tol = 1e-6;
        let mut fines = FineSchedule::default();
        let mut network = None;
        let mut demand = None;
        let mut mp = None;
        let mut audit = None;
        let mut queries = None;

        for it in &items {
            match it {
                Item::Line(ln, w) => match w[0].as_str() {
                    "name" => {
                        name = w.get(1).cloned().ok_or(ScenarioError {
                            line: *ln,
                            msg: "name needs a value".into(),
                        })?
                    }
                    "seed" => seed = num(*ln, w, 1)?,
                    "tol" => tol = num(*ln, w, 1)?,
                    "backend" => {
                        backend = match w.get(1).and_then(|b| Backend::from_name(b)) {
                            Some(b) => b,
                            None => return err(*ln, "backend must be `opaque` or `transparent`"),
                        }
                    }
                    "fine" => match w.get(1).map(String::as_str) {
                        Some("rider") => fines.rider_witness = num(*ln, w, 2)?,
                        Some("rra") => {
                            for (k, v) in pairs(*ln, w, 2)? {
                                match k.as_str() {
                                    "u_d" => fines.rra.u_d = v,
                                    "u_h" => fines.rra.u_h = v,
                                    "margin" => fines.rra.margin = v,
                                    "floor" => fines.rra.floor = v,
                                    other => {
                                        return err(
                                            *ln,
                                            format!("unknown fine parameter {other:?}"),
                                        )
                                    }
                                }
                            }
                        }
                        _ => return err(*ln, "fine must be `rider <amount>` or `rra <params>`"),
                    },
                    other => return err(*ln, format!("unknown setting {other:?}")),
                },
                Item::Block(ln, h, body) => {
                    let slot = match h.first().map(String::as_str) {
                        Some("network") => &mut network,
                        Some("demand") => &mut demand,
                        Some("mp") => &mut mp,
                        Some("audit") => &mut audit,
                        Some("queries") => &mut queries,
                        _ => return err(*ln, format!("unknown section `{}`", h.join(" "))),
                    };
                    if slot.is_some() {
                        return err(*ln, format!("section `{}` appears twice", h[0]));
                    }
                    *slot = Some((*ln, body.clone()));
                }
            }
        }

        let (net_ln, net_body) = network.ok_or(ScenarioError {
            line: 0,
            msg: "missing `network` section".into(),
        })?;
        let net_lines = body_lines(&net_body)?;
        let mut net_text = String::new();
        for (_, w) in &net_lines {
            net_text.push_str(&w.join(" "));
            net_text.push('\n');
        }
        let network = Network::parse(&net_text).or_else(|e| match e {
            // Point at the offending line of the scenario file itself.
            NetError::Line(i, inner) => {
                let line = net_lines.get(i.wrapping_sub(1)).map_or(net_ln, |l| l.0);
                err(line, format!("network: {inner}"))
            }
            e => err(net_ln, format!("network: {e}")),
        })?;

        let mut policy = ServePolicy::default();
        let mut requests = Vec::new();
        let mut generate = 0;
        if let Some((_, body)) = demand {
            for (ln, w) in body_lines(&body)? {
                match w[0].as_str() {
                    "vehicle" => policy.fleet.push(FleetVehicle {
                        vehicle: Vehicle {
                            vehicle_id: num(ln, &w, 1)?,
                            make_model: w.get(3).cloned().unwrap_or_else(|| "sedan".into()),
                            emission_rate: if w.len() > 4 { num(ln, &w, 4)? } else { 100.0 },
                        },
                        home: num(ln, &w, 2)?,
                    }),
                    "request" => requests.push(Request {
                        id: num(ln, &w, 1)?,
                        origin: num(ln, &w, 2)?,
                        dest: num(ln, &w, 3)?,
                        time: num(ln, &w, 4)?,
                    }),
                    "generate" => generate = num(ln, &w, 1)?,
                    "policy" => {
                        for (k, v) in pairs(ln, &w, 1)? {
                            match k.as_str() {
                                "match_delay" => policy.match_delay = v as u32,
                                "fare_base" => policy.fare_base = v,
                                "fare_per_edge" => policy.fare_per_edge = v,
                                "alpha" => policy.wage_alpha = v,
                                "beta" => policy.wage_beta = v,
                                other => {
                                    return err(ln, format!("unknown policy parameter {other:?}"))
                                }
                            }
                        }
                    }
                    other => return err(ln, format!("unknown demand directive {other:?}")),
                }
            }
        }
        if policy.fleet.is_empty() {
            return err(0, "demand needs at least one `vehicle`");
        }

        let mut strategy = Strategy::Honest;
        let mut admissible = QueryKind::default_admissible();
        if let Some((_, body)) = mp {
            let mut injected: Vec<TripRecord> = Vec::new();
            for (ln, w) in body_lines(&body)? {
                match (w[0].as_str(), w.get(1).map(String::as_str)) {
                    ("strategy", Some("honest")) => strategy = Strategy::Honest,
                    ("strategy", Some("omit")) => {
                        let ids = (2..w.len())
                            .map(|i| num(ln, &w, i))
                            .collect::<Result<_, _>>()?;
                        strategy = Strategy::OmitTrips(ids);
                    }
                    ("strategy", Some("tamper")) => {
                        let trip_id = num(ln, &w, 2)?;
                        let edit = match w.get(3).map(String::as_str) {
                            Some("wage") => TripEdit::Wage(num(ln, &w, 4)?),
                            Some("fare") => TripEdit::Fare(num(ln, &w, 4)?),
                            Some("request") => TripEdit::RequestTime(num(ln, &w, 4)?),
                            _ => return err(ln, "tamper needs `wage`, `fare` or `request`"),
                        };
                        strategy = Strategy::TamperTrip { trip_id, edit };
                    }
                    ("strategy", Some("misreport")) => {
                        strategy = Strategy::MisreportPeriod {
                            trip_id: num(ln, &w, 2)?,
                            shift: num(ln, &w, 3)?,
                        }
                    }
                    ("strategy", Some("inject")) => {
                        let trip_id = num(ln, &w, 2)?;
                        let start = num(ln, &w, 3)?;
                        let vid: u64 = num(ln, &w, 4)?;
                        let edges = (5..w.len())
                            .map(|i| num(ln, &w, i))
                            .collect::<Result<Vec<usize>, _>>()?;
                        let vehicle = policy
                            .fleet
                            .iter()
                            .find(|v| v.vehicle.vehicle_id == vid)
                            .map(|v| v.vehicle.clone())
                            .ok_or(ScenarioError {
                                line: ln,
                                msg: format!("unknown vehicle {vid}"),
                            })?;
                        let trip = fabricate_trip(&network, trip_id, &edges, start, vehicle)
                            .or_else(|e| err(ln, format!("fake trip: {e}")))?;
                        injected.push(trip);
                        strategy = Strategy::InjectTrips(injected.clone());
                    }
                    ("admissible", _) => {
                        admissible = w[1..]
                            .iter()
                            .map(|k| {
                                QueryKind::from_name(k).ok_or(ScenarioError {
                                    line: ln,
                                    msg: format!("unknown query kind {k:?}"),
                                })
                            })
                            .collect::<Result<_, _>>()?;
                    }
                    _ => return err(ln, format!("unknown mp directive `{}`", w.join(" "))),
                }
            }
        }

        let mut audit_spec = AuditSpec::None;
        let mut riders = RiderSpec::All;
        if let Some((_, body)) = audit {
            for (ln, w) in body_lines(&body)? {
                match (w[0].as_str(), w.get(1).map(String::as_str)) {
                    ("mode", Some("none")) => audit_spec = AuditSpec::None,
                    ("mode", Some("ara")) => {
                        let (mut epsilon, mut noise) = (0.0, 0.0);
                        for (k, v) in pairs(ln, &w, 2)? {
                            match k.as_str() {
                                "epsilon" => epsilon = v,
                                "noise" => noise = v,
                                other => {
                                    return err(ln, format!("unknown ara parameter {other:?}"))
                                }
                            }
                        }
                        if !(0.0..=1.0).contains(&epsilon) || !(0.0..=1.0).contains(&noise) {
                            return err(ln, "epsilon and noise must lie in [0, 1]");
                        }
                        audit_spec = AuditSpec::Ara { epsilon, noise };
                    }
                    ("mode", Some("rra")) => {
                        let (mut p, mut rounds, mut round_len) = (0.1, 10u32, 4u32);
                        for (k, v) in pairs(ln, &w, 2)? {
                            match k.as_str() {
                                "p" => p = v,
                                "rounds" => rounds = v as u32,
                                "round_len" => round_len = v as u32,
                                other => {
                                    return err(ln, format!("unknown rra parameter {other:?}"))
                                }
                            }
                        }
                        if !(p > 0.0 && p < 1.0) {
                            return err(ln, "rra p must lie in (0, 1)");
                        }
                        if round_len == 0 {
                            return err(ln, "round_len must be positive");
                        }
                        audit_spec = AuditSpec::Rra {
                            p,
                            rounds,
                            round_len,
                        };
                    }
                    ("riders", Some("all")) => riders = RiderSpec::All,
                    ("riders", Some("none")) => riders = RiderSpec::None,
                    ("riders", Some(_)) => {
                        riders = RiderSpec::Some(
                            (1..w.len())
                                .map(|i| num(ln, &w, i))
                                .collect::<Result<_, _>>()?,
                        )
                    }
                    _ => return err(ln, format!("unknown audit directive `{}`", w.join(" "))),
                }
            }
        }
        if let AuditSpec::Rra { p, .. } = audit_spec {
            fines.rra.p = p;
        }

        let mut qs = Vec::new();
        if let Some((_, body)) = queries {
            for it in &body {
                match it {
                    Item::Block(ln, h, inner) if h.first().map(String::as_str) == Some("query") => {
                        let kind = h.get(1).map(String::as_str).unwrap_or("");
                        qs.push(parse_query(*ln, kind, inner, &network)?);
                    }
                    Item::Block(ln, _, _) | Item::Line(ln, _) => {
                        return err(*ln, "expected `query <kind> { ... }`")
                    }
                }
            }
        }

        Ok(Scenario {
            name,
            seed,
            backend,
            tol,
            fines,
            network,
            policy,
            requests,
            generate,
            strategy,
            admissible,
            audit: audit_spec,
            riders,
            queries: qs,
        })
    }
}

fn parse_predicate(ln: usize, w: &[String], m: usize) -> Result<RegPredicate, ScenarioError> {
    let rest = &w[1..];
    Ok(match w[0].as_str() {
        "wait_equity" => {
            let tau_at = rest.iter().position(|x| x == "tau");
            let regions_at = rest.iter().position(|x| x == "regions");
            let (Some(t), Some(r)) = (tau_at, regions_at) else {
                return err(ln, "wait_equity needs `tau <v>` and `regions <ids..>`");
            };
            let tau = num(ln, rest, t + 1)?;
            let end = if t > r { t } else { rest.len() };
            let regions = rest[r + 1..end]
                .iter()
                .map(|s| s.parse().or_else(|_| err(ln, format!("bad region {s:?}"))))
                .collect::<Result<_, _>>()?;
            RegPredicate::WaitTimeEquity { regions, tau }
        }
        "congestion" => {
            let limit_at = rest.iter().position(|x| x == "limit" || x == "threshold");
            let bg_at = rest.iter().position(|x| x == "background");
            let (Some(l), Some(b)) = (limit_at, bg_at) else {
                return err(
                    ln,
                    "congestion needs `limit <v>` and `background <per-edge..>`",
                );
            };
            let limit = num(ln, rest, l + 1)?;
            let end = if l > b { l } else { rest.len() };
            let background = nums(ln, &rest[b + 1..end])?;
            if background.len() != m {
                return err(
                    ln,
                    format!("background has {} entries for {m} edges", background.len()),
                );
            }
            RegPredicate::CongestionContribution { background, limit }
        }
        "speed_limit" => {
            let limits = nums(ln, rest)?;
            if limits.len() != m {
                return err(
                    ln,
                    format!("speed_limit has {} entries for {m} edges", limits.len()),
                );
            }
            RegPredicate::SpeedLimit { limits }
        }
        "period2_accuracy" => RegPredicate::Period2Accuracy,
        "emissions" => RegPredicate::EmissionsLimit(num(ln, w, 1)?),
        other => return err(ln, format!("unknown regulation predicate {other:?}")),
    })
}

fn parse_query(
    ln: usize,
    kind: &str,
    body: &[Item],
    network: &Network,
) -> Result<Query, ScenarioError> {
    let m = network.edge_count();
    let params = |body: &[Item]| -> Result<Vec<(String, f64)>, ScenarioError> {
        let (l, w) = flat(body)?;
        pairs(l.max(ln), &w, 0)
    };
    let get = |ps: &[(String, f64)], k: &str, default: Option<f64>| -> Result<f64, ScenarioError> {
        match ps.iter().find(|p| p.0 == k) {
            Some(p) => Ok(p.1),
            None => default.ok_or(ScenarioError {
                line: ln,
                msg: format!("query {kind} needs `{k}`"),
            }),
        }
    };
    Ok(match kind {
        "trip_count" => Query::TripCount,
        "raw_trips" => Query::RawTrips,
        "wage" => {
            let ps = params(body)?;
            Query::Wage {
                alpha: get(&ps, "alpha", Some(1.0))?,
                beta: get(&ps, "beta", Some(1.5))?,
            }
        }
        "emissions" => Query::Emissions {
            threshold: get(&params(body)?, "threshold", None)?,
        },
        "congestion_pricing" => Query::CongestionPricing {
            period: get(&params(body)?, "period", None)?,
        },
        "wait_equity" | "congestion_contribution" => {
            let (l, w) = flat(body)?;
            let mut full = vec![if kind == "wait_equity" {
                "wait_equity"
            } else {
                "congestion"
            }
            .to_string()];
            full.extend(w);
            match parse_predicate(l.max(ln), &full, m)? {
                RegPredicate::WaitTimeEquity { regions, tau } => Query::WaitEquity { regions, tau },
                RegPredicate::CongestionContribution { background, limit } => {
                    Query::CongestionContribution {
                        background,
                        threshold: limit,
                    }
                }
                _ => unreachable!(),
            }
        }
        "regulation" => {
            let preds = body_lines(body)?
                .into_iter()
                .map(|(l, w)| parse_predicate(l, &w, m))
                .collect::<Result<_, _>>()?;
            Query::Regulation(preds)
        }
        "sop" => {
            let mut period = None;
            let mut mp = MpObjective::default();
            let mut ma = MaObjective::default();
            let mut projects: Vec<Project> = Vec::new();
            for (l, w) in body_lines(body)? {
                match w[0].as_str() {
                    "period" => period = Some(num(l, &w, 1)?),
                    "fare" => mp.fare = num(l, &w, 1)?,
                    "cost_per_length" => mp.cost_per_length = num(l, &w, 1)?,
                    "objective" => {
                        ma = match w.get(1).map(String::as_str) {
                            Some("neg_travel_time") => MaObjective::NegTotalTravelTime,
                            Some("neg_distance") => MaObjective::NegVehicleDistance,
                            _ => {
                                return err(
                                    l,
                                    "objective must be `neg_travel_time` or `neg_distance`",
                                )
                            }
                        }
                    }
                    "project" => projects.push(Project::new(w.get(1).cloned().unwrap_or_default())),
                    "edit" => {
                        let Some(p) = projects.last_mut() else {
                            return err(l, "`edit` before any `project`");
                        };
                        p.edits
                            .push(parse_edit(&w[1..].join(" ")).or_else(|e| err(l, e))?);
                    }
                    other => return err(l, format!("unknown sop directive {other:?}")),
                }
            }
            if projects.is_empty() {
                return err(ln, "sop needs at least one project");
            }
            Query::SopSelection {
                projects,
                period: period.ok_or(ScenarioError {
                    line: ln,
                    msg: "sop needs `period`".into(),
                })?,
                mp,
                ma,
            }
        }
        other => return err(ln, format!("unknown query kind {other:?}")),
    })
}
