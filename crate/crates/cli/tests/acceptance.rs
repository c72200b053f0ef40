//! System acceptance criteria. This target runs without the libtest harness
//! so that every criterion prints exactly one PASS or FAIL line; the process
//! exits non-zero if any criterion fails.

// `ensure!(a < b, ..)` negates its condition, so a NaN comparison fails.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use common::flows::{
    random_demand, random_network, random_rates, simple_paths, steady_oracle, timevarying_oracle,
};
use common::protocol::{all_scenarios, load, serve};
use pmm_core::audits::{
    ara_run, ara_test, collect, deploy_ara_sensors, phi_total, rider_witness_test,
    sightings_from_trips,
};
use pmm_core::authority::{levy_fine, Detection, FineSchedule, QueryKind, RraFineParams};
use pmm_core::crypto::{hash, mcommit, merkle_verify, Digest, Nonce, Side};
use pmm_core::flowopt::{
    check_kkt, compute_tolls, kkt_certificate, potentials_for, solve_mp_routing,
    solve_social_optimum_tt, solve_timevarying_routing, MpObjective,
};
use pmm_core::harness::events::{Agent, DataClass, EventLog};
use pmm_core::harness::{agent_rng, batch, run, AuditSpec, QueryOutcome, Scenario};
use pmm_core::netmodel::{DelayFn, Network, RateMatrix, TripRecord, Vehicle};
use pmm_core::proofsys::Backend;
use pmm_core::provider::{fabricate_trip, Strategy, TripEdit};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

type Check = Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn within(elapsed: Duration, limit_secs: u64) -> Result<(), String> {
    if elapsed > Duration::from_secs(limit_secs) {
        Err(format!(
            "took {:.1}s, limit {limit_secs}s",
            elapsed.as_secs_f64()
        ))
    } else {
        Ok(())
    }
}

fn random_leaves(rng: &mut ChaCha20Rng, t: usize) -> (Vec<Vec<u8>>, Vec<Nonce>) {
    let items = (0..t)
        .map(|i| {
            let mut m: Vec<u8> = (0..rng.gen_range(0..24)).map(|_| rng.gen()).collect();
            m.extend_from_slice(&(i as u32).to_be_bytes());
            m
        })
        .collect();
    (items, (0..t).map(|_| Nonce::random(rng)).collect())
}

/// Merkle completeness, binding and proof length.
fn merkle() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha20Rng::seed_from_u64(0x4d45);
    for cycle in 0..10_000 {
        let t = 1 + cycle % 64;
        let (items, nonces) = random_leaves(&mut rng, t);
        let tree = mcommit(&items, &nonces).map_err(|e| e.to_string())?;
        let i = rng.gen_range(0..t);
        let proof = tree.prove(i).map_err(|e| e.to_string())?;
        let bound = (t as f64).log2().ceil() as usize;
        ensure!(
            proof.siblings.len() <= bound,
            "t={t}: {} siblings",
            proof.siblings.len()
        );
        ensure!(
            merkle_verify(&tree.root(), &items[i], &nonces[i], &proof),
            "t={t} i={i} failed"
        );
    }
    let mut forged = 0;
    for attempt in 0..10_000 {
        let t = 1 + attempt % 64;
        let (items, nonces) = random_leaves(&mut rng, t);
        let tree = mcommit(&items, &nonces).unwrap();
        let i = rng.gen_range(0..t);
        let mut proof = tree.prove(i).unwrap();
        let (mut item, mut nonce) = (items[i].clone(), nonces[i]);
        match attempt % 5 {
            // An item that is not in the tree.
            0 => item.push(0xff),
            // The right item under a guessed nonce.
            1 => nonce = Nonce::random(&mut rng),
            // Random sibling hashes.
            2 => {
                for s in &mut proof.siblings {
                    s.0 = Digest(rng.gen());
                }
                if proof.siblings.is_empty() {
                    proof.siblings.push((Digest(rng.gen()), Side::Right));
                }
            }
            // One flipped bit in one sibling.
            3 if !proof.siblings.is_empty() => {
                let s = rng.gen_range(0..proof.siblings.len());
                let bit = rng.gen_range(0..256);
                proof.siblings[s].0 .0[bit / 8] ^= 1 << (bit % 8);
            }
            // Another leaf's proof.
            _ => {
                if t == 1 {
                    item.push(0);
                } else {
                    let j = (i + 1 + rng.gen_range(0..t - 1)) % t;
                    proof = tree.prove(j).unwrap();
                }
            }
        }
        if merkle_verify(&tree.root(), &item, &nonce, &proof) {
            forged += 1;
        }
    }
    ensure!(forged == 0, "{forged} forgeries verified");
    within(start.elapsed(), 10)?;
    Ok("10000 proofs verified, 0 of 10000 forgeries accepted, lengths within ceil(log2 t)".into())
}

fn tamper_edits(t: &TripRecord) -> Vec<TripEdit> {
    vec![
        TripEdit::Wage(t.driver_wage + 0.5),
        TripEdit::Wage(0.0),
        TripEdit::Fare(t.trip_fare + 1.0),
        TripEdit::RequestTime(t.request_time + 1),
    ]
}

/// Every omission or tampering is caught by reporting riders.
fn rider_witness() -> Check {
    let start = Instant::now();
    let mut variants = 0;
    let mut caught = 0;
    let bases: Vec<Scenario> = all_scenarios()
        .into_iter()
        .filter(|s| s.strategy.is_honest())
        .collect();
    for s in &bases {
        let truth = serve(s, Strategy::Honest, s.seed)
            .provider
            .ground_truth()
            .to_vec();
        if truth.len() > 50 {
            continue;
        }
        let ids: Vec<u64> = truth.iter().map(|t| t.trip_id).collect();
        let mut strategies: Vec<Strategy> = Vec::new();
        for (k, t) in truth.iter().enumerate() {
            strategies.push(Strategy::OmitTrips([t.trip_id].into()));
            if k > 0 {
                // Omitting every trip leaves nothing to commit to at all.
                strategies.push(Strategy::OmitTrips(ids[k..].iter().copied().collect()));
            }
            for edit in tamper_edits(t) {
                strategies.push(Strategy::TamperTrip {
                    trip_id: t.trip_id,
                    edit,
                });
            }
        }
        for strategy in strategies {
            let served = serve(s, strategy, s.seed);
            let out = rider_witness_test(
                &served.receipts,
                &served.provider,
                &served.provider.sigma().unwrap(),
                served.provider.public_key(),
            );
            variants += 1;
            caught += usize::from(!out.passed());
        }
    }
    for name in [
        "omit_one_trip",
        "omit_many",
        "tamper_wage",
        "tamper_request_time",
    ] {
        let r = run(&load(name)).map_err(|e| e.to_string())?.report;
        variants += 1;
        caught += usize::from(!r.rider_witness.passed());
    }
    ensure!(caught == variants, "caught {caught} of {variants}");
    within(start.elapsed(), 30)?;
    Ok(format!(
        "{caught}/{variants} omission and tamper variants detected (100%)"
    ))
}

/// A path of `len` distinct edges starting with `first`, following the
/// lowest-numbered unused out-edge.
fn walk(net: &Network, first: usize, len: usize) -> Option<Vec<usize>> {
    let mut path = vec![first];
    while path.len() < len {
        let at = net.edge(*path.last().unwrap())?.dst;
        let next = net
            .out_edges(at)
            .map(|e| e.id)
            .find(|e| !path.contains(e))?;
        path.push(next);
    }
    Some(path)
}

fn ara_phi(s: &Scenario, truth: &[TripRecord], seed: u64) -> Result<u64, String> {
    let mut rng = agent_rng(seed, "sensors");
    let mut k = agent_rng(seed, "keys");
    let ma = pmm_core::crypto::keygen(&mut k);
    let mp = pmm_core::crypto::keygen(&mut k);
    let mut sensors = deploy_ara_sensors(&s.network, &ma.public, &mp.public, &mut rng);
    collect(&mut sensors, &sightings_from_trips(truth));
    let agg = ara_run(&mut sensors, &ma, &mp, &mut rng, &mut EventLog::new())
        .map_err(|e| e.to_string())?;
    Ok(agg.phi)
}

/// Every injected trip fails the exact ARA test; honest data passes.
fn ara() -> Check {
    let start = Instant::now();
    let mut variants = 0;
    let mut caught = 0;
    let mut four_edge = 0;
    for name in [
        "honest_small",
        "honest_grid",
        "honest_ara_noise",
        "honest_regulation",
    ] {
        let s = load(name);
        let honest = serve(&s, Strategy::Honest, s.seed);
        let truth = honest.provider.ground_truth().to_vec();
        let phi = ara_phi(&s, &truth, s.seed)?;
        ensure!(
            phi == phi_total(&truth),
            "{name}: sensors saw {phi}, data says {}",
            phi_total(&truth)
        );
        ensure!(ara_test(&truth, phi, 0.0), "{name}: honest data fails");
        let vehicle = Vehicle {
            vehicle_id: 900,
            make_model: "ghost".into(),
            emission_rate: 100.0,
        };
        for first in 0..s.network.edge_count() {
            for len in 1..=4 {
                let Some(path) = walk(&s.network, first, len) else {
                    continue;
                };
                let fake = fabricate_trip(&s.network, 10_000, &path, 1, vehicle.clone())
                    .map_err(|e| e.to_string())?;
                let served = serve(&s, Strategy::InjectTrips(vec![fake]), s.seed);
                let committed = served.provider.committed();
                variants += 1;
                caught += usize::from(!ara_test(committed, phi, 0.0));
                if len == 4 {
                    ensure!(
                        phi_total(committed) == phi + 4,
                        "{name}: 4-edge fake added {}",
                        phi_total(committed) - phi
                    );
                    four_edge += 1;
                }
            }
        }
    }
    let r = run(&load("inject_fake_trip_ara"))
        .map_err(|e| e.to_string())?
        .report;
    ensure!(!r.all_accepted(), "inject_fake_trip_ara accepted");
    ensure!(caught == variants, "caught {caught} of {variants}");
    within(start.elapsed(), 30)?;
    Ok(format!("{caught}/{variants} injections fail ARA, honest passes, {four_edge} four-edge fakes each add exactly 4"))
}

/// Single-edge fakes under RRA are caught with frequency close to p.
fn rra_frequency() -> Check {
    let start = Instant::now();
    let n = 2000;
    let mut parts = Vec::new();
    for p in [0.1, 0.3, 0.5] {
        let mut s = load("inject_fake_trip_rra");
        s.audit = AuditSpec::Rra {
            p,
            rounds: 12,
            round_len: 4,
        };
        s.fines.rra.p = p;
        let stats = batch(&s, n).map_err(|e| e.to_string())?;
        let band = 4.0 * (p * (1.0 - p) / n as f64).sqrt();
        ensure!(
            (stats.frequency - p).abs() <= band,
            "p={p}: frequency {:.4} outside {p}±{band:.4}",
            stats.frequency
        );
        parts.push(format!("p={p}: {:.4}", stats.frequency));
    }
    within(start.elapsed(), 300)?;
    Ok(format!(
        "{} over {n} seeds each, all within 4 sigma",
        parts.join(", ")
    ))
}

fn pigou() -> (Network, RateMatrix) {
    let mut net = Network::new(2, 1.0, 10);
    net.add_edge(0, 1, DelayFn::constant(1.0)).unwrap();
    net.add_edge(0, 1, DelayFn::Affine { a: 0.0, b: 1.0 })
        .unwrap();
    let mut rates = RateMatrix::zeros(2);
    rates.set(0, 1, 1.0).unwrap();
    (net, rates)
}

/// Pigou optimum and tolls, equal tolled path costs, KKT certificates.
fn congestion_pricing() -> Check {
    let (net, rates) = pigou();
    let opt = solve_social_optimum_tt(&net, &rates).map_err(|e| e.to_string())?;
    let x2 = opt.edge_flows[1];
    ensure!((x2 - 0.5).abs() <= 1e-4, "x2* = {x2}");
    let tolls = compute_tolls(&net, &opt.edge_flows);
    ensure!(
        tolls[0].abs() <= 1e-4 && (tolls[1] - 0.5).abs() <= 1e-4,
        "tolls {tolls:?}"
    );
    let cost: Vec<f64> = (0..2)
        .map(|e| net.edges()[e].delay.eval(opt.edge_flows[e]) + tolls[e])
        .collect();
    ensure!((cost[0] - cost[1]).abs() <= 1e-4, "tolled costs {cost:?}");

    let r = run(&load("pigou")).map_err(|e| e.to_string())?.report;
    let z = r
        .queries
        .iter()
        .find(|(n, _)| n == "congestion_pricing")
        .map(|(_, q)| q.clone());
    ensure!(
        matches!(&z, Some(QueryOutcome::Verified { z, verdict }) if verdict.accepted && z == "vector 0.000000 0.500000"),
        "bundled pigou answered {z:?}"
    );

    let mut rng = ChaCha20Rng::seed_from_u64(0x4b4b);
    let mut instances = 0;
    while instances < 20 {
        let n = rng.gen_range(3..=5);
        let net = random_network(&mut rng, n, 3, false);
        let rates = random_rates(&mut rng, n, 2);
        if rates.pairs().is_empty() {
            continue;
        }
        let opt = solve_social_optimum_tt(&net, &rates).map_err(|e| e.to_string())?;
        let cert = kkt_certificate(&net, &opt);
        ensure!(
            check_kkt(&net, &rates, &cert, 1e-6).accepted,
            "instance {instances}: solver output rejected"
        );
        // Shift 5% of the first commodity onto another simple path.
        let (o, d, lam) = cert.commodities[0];
        let used = opt.paths[0]
            .iter()
            .max_by(|a, b| a.flow.total_cmp(&b.flow))
            .unwrap();
        let Some(alt) = simple_paths(&net, o, d)
            .into_iter()
            .find(|p| *p != used.edges)
        else {
            continue;
        };
        let mut bad = cert.clone();
        let delta = 0.05 * lam;
        for &e in &used.edges {
            bad.flows[0][e] -= delta;
        }
        for &e in &alt {
            bad.flows[0][e] += delta;
        }
        ensure!(
            !check_kkt(&net, &rates, &bad, 1e-6).accepted,
            "instance {instances}: perturbed flow accepted"
        );
        bad.potentials = potentials_for(&net, &bad.commodities, &bad.flows);
        ensure!(
            !check_kkt(&net, &rates, &bad, 1e-6).accepted,
            "instance {instances}: perturbed flow with fitted duals accepted"
        );
        instances += 1;
    }
    Ok(format!("x2*={x2:.6}, tolls=({:.6}, {:.6}), KKT accepts 20/20 optima and rejects 20/20 perturbations", tolls[0], tolls[1]))
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

/// Routing solvers agree with an independent LP solver.
fn flow_oracles() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha20Rng::seed_from_u64(0x0f10);
    for case in 0..50 {
        let n = rng.gen_range(2..=6);
        let chords = rng.gen_range(0..4);
        let net = random_network(&mut rng, n, chords, false);
        let rates = random_rates(&mut rng, n, 3);
        let obj = MpObjective {
            fare: 5.0,
            cost_per_length: rng.gen_range(0.5..2.0),
        };
        let ours = solve_mp_routing(&net, &rates, &obj).map_err(|e| e.to_string())?;
        let oracle = steady_oracle(&net, &rates, &obj).ok_or("steady oracle infeasible")?;
        ensure!(
            close(ours.objective, oracle, 1e-6),
            "steady case {case}: {} vs {oracle}",
            ours.objective
        );
    }
    for case in 0..50 {
        let n = rng.gen_range(2..=6);
        let horizon = rng.gen_range(4..=10);
        let net = random_network(&mut rng, n, 1, true);
        let demand = random_demand(&mut rng, n, horizon, 3);
        let y: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_range(0..=2))).collect();
        let obj = MpObjective {
            fare: 6.0,
            cost_per_length: 1.0,
        };
        let ours = solve_timevarying_routing(&net, &demand, &y, &obj).map_err(|e| e.to_string())?;
        let oracle =
            timevarying_oracle(&net, &demand, &y, &obj).ok_or("time-varying oracle infeasible")?;
        ensure!(
            close(ours.objective, oracle, 1e-6),
            "time-varying case {case}: {} vs {oracle}",
            ours.objective
        );
    }
    within(start.elapsed(), 120)?;
    Ok("50 steady and 50 time-varying instances match the LP oracle within 1e-6".into())
}

fn verdicts(r: &pmm_core::harness::RunReport) -> Vec<(String, bool)> {
    r.queries
        .iter()
        .filter_map(|(n, q)| match q {
            QueryOutcome::Verified { verdict, .. } => Some((n.clone(), verdict.accepted)),
            _ => None,
        })
        .collect()
}

/// Honest scenarios verify every admissible query on both backends.
fn completeness() -> Check {
    let mut covered = BTreeSet::new();
    let mut scenarios = 0;
    let mut proofs = 0;
    for s in all_scenarios()
        .into_iter()
        .filter(|s| s.strategy.is_honest())
    {
        let mut per_backend = Vec::new();
        for backend in [Backend::Transparent, Backend::OpaqueSealed] {
            let mut s = s.clone();
            s.backend = backend;
            let r = run(&s).map_err(|e| format!("{}: {e}", s.name))?.report;
            ensure!(
                r.total_fine == 0.0 && !r.detected(),
                "{} {backend:?}: {:?}",
                s.name,
                r.detections
            );
            for (n, q) in &r.queries {
                match q {
                    QueryOutcome::Verified { verdict, .. } => {
                        ensure!(verdict.accepted, "{} {backend:?}: {n} rejected", s.name);
                        covered.insert(n.clone());
                        proofs += 1;
                    }
                    QueryOutcome::Rejected => {
                        let kind = QueryKind::ALL.into_iter().find(|k| k.name() == n);
                        let refusable = kind.is_none_or(|k| !s.admissible.contains(&k));
                        ensure!(refusable, "{}: admissible {n} refused", s.name);
                    }
                    QueryOutcome::Unanswered(e) => {
                        return Err(format!("{}: {n} unanswered: {e}", s.name))
                    }
                }
            }
            per_backend.push(verdicts(&r));
        }
        ensure!(
            per_backend[0] == per_backend[1],
            "{}: backends disagree",
            s.name
        );
        scenarios += 1;
    }
    let wanted: BTreeSet<String> = QueryKind::ALL
        .iter()
        .filter(|k| **k != QueryKind::RawTrips)
        .map(|k| k.name().to_string())
        .collect();
    let missing: Vec<_> = wanted.difference(&covered).collect();
    ensure!(
        missing.is_empty(),
        "query kinds never exercised: {missing:?}"
    );
    Ok(format!("{scenarios} honest scenarios, {} query kinds, {proofs} proofs accepted on both backends, fines 0", wanted.len()))
}

/// Opaque runs deliver no trip plaintext and exactly the sanctioned classes
/// to the MA.
fn privacy() -> Check {
    let mut surface = BTreeSet::new();
    let mut scenarios = 0;
    for mut s in all_scenarios() {
        s.backend = Backend::OpaqueSealed;
        let out = run(&s).map_err(|e| format!("{}: {e}", s.name))?;
        let p = &out.report.privacy;
        ensure!(
            p.ma_plaintext_hits == 0,
            "{}: {} plaintext windows reached the MA",
            s.name,
            p.ma_plaintext_hits
        );
        ensure!(
            p.ma_unsanctioned == 0,
            "{}: {} unsanctioned messages",
            s.name,
            p.ma_unsanctioned
        );
        ensure!(
            p.lifecycle_violations == 0,
            "{}: {} sensor lifecycle violations",
            s.name,
            p.lifecycle_violations
        );
        surface.extend(out.log.received_by(Agent::Ma).map(|e| e.class));
        scenarios += 1;
    }
    let sanctioned: BTreeSet<DataClass> = DataClass::MA_SANCTIONED.into_iter().collect();
    ensure!(
        surface == sanctioned,
        "MA surface {surface:?} differs from sanctioned {sanctioned:?}"
    );
    Ok(format!(
        "{scenarios} scenarios, 0 plaintext hits, MA surface = {} sanctioned classes",
        sanctioned.len()
    ))
}

/// `pmm run` twice per scenario gives byte-identical reports.
fn determinism() -> Check {
    let scenarios: Vec<_> = {
        let mut v: Vec<_> = std::fs::read_dir(common::protocol::scenario_dir())
            .map_err(|e| e.to_string())?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "pmm"))
            .collect();
        v.sort();
        v
    };
    ensure!(
        scenarios.len() >= 20,
        "only {} scenarios bundled",
        scenarios.len()
    );
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    for path in &scenarios {
        let mut digests = Vec::new();
        for attempt in 0..2 {
            let out = tmp.path().join(format!(
                "{}-{attempt}",
                path.file_stem().unwrap().to_string_lossy()
            ));
            let status = Command::new(env!("CARGO_BIN_EXE_pmm"))
                .arg("run")
                .arg(path)
                .arg("--out")
                .arg(&out)
                .output()
                .map_err(|e| e.to_string())?;
            ensure!(
                status.status.success(),
                "{}: exit {:?}",
                path.display(),
                status.status.code()
            );
            let report = std::fs::read(out.join("report.txt")).map_err(|e| e.to_string())?;
            let events = std::fs::read(out.join("events.log")).map_err(|e| e.to_string())?;
            digests.push((hash(&report), hash(&events)));
        }
        ensure!(
            digests[0] == digests[1],
            "{}: reports differ between runs",
            path.display()
        );
    }
    Ok(format!(
        "{} scenarios, 2 runs each, identical report and event-log hashes",
        scenarios.len()
    ))
}

/// The RRA fine deters cheating, by formula and by simulation.
fn fines() -> Check {
    let mut grid = 0;
    for u_d in [20.0, 100.0, 500.0] {
        for u_h in [0.0, 10.0, 80.0] {
            for p in [0.05, 0.1, 0.3, 0.5, 0.9] {
                let schedule = FineSchedule {
                    rider_witness: 50.0,
                    rra: RraFineParams {
                        u_d,
                        u_h,
                        p,
                        margin: 1.0,
                        floor: 0.0,
                    },
                };
                let f = levy_fine(Some(Detection::Rra), &schedule);
                ensure!(
                    f > (u_d - u_h) / p - u_d,
                    "u_d={u_d} u_h={u_h} p={p}: F={f}"
                );
                grid += 1;
            }
        }
    }
    let (u_d, u_h, p) = (100.0, 80.0, 0.1);
    let mut s = load("inject_fake_trip_rra");
    s.audit = AuditSpec::Rra {
        p,
        rounds: 12,
        round_len: 4,
    };
    s.fines.rra = RraFineParams {
        u_d,
        u_h,
        p,
        margin: 100.0,
        floor: 0.0,
    };
    let fine = levy_fine(Some(Detection::Rra), &s.fines);
    let n = 2000;
    let stats = batch(&s, n).map_err(|e| e.to_string())?;
    // Caught cheaters keep nothing and pay the fine.
    let dishonest = (1.0 - stats.frequency) * u_d - stats.mean_fine;
    ensure!(
        dishonest < u_h,
        "dishonest expected utility {dishonest:.2} >= honest {u_h}"
    );
    let honest = batch(&load("honest_rra"), 200).map_err(|e| e.to_string())?;
    ensure!(
        honest.mean_fine == 0.0,
        "honest MP fined {}",
        honest.mean_fine
    );
    Ok(format!(
        "{grid} grid points satisfy the bound; F={fine:.0}: dishonest E[U]={dishonest:.2} < honest {u_h:.0} over {n} seeds"
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "Merkle completeness and binding", merkle),
        (
            2,
            "Rider witness catches omissions and tampering",
            rider_witness,
        ),
        (3, "ARA catches injected trips", ara),
        (4, "RRA detection frequency", rra_frequency),
        (
            5,
            "Congestion pricing on Pigou and KKT checks",
            congestion_pricing,
        ),
        (6, "Flow solvers match LP oracle", flow_oracles),
        (7, "End-to-end completeness on both backends", completeness),
        (8, "Privacy ledger of the MA", privacy),
        (9, "Determinism of pmm run", determinism),
        (10, "Fine calculus", fines),
    ];
    let mut failed = 0;
    for (n, name, check) in criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {n:>2} PASS {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n:>2} FAIL {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    println!("acceptance: {} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
