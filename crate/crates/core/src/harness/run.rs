//! One end-to-end protocol run, Stages 0 to 6.

use std::cell::RefCell;
use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::audits::{
    ara_run, collect, deploy_ara_sensors, deploy_rra_sensors, rider_witness_test, rra_run,
    sample_size, sightings_from_trips, AuditError, MerkleResponder, RiderWitnessOutcome, RraConfig,
    Sighting,
};
use crate::authority::wire::{encode_query, encode_value, encode_witness};
use crate::authority::{levy_fine, AuditPublic, Detection, EvaluationCircuit, Verdict};
use crate::codec::Writer;
use crate::crypto::{hash, keygen, KeyPair, MerkleProof, Nonce};
use crate::netmodel::TripRecord;
use crate::proofsys::{
    encode_bundle, failure_class, verify, ProofBundle, ProofError, ProofSystem, VerifierOracle,
};
use crate::provider::{ProviderError, ProviderState, QueryRejection, Receipt, Refusal, Request};

use super::events::{Agent, DataClass, EventLog};
use super::scenario::{AuditSpec, Scenario};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("no trips were served, so there is nothing to commit")]
    NothingServed,
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Audit(#[from] AuditError),
    #[error(transparent)]
    Proof(#[from] ProofError),
}

/// An independent RNG stream for one agent, derived from the run seed.
pub fn agent_rng(seed: u64, label: &str) -> ChaCha20Rng {
    let mut w = Writer::new();
    w.str("pmm-rng").u64(seed).str(label);
    ChaCha20Rng::from_seed(hash(&w.finish()).0)
}

/// The scenario's explicit requests plus `generate` random ones.
pub fn build_requests(s: &Scenario, seed: u64) -> Vec<Request> {
    let mut out = s.requests.clone();
    let n = s.network.vertex_count();
    if n < 2 || s.generate == 0 {
        return out;
    }
    let mut rng = agent_rng(seed, "demand");
    let mut next = out.iter().map(|r| r.id + 1).max().unwrap_or(1);
    let latest = (s.network.horizon / 2).max(1);
    for _ in 0..s.generate {
        let origin = rng.gen_range(0..n);
        let mut dest = rng.gen_range(0..n - 1);
        if dest >= origin {
            dest += 1;
        }
        out.push(Request {
            id: next,
            origin,
            dest,
            time: rng.gen_range(0..latest),
        });
        next += 1;
    }
    out
}

/// How one announced query ended.
#[derive(Clone, Debug, PartialEq)]
pub enum QueryOutcome {
    /// The MP refused: the query is not on the agreed whitelist.
    Rejected,
    /// The MP could not compute an answer.
    Unanswered(String),
    Verified {
        z: String,
        verdict: Verdict,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub enum AuditSummary {
    None,
    Ara {
        phi: u64,
        epsilon: f64,
        leader: usize,
        contributors: usize,
    },
    Rra {
        rounds: u32,
        watched: usize,
        accepted: usize,
        rejected: usize,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PrivacyCheck {
    /// Whether the assertions below are binding for this backend.
    pub enforced: bool,
    pub ma_classes: BTreeSet<String>,
    pub ma_unsanctioned: usize,
    pub ma_plaintext_hits: usize,
    pub lifecycle_violations: usize,
}

impl PrivacyCheck {
    pub fn clean(&self) -> bool {
        self.ma_unsanctioned == 0 && self.ma_plaintext_hits == 0 && self.lifecycle_violations == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub scenario: String,
    pub seed: u64,
    pub backend: String,
    pub strategy: String,
    pub served: usize,
    pub unserved: usize,
    pub committed: usize,
    pub sigma: String,
    pub audit: AuditSummary,
    pub rider_witness: RiderWitnessOutcome,
    pub queries: Vec<(String, QueryOutcome)>,
    pub detections: Vec<String>,
    pub total_fine: f64,
    pub privacy: PrivacyCheck,
    pub events: usize,
    pub event_digest: String,
}

impl RunReport {
    /// True when any mechanism flagged the MP.
    pub fn detected(&self) -> bool {
        !self.detections.is_empty()
    }

    pub fn all_accepted(&self) -> bool {
        self.queries.iter().all(|(_, q)| match q {
            QueryOutcome::Verified { verdict, .. } => verdict.accepted,
            _ => true,
        })
    }

    pub fn to_text(&self) -> String {
        let mut o = String::new();
        let _ = writeln!(o, "pmm-report v1");
        let _ = writeln!(o, "scenario {}", self.scenario);
        let _ = writeln!(o, "seed {}", self.seed);
        let _ = writeln!(o, "backend {}", self.backend);
        let _ = writeln!(o, "strategy {}", self.strategy);
        let _ = writeln!(
            o,
            "trips served={} unserved={} committed={}",
            self.served, self.unserved, self.committed
        );
        let _ = writeln!(o, "sigma {}", self.sigma);
        match &self.audit {
            AuditSummary::None => {
                let _ = writeln!(o, "audit none");
            }
            AuditSummary::Ara {
                phi,
                epsilon,
                leader,
                contributors,
            } => {
                let _ = writeln!(
                    o,
                    "audit ara phi={phi} epsilon={epsilon} leader={leader} sensors={contributors}"
                );
            }
            AuditSummary::Rra {
                rounds,
                watched,
                accepted,
                rejected,
            } => {
                let _ = writeln!(
                    o,
                    "audit rra rounds={rounds} watched_per_round={watched} counts_accepted={accepted} counts_rejected={rejected}"
                );
            }
        }
        let rw = &self.rider_witness;
        let _ = writeln!(
            o,
            "rider_witness checked={} discarded={} failures={}",
            rw.checked,
            rw.discarded,
            rw.evidence.len()
        );
        for r in &rw.evidence {
            let _ = writeln!(o, "evidence {}", r.to_text());
        }
        for (name, q) in &self.queries {
            match q {
                QueryOutcome::Rejected => {
                    let _ = writeln!(o, "query {name} rejected inadmissible");
                }
                QueryOutcome::Unanswered(e) => {
                    let _ = writeln!(o, "query {name} unanswered {e}");
                }
                QueryOutcome::Verified { z, verdict } => {
                    let _ = writeln!(o, "query {name} z={z} {}", verdict.to_text());
                }
            }
        }
        for d in &self.detections {
            let _ = writeln!(o, "detection {d}");
        }
        let _ = writeln!(o, "fine total={:.2}", self.total_fine);
        let p = &self.privacy;
        let _ = writeln!(
            o,
            "privacy enforced={} ma_classes={} ma_unsanctioned={} ma_plaintext_hits={} lifecycle_violations={}",
            p.enforced,
            p.ma_classes.iter().cloned().collect::<Vec<_>>().join(","),
            p.ma_unsanctioned,
            p.ma_plaintext_hits,
            p.lifecycle_violations
        );
        let _ = writeln!(
            o,
            "events count={} digest={}",
            self.events, self.event_digest
        );
        o
    }
}

/// Everything a run produced.
#[derive(Debug)]
pub struct RunOutcome {
    pub report: RunReport,
    pub log: EventLog,
    pub receipts: Vec<Receipt>,
    /// `(query name, proof bundle bytes)` for every proved answer.
    pub bundles: Vec<(String, Vec<u8>)>,
    pub ground_truth: Vec<TripRecord>,
    pub committed: Vec<TripRecord>,
}

/// Routes Merkle requests through the event log.
struct LoggedProvider<'a> {
    inner: &'a ProviderState,
    bus: RefCell<&'a mut EventLog>,
}

impl MerkleResponder for LoggedProvider<'_> {
    fn respond_merkle_request(&self, receipt: &Receipt) -> Result<MerkleProof, Refusal> {
        let mut bus = self.bus.borrow_mut();
        bus.push(
            Agent::Ma,
            Agent::Mp,
            DataClass::Receipt,
            receipt_bytes(receipt),
        );
        let r = self.inner.respond_merkle_request(receipt);
        match &r {
            Ok(p) => bus.push(
                Agent::Mp,
                Agent::Ma,
                DataClass::MerkleProof,
                p.to_text().into_bytes(),
            ),
            Err(_) => bus.push(
                Agent::Mp,
                Agent::Ma,
                DataClass::Refusal,
                b"refused".to_vec(),
            ),
        }
        r
    }
}

fn receipt_bytes(r: &Receipt) -> Vec<u8> {
    let mut w = Writer::new();
    w.u64(r.trip_id)
        .bytes(r.commitment.as_bytes())
        .bytes(&r.signature.0);
    w.finish()
}

/// Runs the scenario with its own seed.
pub fn run(s: &Scenario) -> Result<RunOutcome, HarnessError> {
    run_with_seed(s, s.seed)
}

pub fn run_with_seed(s: &Scenario, seed: u64) -> Result<RunOutcome, HarnessError> {
    let net = &s.network;
    let mut bus = EventLog::new();
    let mut key_rng = agent_rng(seed, "keys");
    let ma_keys: KeyPair = keygen(&mut key_rng);
    let mp_keys: KeyPair = keygen(&mut key_rng);
    let oracle = VerifierOracle::new(&mut key_rng);
    bus.push(
        Agent::Mp,
        Agent::Public,
        DataClass::PublicKey,
        mp_keys.public.0.clone(),
    );
    bus.push(
        Agent::Ma,
        Agent::Public,
        DataClass::PublicKey,
        ma_keys.public.0.clone(),
    );

    // Stage 0: serve, hand out receipts, commit.
    bus.set_stage(0);
    let requests = build_requests(s, seed);
    let mut provider = ProviderState::new(
        mp_keys.clone(),
        s.strategy.clone(),
        s.admissible.iter().copied(),
    );
    let unserved = provider.serve(&requests, net, &s.policy)?;
    let truth = provider.ground_truth().to_vec();
    let mut rider_rng = agent_rng(seed, "riders");
    let mut receipts = Vec::new();
    for t in &truth {
        let nonce = Nonce::random(&mut rider_rng);
        bus.push(
            Agent::Rider(t.trip_id),
            Agent::Mp,
            DataClass::RiderNonce,
            nonce.0.to_vec(),
        );
        let r = provider.issue_receipt(t.trip_id, nonce)?;
        bus.push(
            Agent::Mp,
            Agent::Rider(t.trip_id),
            DataClass::Receipt,
            receipt_bytes(&r),
        );
        receipts.push(r);
    }
    if provider.ground_truth().is_empty()
        && !matches!(s.strategy, crate::provider::Strategy::InjectTrips(_))
    {
        return Err(HarnessError::NothingServed);
    }
    let mut mp_rng = agent_rng(seed, "mp");
    let sigma = provider.commit_demand(net, &mut mp_rng)?;
    bus.push(Agent::Mp, Agent::Ma, DataClass::Sigma, sigma.0.to_vec());
    bus.push(Agent::Mp, Agent::Public, DataClass::Sigma, sigma.0.to_vec());

    // Stage 1: audits.
    bus.set_stage(1);
    let reported: Vec<Receipt> = receipts
        .iter()
        .filter(|r| s.riders.reports(r.trip_id))
        .cloned()
        .collect();
    for r in &reported {
        bus.push(
            Agent::Rider(r.trip_id),
            Agent::Ma,
            DataClass::Receipt,
            receipt_bytes(r),
        );
    }
    let rider_witness = {
        let logged = LoggedProvider {
            inner: &provider,
            bus: RefCell::new(&mut bus),
        };
        rider_witness_test(&reported, &logged, &sigma, &mp_keys.public)
    };
    let rider_commitments: Vec<_> = reported
        .iter()
        .filter(|r| r.verify(&mp_keys.public))
        .map(|r| r.commitment)
        .collect();

    let mut sensor_rng = agent_rng(seed, "sensors");
    let mut sightings: Vec<Sighting> = sightings_from_trips(&truth);
    let (audit_public, audit_summary) = match &s.audit {
        AuditSpec::None => (AuditPublic::None, AuditSummary::None),
        AuditSpec::Ara { epsilon, noise } => {
            if *noise > 0.0 {
                let mut noise_rng = agent_rng(seed, "gps-noise");
                sightings.retain(|_| !noise_rng.gen_bool(*noise));
            }
            let mut sensors =
                deploy_ara_sensors(net, &ma_keys.public, &mp_keys.public, &mut sensor_rng);
            collect(&mut sensors, &sightings);
            let agg = ara_run(&mut sensors, &ma_keys, &mp_keys, &mut sensor_rng, &mut bus)?;
            (
                AuditPublic::Ara {
                    phi: agg.phi,
                    epsilon: *epsilon,
                },
                AuditSummary::Ara {
                    phi: agg.phi,
                    epsilon: *epsilon,
                    leader: agg.leader,
                    contributors: agg.contributors.len(),
                },
            )
        }
        AuditSpec::Rra {
            p,
            rounds,
            round_len,
        } => {
            let m = net.edge_count();
            let config = RraConfig {
                p: *p,
                rounds: *rounds,
                round_len: *round_len,
            };
            let mut sensors = deploy_rra_sensors(
                sample_size(m, *p),
                &ma_keys.public,
                &mp_keys.public,
                *round_len,
                &mut sensor_rng,
            );
            let ma_seed = agent_rng(seed, "ma-rra").next_u64();
            let record = rra_run(
                &mut sensors,
                m,
                &sightings,
                &config,
                ma_seed,
                &ma_keys,
                &mp_keys,
                &mut bus,
            )?;
            (
                AuditPublic::Rra {
                    round_len: *round_len,
                    counts: record.accepted.clone(),
                },
                AuditSummary::Rra {
                    rounds: *rounds,
                    watched: sample_size(m, *p),
                    accepted: record.accepted.len(),
                    rejected: record.rejected.len(),
                },
            )
        }
    };

    let proof_system = match s.backend {
        crate::proofsys::Backend::Transparent => ProofSystem::transparent(),
        crate::proofsys::Backend::OpaqueSealed => ProofSystem::opaque(oracle),
    };

    let mut detections = Vec::new();
    let mut total_fine = 0.0;
    for r in &rider_witness.evidence {
        let f = levy_fine(Some(Detection::RiderWitness), &s.fines);
        detections.push(format!("rider_witness trip={} fine={f:.2}", r.trip_id));
        total_fine += f;
    }

    // Stages 2 to 6, one query at a time.
    let mut queries = Vec::new();
    let mut bundles = Vec::new();
    let mut rra_fined = false;
    for q in &s.queries {
        let name = q.kind().name().to_string();
        bus.set_stage(2);
        bus.push(Agent::Ma, Agent::Mp, DataClass::Query, encode_query(q));

        bus.set_stage(3);
        let circuit = EvaluationCircuit {
            network: net.clone(),
            pk_mp: mp_keys.public.clone(),
            sigma,
            audit: audit_public.clone(),
            rider_reports: rider_commitments.clone(),
            query: q.clone(),
            tol: s.tol,
        };
        let pp = proof_system.setup(&circuit)?;
        bus.push(Agent::Ma, Agent::Mp, DataClass::PublicParams, pp.encode());

        bus.set_stage(4);
        let answer = match provider.answer_query(q, net, s.tol) {
            Ok(a) => a,
            Err(QueryRejection::Inadmissible(_)) => {
                bus.push(
                    Agent::Mp,
                    Agent::Ma,
                    DataClass::Rejection,
                    name.clone().into_bytes(),
                );
                queries.push((name, QueryOutcome::Rejected));
                continue;
            }
            Err(e) => {
                bus.push(
                    Agent::Mp,
                    Agent::Ma,
                    DataClass::Rejection,
                    e.to_string().into_bytes(),
                );
                queries.push((name, QueryOutcome::Unanswered(e.to_string())));
                continue;
            }
        };
        bus.push(
            Agent::Mp,
            Agent::Ma,
            DataClass::Answer,
            encode_value(&answer.z),
        );

        bus.set_stage(5);
        let transcript = proof_system.prove(&pp, &circuit, &answer.z, &answer.witness)?;
        if proof_system.backend() == crate::proofsys::Backend::OpaqueSealed {
            bus.push(
                Agent::Mp,
                Agent::Oracle,
                DataClass::Witness,
                encode_witness(&answer.witness),
            );
            bus.push(
                Agent::Oracle,
                Agent::Mp,
                DataClass::Transcript,
                transcript.to_bytes(),
            );
        }
        bus.push(
            Agent::Mp,
            Agent::Ma,
            DataClass::Transcript,
            transcript.to_bytes(),
        );

        bus.set_stage(6);
        let accepted = verify(&pp, &circuit, &answer.z, &transcript);
        let mut fine = 0.0;
        if !accepted && matches!(s.audit, AuditSpec::Rra { .. }) && !rra_fined {
            fine = levy_fine(Some(Detection::Rra), &s.fines);
            rra_fined = true;
            detections.push(format!("rra query={name} fine={fine:.2}"));
            total_fine += fine;
        } else if !accepted {
            detections.push(format!("proof_rejected query={name}"));
        }
        let verdict = Verdict {
            accepted,
            failure_class: if accepted {
                None
            } else {
                failure_class(&circuit, &answer.z, &transcript).map(str::to_string)
            },
            fine,
        };
        bundles.push((
            name.clone(),
            encode_bundle(&ProofBundle {
                pp,
                circuit,
                z: answer.z.clone(),
                transcript,
            }),
        ));
        queries.push((
            name,
            QueryOutcome::Verified {
                z: answer.z.to_text(),
                verdict,
            },
        ));
    }

    let committed = provider.committed().to_vec();
    let privacy = privacy_check(
        &bus,
        &truth,
        &committed,
        proof_system.backend() == crate::proofsys::Backend::OpaqueSealed,
    );
    let report = RunReport {
        scenario: s.name.clone(),
        seed,
        backend: proof_system.backend().name().to_string(),
        strategy: s.strategy.name().to_string(),
        served: truth.len(),
        unserved: unserved.len(),
        committed: committed.len(),
        sigma: sigma.to_hex(),
        audit: audit_summary,
        rider_witness,
        queries,
        detections,
        total_fine,
        privacy,
        events: bus.len(),
        event_digest: bus.digest().to_hex(),
    };
    Ok(RunOutcome {
        report,
        log: bus,
        receipts,
        bundles,
        ground_truth: truth,
        committed,
    })
}

/// Windows this long are compared when scanning for leaked trip bytes.
const SCAN_WINDOW: usize = 16;

/// A window is only meaningful evidence of a leak if it carries more than
/// small integers. Times, ids and counts encode as runs of bytes below
/// 0x20 in every message format, so a window needs at least four bytes
/// at or above 0x20 (float, text, key or hash material) to count.
fn informative(w: &[u8]) -> bool {
    w.iter().filter(|b| **b >= 0x20).count() >= 4
}

/// Counts trip-encoding windows that occur in anything the MA received.
pub fn plaintext_hits(log: &EventLog, trips: &[TripRecord]) -> usize {
    let mut seen: HashSet<&[u8]> = HashSet::new();
    for e in log.received_by(Agent::Ma) {
        for w in e.payload.windows(SCAN_WINDOW) {
            seen.insert(w);
        }
    }
    trips
        .iter()
        .map(|t| {
            let enc = t.encode();
            enc.windows(SCAN_WINDOW)
                .filter(|w| informative(w) && seen.contains(*w))
                .count()
        })
        .sum()
}

/// Events where a sensor released data before both parties permitted it,
/// or after it was erased.
pub fn lifecycle_violations(log: &EventLog) -> usize {
    use std::collections::BTreeMap;
    let mut permits: BTreeMap<usize, (bool, bool)> = BTreeMap::new();
    let mut erased: BTreeSet<usize> = BTreeSet::new();
    let mut violations = 0;
    for e in log.events() {
        match (e.from, e.to) {
            (from, Agent::Sensor(i)) if e.class == DataClass::Control => {
                let entry = permits.entry(i).or_default();
                if e.payload.starts_with(b"permit:") {
                    match from {
                        Agent::Ma => entry.0 = true,
                        Agent::Mp => entry.1 = true,
                        _ => {}
                    }
                }
                if e.payload.starts_with(b"erase:") && entry.0 && entry.1 {
                    // Erasure takes effect once both halves arrive; the
                    // second half is the one that completes it.
                    if from == Agent::Mp {
                        erased.insert(i);
                    }
                }
            }
            (Agent::Sensor(i), _) => {
                let ok = permits.get(&i).is_some_and(|p| p.0 && p.1) && !erased.contains(&i);
                if !ok {
                    violations += 1;
                }
            }
            _ => {}
        }
    }
    violations
}

fn privacy_check(
    log: &EventLog,
    truth: &[TripRecord],
    committed: &[TripRecord],
    enforced: bool,
) -> PrivacyCheck {
    let mut ma_classes = BTreeSet::new();
    let mut ma_unsanctioned = 0;
    for e in log.received_by(Agent::Ma) {
        ma_classes.insert(format!("{:?}", e.class));
        if !e.class.sanctioned_for_ma() {
            ma_unsanctioned += 1;
        }
    }
    let mut all = truth.to_vec();
    all.extend(committed.iter().cloned());
    PrivacyCheck {
        enforced,
        ma_classes,
        ma_unsanctioned,
        ma_plaintext_hits: plaintext_hits(log, &all),
        lifecycle_violations: lifecycle_violations(log),
    }
}
