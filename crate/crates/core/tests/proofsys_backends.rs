//! Setup, proving and verification on both proof backends.

mod common;

use common::protocol::{circuit, load, serve, Served};
use pmm_core::authority::{Query, QueryValue, RegPredicate, Witness};
use pmm_core::crypto::Nonce;
use pmm_core::harness::{agent_rng, Scenario};
use pmm_core::proofsys::{
    decode_bundle, encode_bundle, failure_class, verify, verify_bundle, Backend, ProofBundle,
    ProofSystem, ProofTranscript, PublicParams, VerifierOracle,
};
use pmm_core::provider::Strategy;

fn systems(seed: u64) -> [ProofSystem; 2] {
    [
        ProofSystem::transparent(),
        ProofSystem::opaque(VerifierOracle::new(&mut agent_rng(seed, "oracle"))),
    ]
}

fn fixture() -> (Scenario, Served) {
    let s = load("honest_small");
    let served = serve(&s, Strategy::Honest, 21);
    (s, served)
}

fn queries(s: &Scenario) -> Vec<Query> {
    vec![
        Query::TripCount,
        Query::Wage {
            alpha: s.policy.wage_alpha,
            beta: s.policy.wage_beta,
        },
        Query::Regulation(vec![RegPredicate::Period2Accuracy]),
        Query::Emissions { threshold: 1e9 },
    ]
}

#[test]
fn setup_is_deterministic_and_binds_sigma() {
    let (s, served) = fixture();
    let other = serve(&s, Strategy::Honest, 22);
    for sys in systems(1) {
        let c = circuit(&s, &served, Query::TripCount);
        let pp = sys.setup(&c).unwrap();
        assert_eq!(pp, sys.setup(&c).unwrap());
        assert_eq!(PublicParams::decode(&pp.encode()).unwrap(), pp);
        let c2 = circuit(&s, &other, Query::TripCount);
        assert_ne!(pp.digest(), sys.setup(&c2).unwrap().digest());
    }
}

#[test]
fn setup_rejects_malformed_circuits() {
    let (s, served) = fixture();
    let mut c = circuit(&s, &served, Query::TripCount);
    c.tol = -1.0;
    assert!(ProofSystem::transparent().setup(&c).is_err());
}

#[test]
fn honest_proofs_verify_on_both_backends() {
    let (s, served) = fixture();
    for q in queries(&s) {
        let c = circuit(&s, &served, q);
        let a = served
            .provider
            .answer_query(&c.query, &s.network, c.tol)
            .unwrap();
        for sys in systems(2) {
            let pp = sys.setup(&c).unwrap();
            let t = sys.prove(&pp, &c, &a.z, &a.witness).unwrap();
            assert!(
                verify(&pp, &c, &a.z, &t),
                "{:?} {:?}",
                sys.backend(),
                c.query
            );
            let t2 = ProofTranscript::from_bytes(&t.to_bytes()).unwrap();
            assert_eq!(t, t2);
        }
    }
}

/// Honest witness plus a family of broken ones, all claiming the honest z.
fn witness_matrix(w: &Witness) -> Vec<(&'static str, Witness)> {
    let mut wrong_nonce = w.clone();
    wrong_nonce.nonces[0] = Nonce([7; 32]);
    let mut dropped = w.clone();
    dropped.trips.pop();
    dropped.nonces.pop();
    let mut swapped = w.clone();
    swapped.nonces.swap(0, 1);
    let mut edited = w.clone();
    edited.trips[0].trip_fare += 1.0;
    vec![
        ("honest", w.clone()),
        ("wrong nonce", wrong_nonce),
        ("dropped trip", dropped),
        ("swapped nonces", swapped),
        ("edited trip", edited),
    ]
}

#[test]
fn backends_agree_on_every_verdict() {
    let (s, served) = fixture();
    for q in queries(&s) {
        let c = circuit(&s, &served, q);
        let a = served
            .provider
            .answer_query(&c.query, &s.network, c.tol)
            .unwrap();
        let mut claims = vec![a.z.clone()];
        if let QueryValue::Count(n) = a.z {
            claims.push(QueryValue::Count(n + 1));
        }
        for (label, w) in witness_matrix(&a.witness) {
            for z in &claims {
                let verdicts: Vec<bool> = systems(3)
                    .iter()
                    .map(|sys| {
                        let pp = sys.setup(&c).unwrap();
                        verify(&pp, &c, z, &sys.prove(&pp, &c, z, &w).unwrap())
                    })
                    .collect();
                assert_eq!(verdicts[0], verdicts[1], "{label} {:?} z={z:?}", c.query);
                assert_eq!(
                    verdicts[0],
                    label == "honest" && *z == a.z,
                    "{label} z={z:?}"
                );
            }
        }
    }
}

#[test]
fn only_the_transparent_backend_explains_failures() {
    let (s, served) = fixture();
    let c = circuit(&s, &served, Query::TripCount);
    let a = served
        .provider
        .answer_query(&c.query, &s.network, c.tol)
        .unwrap();
    let mut w = a.witness.clone();
    w.nonces[0] = Nonce([1; 32]);
    let [tr, op] = systems(4);
    let pp = tr.setup(&c).unwrap();
    let t = tr.prove(&pp, &c, &a.z, &w).unwrap();
    // The reported receipts no longer match any leaf.
    assert_eq!(failure_class(&c, &a.z, &t), Some("integrity"));
    let pp = op.setup(&c).unwrap();
    let t = op.prove(&pp, &c, &a.z, &w).unwrap();
    assert!(!verify(&pp, &c, &a.z, &t));
    assert_eq!(failure_class(&c, &a.z, &t), None);
}

#[test]
fn transcript_replayed_under_another_sigma_is_rejected() {
    let (s, served) = fixture();
    let other = serve(&s, Strategy::Honest, 23);
    for sys in systems(5) {
        let c = circuit(&s, &served, Query::TripCount);
        let a = served
            .provider
            .answer_query(&c.query, &s.network, c.tol)
            .unwrap();
        let pp = sys.setup(&c).unwrap();
        let t = sys.prove(&pp, &c, &a.z, &a.witness).unwrap();
        let c2 = circuit(&s, &other, Query::TripCount);
        let pp2 = sys.setup(&c2).unwrap();
        assert!(!verify(&pp2, &c2, &a.z, &t), "{:?}", sys.backend());
        assert!(!verify(&pp, &c2, &a.z, &t), "{:?}", sys.backend());
    }
}

#[test]
fn attestation_from_a_different_oracle_is_rejected() {
    let (s, served) = fixture();
    let c = circuit(&s, &served, Query::TripCount);
    let a = served
        .provider
        .answer_query(&c.query, &s.network, c.tol)
        .unwrap();
    let genuine = ProofSystem::opaque(VerifierOracle::new(&mut agent_rng(6, "oracle")));
    let rogue = ProofSystem::opaque(VerifierOracle::new(&mut agent_rng(7, "oracle")));
    let pp = genuine.setup(&c).unwrap();
    let forged = rogue.prove(&pp, &c, &a.z, &a.witness).unwrap();
    assert!(!verify(&pp, &c, &a.z, &forged));
}

#[test]
fn opaque_transcripts_have_fixed_size_and_no_trip_bytes() {
    let (s, served) = fixture();
    let oracle = ProofSystem::opaque(VerifierOracle::new(&mut agent_rng(8, "oracle")));
    let mut sizes = std::collections::BTreeSet::new();
    for q in queries(&s) {
        let c = circuit(&s, &served, q);
        let a = served
            .provider
            .answer_query(&c.query, &s.network, c.tol)
            .unwrap();
        for (_, w) in witness_matrix(&a.witness) {
            let pp = oracle.setup(&c).unwrap();
            let bytes = oracle.prove(&pp, &c, &a.z, &w).unwrap().to_bytes();
            sizes.insert(bytes.len());
            for t in &w.trips {
                let enc = t.encode();
                for sub in enc.windows(8) {
                    assert!(
                        !bytes.windows(8).any(|x| x == sub),
                        "trip {} leaks",
                        t.trip_id
                    );
                }
            }
        }
    }
    assert_eq!(sizes.len(), 1);
}

#[test]
fn opaque_proving_is_reproducible() {
    let (s, served) = fixture();
    let c = circuit(&s, &served, Query::TripCount);
    let a = served
        .provider
        .answer_query(&c.query, &s.network, c.tol)
        .unwrap();
    let sys = ProofSystem::opaque(VerifierOracle::new(&mut agent_rng(9, "oracle")));
    let pp = sys.setup(&c).unwrap();
    let t1 = sys.prove(&pp, &c, &a.z, &a.witness).unwrap();
    let t2 = sys.prove(&pp, &c, &a.z, &a.witness.clone()).unwrap();
    assert_eq!(t1, t2);
    assert_eq!(t1.backend, Backend::OpaqueSealed);
}

#[test]
fn bundles_round_trip_and_detect_corruption() {
    let (s, served) = fixture();
    for sys in systems(10) {
        let c = circuit(&s, &served, Query::TripCount);
        let a = served
            .provider
            .answer_query(&c.query, &s.network, c.tol)
            .unwrap();
        let pp = sys.setup(&c).unwrap();
        let transcript = sys.prove(&pp, &c, &a.z, &a.witness).unwrap();
        let bundle = ProofBundle {
            pp,
            circuit: c,
            z: a.z.clone(),
            transcript,
        };
        let bytes = encode_bundle(&bundle);
        assert_eq!(decode_bundle(&bytes).unwrap(), bundle);
        assert_eq!(verify_bundle(&bytes), Ok(true));
        let mut lie = bundle.clone();
        lie.z = QueryValue::Count(0);
        assert_eq!(verify_bundle(&encode_bundle(&lie)), Ok(false));
        assert!(verify_bundle(&bytes[..bytes.len() - 1]).is_err());
    }
}
