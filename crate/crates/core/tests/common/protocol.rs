//! Fixtures for protocol-level tests: bundled scenarios and a served,
//! committed provider built without the harness.

use std::path::{Path, PathBuf};

use pmm_core::authority::QueryKind;
use pmm_core::crypto::{keygen, KeyPair, Nonce};
use pmm_core::harness::{agent_rng, build_requests, Scenario};
use pmm_core::netmodel::Network;
use pmm_core::provider::{ProviderState, Receipt, Strategy};

pub fn scenario_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

pub fn load(name: &str) -> Scenario {
    let path = scenario_dir().join(format!("{name}.pmm"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    Scenario::parse(&text).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Every bundled scenario, sorted by name.
pub fn all_scenarios() -> Vec<Scenario> {
    let mut names: Vec<String> = std::fs::read_dir(scenario_dir())
        .unwrap()
        .filter_map(|e| {
            let p = e.ok()?.path();
            (p.extension()? == "pmm").then(|| p.file_stem()?.to_str().map(str::to_string))?
        })
        .collect();
    names.sort();
    names.iter().map(|n| load(n)).collect()
}

pub fn admissible() -> Vec<QueryKind> {
    QueryKind::ALL
        .into_iter()
        .filter(|k| *k != QueryKind::RawTrips)
        .collect()
}

/// A provider that served a scenario's requests, issued every receipt and
/// committed under `strategy`.
pub struct Served {
    pub network: Network,
    pub provider: ProviderState,
    pub receipts: Vec<Receipt>,
    pub rider_nonces: Vec<Nonce>,
    pub mp: KeyPair,
    pub ma: KeyPair,
}

pub fn serve(s: &Scenario, strategy: Strategy, seed: u64) -> Served {
    let mut key_rng = agent_rng(seed, "keys");
    let ma = keygen(&mut key_rng);
    let mp = keygen(&mut key_rng);
    let mut provider = ProviderState::new(mp.clone(), strategy, admissible());
    provider
        .serve(&build_requests(s, seed), &s.network, &s.policy)
        .unwrap();
    let mut rider_rng = agent_rng(seed, "riders");
    let mut receipts = Vec::new();
    let mut rider_nonces = Vec::new();
    let ids: Vec<u64> = provider.ground_truth().iter().map(|t| t.trip_id).collect();
    for id in ids {
        let n = Nonce::random(&mut rider_rng);
        receipts.push(provider.issue_receipt(id, n).unwrap());
        rider_nonces.push(n);
    }
    provider
        .commit_demand(&s.network, &mut agent_rng(seed, "mp"))
        .unwrap();
    Served {
        network: s.network.clone(),
        provider,
        receipts,
        rider_nonces,
        mp,
        ma,
    }
}

/// The circuit for `query` over a served provider, with every receipt
/// reported and no roadside audit.
pub fn circuit(
    s: &Scenario,
    served: &Served,
    query: pmm_core::authority::Query,
) -> pmm_core::authority::EvaluationCircuit {
    pmm_core::authority::EvaluationCircuit {
        network: s.network.clone(),
        pk_mp: served.provider.public_key().clone(),
        sigma: served.provider.sigma().unwrap(),
        audit: pmm_core::authority::AuditPublic::None,
        rider_reports: served.receipts.iter().map(|r| r.commitment).collect(),
        query,
        tol: 1e-6,
    }
}
