//! The mobility provider.
//!
//! It serves requests, issues signed receipts, commits to its trip data,
//! answers Merkle proof requests and answers queries with a witness. A
//! [`Strategy`] decides what gets committed; the ground truth it served is
//! kept separately and never altered.

mod serve;
mod strategy;

pub use serve::{
    serve_and_record, FleetVehicle, Request, ServeOutcome, ServePolicy, UnservedReason,
};
pub use strategy::{Strategy, TripEdit};

use std::collections::{BTreeMap, BTreeSet};

use rand::RngCore;
use thiserror::Error;

use crate::authority::{
    answer, Certificate, EvalContext, EvalError, Query, QueryKind, QueryValue, Witness,
};
use crate::crypto::{
    commit, mcommit, sign, verify_sig, CryptoError, Digest, KeyPair, MerkleProof, MerkleTree,
    Nonce, PublicKey, Signature,
};
use crate::netmodel::{EdgeId, Network, TrajectoryStep, TripRecord, Vehicle, Violation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProviderError {
    #[error("no trip with id {0}")]
    UnknownTrip(u64),
    #[error("fabricated trip {0} is malformed: {1:?}")]
    InvalidFabrication(u64, Vec<Violation>),
    #[error("nothing has been committed yet")]
    NotCommitted,
    #[error("edges do not form a path")]
    BrokenPath,
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

/// `(H(r_i || λ_i), σ_i)` handed to the rider of trip `trip_id`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Receipt {
    pub trip_id: u64,
    pub commitment: Digest,
    pub signature: Signature,
}

impl Receipt {
    pub fn verify(&self, pk_mp: &PublicKey) -> bool {
        verify_sig(pk_mp, self.commitment.as_bytes(), &self.signature)
    }

    pub fn to_text(&self) -> String {
        format!(
            "receipt trip={} commit={} sig={}",
            self.trip_id,
            self.commitment,
            self.signature.to_hex()
        )
    }
}

/// The MP declined to produce a Merkle proof: the leaf is not committed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
#[error("no committed leaf matches the receipt")]
pub struct Refusal;

/// The MP declined a query outside the agreed whitelist.
#[derive(Clone, Debug, PartialEq, Error)]
pub enum QueryRejection {
    #[error("query kind {0:?} is not admissible")]
    Inadmissible(QueryKind),
    #[error("query could not be answered: {0}")]
    Failed(EvalError),
    #[error("nothing has been committed yet")]
    NotCommitted,
}

/// `z` together with the witness `w = (Λ_w, r_w, c_w)`.
#[derive(Clone, Debug, PartialEq)]
pub struct QueryAnswer {
    pub z: QueryValue,
    pub witness: Witness,
}

#[derive(Debug)]
pub struct ProviderState {
    keys: KeyPair,
    strategy: Strategy,
    admissible: BTreeSet<QueryKind>,
    truth: Vec<TripRecord>,
    rider_nonces: BTreeMap<u64, Nonce>,
    committed: Vec<TripRecord>,
    nonces: Vec<Nonce>,
    tree: Option<MerkleTree>,
}

impl ProviderState {
    pub fn new(
        keys: KeyPair,
        strategy: Strategy,
        admissible: impl IntoIterator<Item = QueryKind>,
    ) -> Self {
        Self {
            keys,
            strategy,
            admissible: admissible.into_iter().collect(),
            truth: Vec::new(),
            rider_nonces: BTreeMap::new(),
            committed: Vec::new(),
            nonces: Vec::new(),
            tree: None,
        }
    }

    pub fn public_key(&self) -> &PublicKey {
        &self.keys.public
    }

    pub fn keys(&self) -> &KeyPair {
        &self.keys
    }

    pub fn strategy(&self) -> &Strategy {
        &self.strategy
    }

    /// Serves requests and records the resulting trips as ground truth.
    pub fn serve(
        &mut self,
        requests: &[Request],
        network: &Network,
        policy: &ServePolicy,
    ) -> Result<Vec<(u64, UnservedReason)>, ProviderError> {
        let out = serve_and_record(requests, network, policy, &self.keys)?;
        self.truth.extend(out.trips);
        Ok(out.unserved)
    }

    /// Adds already-built trips to the ground truth.
    pub fn record_trips(&mut self, trips: impl IntoIterator<Item = TripRecord>) {
        self.truth.extend(trips);
    }

    pub fn ground_truth(&self) -> &[TripRecord] {
        &self.truth
    }

    /// Signs `H(rider_nonce || λ)` for a served trip. The rider's nonce
    /// becomes that trip's leaf nonce in the commitment.
    pub fn issue_receipt(
        &mut self,
        trip_id: u64,
        rider_nonce: Nonce,
    ) -> Result<Receipt, ProviderError> {
        let trip = self
            .truth
            .iter()
            .find(|t| t.trip_id == trip_id)
            .ok_or(ProviderError::UnknownTrip(trip_id))?;
        let commitment = commit(&rider_nonce, &trip.encode());
        let signature = sign(&self.keys.secret, commitment.as_bytes())?;
        self.rider_nonces.insert(trip_id, rider_nonce);
        Ok(Receipt {
            trip_id,
            commitment,
            signature,
        })
    }

    /// Builds the Merkle tree over the strategy's dataset and returns its
    /// root `sigma`. Trips without a rider nonce get a fresh one from `rng`.
    pub fn commit_demand<R: RngCore>(
        &mut self,
        network: &Network,
        rng: &mut R,
    ) -> Result<Digest, ProviderError> {
        let committed = self.strategy.apply(&self.truth, network, &self.keys)?;
        let nonces: Vec<Nonce> = committed
            .iter()
            .map(|t| match self.rider_nonces.get(&t.trip_id) {
                Some(n) if self.truth.iter().any(|x| x.trip_id == t.trip_id) => *n,
                _ => Nonce::random(rng),
            })
            .collect();
        let encodings: Vec<Vec<u8>> = committed.iter().map(TripRecord::encode).collect();
        let tree = mcommit(&encodings, &nonces)?;
        let root = tree.root();
        self.committed = committed;
        self.nonces = nonces;
        self.tree = Some(tree);
        Ok(root)
    }

    pub fn committed(&self) -> &[TripRecord] {
        &self.committed
    }

    pub fn sigma(&self) -> Option<Digest> {
        self.tree.as_ref().map(MerkleTree::root)
    }

    pub fn tree(&self) -> Option<&MerkleTree> {
        self.tree.as_ref()
    }

    /// A proof that the receipt's leaf is in the committed tree, or a
    /// refusal when it is not.
    pub fn respond_merkle_request(&self, receipt: &Receipt) -> Result<MerkleProof, Refusal> {
        let tree = self.tree.as_ref().ok_or(Refusal)?;
        let i = tree.position_of(&receipt.commitment).ok_or(Refusal)?;
        tree.prove(i).map_err(|_| Refusal)
    }

    /// Computes `z` on the committed dataset and assembles the witness.
    pub fn answer_query(
        &self,
        query: &Query,
        network: &Network,
        tol: f64,
    ) -> Result<QueryAnswer, QueryRejection> {
        if !self.admissible.contains(&query.kind()) {
            return Err(QueryRejection::Inadmissible(query.kind()));
        }
        if self.tree.is_none() {
            return Err(QueryRejection::NotCommitted);
        }
        let ctx = EvalContext {
            network,
            pk_mp: &self.keys.public,
            tol,
        };
        let (z, certificate) =
            answer(query, &self.committed, &ctx).map_err(QueryRejection::Failed)?;
        Ok(QueryAnswer {
            z,
            witness: Witness {
                trips: self.committed.clone(),
                nonces: self.nonces.clone(),
                certificate,
            },
        })
    }

    /// Witness without a certificate, for tests that tamper with it.
    pub fn bare_witness(&self) -> Witness {
        Witness {
            trips: self.committed.clone(),
            nonces: self.nonces.clone(),
            certificate: Certificate::None,
        }
    }
}

/// A well-formed trip that drives `edges` back to back from `start`, with
/// pickup at the first edge and dropoff at the end of the last. Used to
/// script fabricated demand.
pub fn fabricate_trip(
    network: &Network,
    trip_id: u64,
    edges: &[EdgeId],
    start: u32,
    vehicle: Vehicle,
) -> Result<TripRecord, ProviderError> {
    let es: Vec<_> = edges
        .iter()
        .map(|&e| network.edge(e).ok_or(ProviderError::BrokenPath))
        .collect::<Result<_, _>>()?;
    if es.is_empty() || es.windows(2).any(|w| w[0].dst != w[1].src) {
        return Err(ProviderError::BrokenPath);
    }
    let mut clock = start;
    let mut trajectory = Vec::new();
    for e in &es {
        trajectory.push(TrajectoryStep {
            edge: e.id,
            entry_time: clock,
        });
        clock += e.tau;
    }
    Ok(TripRecord {
        trip_id,
        pickup_loc: es[0].src,
        dropoff_loc: es[es.len() - 1].dst,
        request_time: start,
        match_time: start,
        pickup_time: start,
        dropoff_time: clock,
        driver_wage: 0.0,
        trip_fare: 0.0,
        trajectory,
        vehicle,
        match_notice: None,
    })
}
