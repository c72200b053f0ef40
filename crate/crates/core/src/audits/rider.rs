//! Rider witness test: riders holding signed receipts demand Merkle proofs.

use crate::crypto::{merkle_verify_commitment, Digest, MerkleProof, Nonce, PublicKey};
use crate::provider::{ProviderState, Receipt, Refusal};

/// Anything that answers Merkle proof requests for receipts.
pub trait MerkleResponder {
    fn respond_merkle_request(&self, receipt: &Receipt) -> Result<MerkleProof, Refusal>;
}

impl MerkleResponder for ProviderState {
    fn respond_merkle_request(&self, receipt: &Receipt) -> Result<MerkleProof, Refusal> {
        ProviderState::respond_merkle_request(self, receipt)
    }
}

/// What a rider keeps after a ride. Only the receipt is ever sent to the MA.
#[derive(Clone, Debug, PartialEq)]
pub struct RiderReport {
    pub receipt: Receipt,
    pub rider_nonce: Nonce,
    pub trip_encoding: Vec<u8>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RiderWitnessOutcome {
    /// Reports with a valid MP signature that were checked.
    pub checked: usize,
    /// Reports whose signature did not verify and were ignored.
    pub discarded: usize,
    /// Genuine receipts the MP could not prove inclusion for.
    pub evidence: Vec<Receipt>,
}

impl RiderWitnessOutcome {
    pub fn passed(&self) -> bool {
        self.evidence.is_empty()
    }
}

/// Requests a proof for every genuinely signed receipt. The test fails when
/// any such receipt is refused or gets a proof that does not reach `sigma`.
pub fn rider_witness_test(
    reports: &[Receipt],
    provider: &impl MerkleResponder,
    sigma: &Digest,
    pk_mp: &PublicKey,
) -> RiderWitnessOutcome {
    let mut out = RiderWitnessOutcome::default();
    for r in reports {
        if !r.verify(pk_mp) {
            out.discarded += 1;
            continue;
        }
        out.checked += 1;
        let ok = match provider.respond_merkle_request(r) {
            Ok(proof) => merkle_verify_commitment(sigma, &r.commitment, &proof),
            Err(Refusal) => false,
        };
        if !ok {
            out.evidence.push(r.clone());
        }
    }
    out
}
