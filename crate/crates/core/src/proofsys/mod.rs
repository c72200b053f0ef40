//! The `(S, P, V)` proof-system interface and two backends.
//!
//! [`Backend::Transparent`] embeds the witness in the proof and the verifier
//! re-runs the circuit. It is a debugging aid that reveals everything.
//!
//! [`Backend::OpaqueSealed`] hands the witness to a [`VerifierOracle`] that
//! both parties trust. The oracle runs the circuit and signs a constant-size
//! attestation; the proof carries only that attestation and a hiding
//! commitment to the witness. A real succinct argument could replace the
//! oracle without changing any caller.

mod bundle;

pub use bundle::{decode_bundle, encode_bundle, verify_bundle, ProofBundle};

use rand::{CryptoRng, RngCore};
use thiserror::Error;

use crate::authority::wire::{decode_witness, encode_circuit, encode_value, encode_witness};
use crate::authority::{diagnose, AuditPublic, EvalError, EvaluationCircuit, QueryValue, Witness};
use crate::codec::{DecodeError, Reader, Writer};
use crate::crypto::{
    commit, hash, keygen, sign, verify_sig, Digest, KeyPair, Nonce, PublicKey, Signature,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProofError {
    #[error("malformed circuit: {0}")]
    MalformedCircuit(String),
    #[error("the opaque backend needs a verifier oracle")]
    MissingOracle,
    #[error("unknown backend id {0}")]
    UnknownBackend(u32),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Backend {
    Transparent,
    OpaqueSealed,
}

impl Backend {
    pub fn id(self) -> u32 {
        match self {
            Backend::Transparent => 1,
            Backend::OpaqueSealed => 2,
        }
    }

    pub fn from_id(id: u32) -> Result<Self, ProofError> {
        match id {
            1 => Ok(Backend::Transparent),
            2 => Ok(Backend::OpaqueSealed),
            other => Err(ProofError::UnknownBackend(other)),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Backend::Transparent => "transparent",
            Backend::OpaqueSealed => "opaque",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "transparent" => Some(Backend::Transparent),
            "opaque" => Some(Backend::OpaqueSealed),
            _ => None,
        }
    }
}

/// Public parameters `pp`: which circuit, which public inputs, which backend.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PublicParams {
    pub backend: Backend,
    pub circuit_digest: Digest,
    pub sigma: Digest,
    pub query: String,
    pub oracle: Option<PublicKey>,
}

impl PublicParams {
    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.u32(self.backend.id())
            .bytes(self.circuit_digest.as_bytes())
            .bytes(self.sigma.as_bytes())
            .str(&self.query);
        match &self.oracle {
            Some(pk) => w.bool(true).bytes(&pk.0),
            None => w.bool(false),
        };
        w.finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, ProofError> {
        let mut r = Reader::new(bytes);
        let backend = Backend::from_id(r.u32()?)?;
        let circuit_digest = Digest(r.array32()?);
        let sigma = Digest(r.array32()?);
        let query = r.str()?.to_string();
        let oracle = if r.bool()? {
            Some(PublicKey(r.bytes()?.to_vec()))
        } else {
            None
        };
        r.finish()?;
        Ok(Self {
            backend,
            circuit_digest,
            sigma,
            query,
            oracle,
        })
    }

    pub fn digest(&self) -> Digest {
        hash(&self.encode())
    }
}

/// A proof `pi`. Serialized as a 4-byte backend id, the 32-byte digest of
/// the public parameters, then the backend payload.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofTranscript {
    pub backend: Backend,
    pub pp_digest: Digest,
    pub payload: Vec<u8>,
}

impl ProofTranscript {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(36 + self.payload.len());
        out.extend_from_slice(&self.backend.id().to_be_bytes());
        out.extend_from_slice(self.pp_digest.as_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ProofError> {
        if bytes.len() < 36 {
            return Err(DecodeError::Truncated(bytes.len()).into());
        }
        let backend = Backend::from_id(u32::from_be_bytes(bytes[..4].try_into().unwrap()))?;
        let pp_digest = Digest(bytes[4..36].try_into().unwrap());
        Ok(Self {
            backend,
            pp_digest,
            payload: bytes[36..].to_vec(),
        })
    }
}

/// The sealed evaluator behind the opaque backend. Only its public key ever
/// leaves this struct.
#[derive(Debug)]
pub struct VerifierOracle {
    keys: KeyPair,
}

/// What the oracle signs: `(pp, z, accept, witness commitment)`.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Attestation {
    z_digest: Digest,
    accept: bool,
    witness_commitment: Digest,
    signature: Signature,
}

const ATTESTATION_LEN: usize = 32 + 1 + 32 + 64;

impl Attestation {
    fn message(
        pp_digest: &Digest,
        z_digest: &Digest,
        accept: bool,
        witness_commitment: &Digest,
    ) -> Vec<u8> {
        let mut w = Writer::new();
        w.str("pmm-attestation")
            .bytes(pp_digest.as_bytes())
            .bytes(z_digest.as_bytes())
            .bool(accept)
            .bytes(witness_commitment.as_bytes());
        w.finish()
    }

    fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(ATTESTATION_LEN);
        out.extend_from_slice(self.z_digest.as_bytes());
        out.push(self.accept as u8);
        out.extend_from_slice(self.witness_commitment.as_bytes());
        out.extend_from_slice(&self.signature.0);
        out
    }

    fn from_bytes(b: &[u8]) -> Option<Self> {
        if b.len() != ATTESTATION_LEN || b[32] > 1 {
            return None;
        }
        Some(Self {
            z_digest: Digest(b[..32].try_into().ok()?),
            accept: b[32] == 1,
            witness_commitment: Digest(b[33..65].try_into().ok()?),
            signature: Signature(b[65..].to_vec()),
        })
    }
}

impl VerifierOracle {
    pub fn new<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        Self { keys: keygen(rng) }
    }

    pub fn public_key(&self) -> &PublicKey {
        &self.keys.public
    }

    /// Runs `C(x, w)` and signs the outcome. The witness commitment uses a
    /// nonce derived from the oracle's own signature on the witness, so it
    /// hides the witness from anyone without the oracle key and is still
    /// reproducible for a fixed oracle.
    fn attest(
        &self,
        pp: &PublicParams,
        circuit: &EvaluationCircuit,
        z: &QueryValue,
        w: &Witness,
    ) -> Result<Vec<u8>, ProofError> {
        let bound = pp.circuit_digest == circuit_digest(circuit) && pp.sigma == circuit.sigma;
        let accept = bound && diagnose(circuit, z, w).is_ok();
        let encoded = encode_witness(w);
        let seed = sign(&self.keys.secret, hash(&encoded).as_bytes())
            .map_err(|e| ProofError::MalformedCircuit(e.to_string()))?;
        let nonce = Nonce(hash(&seed.0).0);
        let witness_commitment = commit(&nonce, &encoded);
        let z_digest = hash(&encode_value(z));
        let msg = Attestation::message(&pp.digest(), &z_digest, accept, &witness_commitment);
        let signature = sign(&self.keys.secret, &msg)
            .map_err(|e| ProofError::MalformedCircuit(e.to_string()))?;
        Ok(Attestation {
            z_digest,
            accept,
            witness_commitment,
            signature,
        }
        .to_bytes())
    }
}

pub fn circuit_digest(circuit: &EvaluationCircuit) -> Digest {
    hash(&encode_circuit(circuit))
}

/// A configured proof system: a backend plus, for the opaque one, its oracle.
#[derive(Debug)]
pub struct ProofSystem {
    backend: Backend,
    oracle: Option<VerifierOracle>,
}

impl ProofSystem {
    pub fn transparent() -> Self {
        Self {
            backend: Backend::Transparent,
            oracle: None,
        }
    }

    pub fn opaque(oracle: VerifierOracle) -> Self {
        Self {
            backend: Backend::OpaqueSealed,
            oracle: Some(oracle),
        }
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    /// `S`: binds the circuit and its public inputs.
    pub fn setup(&self, circuit: &EvaluationCircuit) -> Result<PublicParams, ProofError> {
        check_well_formed(circuit)?;
        let oracle = match self.backend {
            Backend::Transparent => None,
            Backend::OpaqueSealed => Some(
                self.oracle
                    .as_ref()
                    .ok_or(ProofError::MissingOracle)?
                    .public_key()
                    .clone(),
            ),
        };
        Ok(PublicParams {
            backend: self.backend,
            circuit_digest: circuit_digest(circuit),
            sigma: circuit.sigma,
            query: circuit.query.kind().name().to_string(),
            oracle,
        })
    }

    /// `P`: proving a false statement is allowed; verification then fails.
    pub fn prove(
        &self,
        pp: &PublicParams,
        circuit: &EvaluationCircuit,
        z: &QueryValue,
        w: &Witness,
    ) -> Result<ProofTranscript, ProofError> {
        let payload = match self.backend {
            Backend::Transparent => encode_witness(w),
            Backend::OpaqueSealed => self
                .oracle
                .as_ref()
                .ok_or(ProofError::MissingOracle)?
                .attest(pp, circuit, z, w)?,
        };
        Ok(ProofTranscript {
            backend: self.backend,
            pp_digest: pp.digest(),
            payload,
        })
    }
}

fn check_well_formed(c: &EvaluationCircuit) -> Result<(), ProofError> {
    if !(c.tol.is_finite() && c.tol >= 0.0) {
        return Err(ProofError::MalformedCircuit(format!("tolerance {}", c.tol)));
    }
    if let AuditPublic::Ara { epsilon, .. } = c.audit {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(ProofError::MalformedCircuit(format!(
                "ARA tolerance {epsilon}"
            )));
        }
    }
    if c.network.edge_count() == 0 {
        return Err(ProofError::MalformedCircuit("network has no edges".into()));
    }
    Ok(())
}

/// `V`: accepts only a transcript made for exactly these parameters.
pub fn verify(
    pp: &PublicParams,
    circuit: &EvaluationCircuit,
    z: &QueryValue,
    t: &ProofTranscript,
) -> bool {
    if t.backend != pp.backend || t.pp_digest != pp.digest() {
        return false;
    }
    if pp.circuit_digest != circuit_digest(circuit) || pp.sigma != circuit.sigma {
        return false;
    }
    match t.backend {
        Backend::Transparent => match decode_witness(&t.payload) {
            Ok(w) => diagnose(circuit, z, &w).is_ok(),
            Err(_) => false,
        },
        Backend::OpaqueSealed => {
            let (Some(pk), Some(a)) = (&pp.oracle, Attestation::from_bytes(&t.payload)) else {
                return false;
            };
            let msg =
                Attestation::message(&t.pp_digest, &a.z_digest, a.accept, &a.witness_commitment);
            a.z_digest == hash(&encode_value(z)) && verify_sig(pk, &msg, &a.signature) && a.accept
        }
    }
}

/// The failure class behind a rejection. Only the transparent backend can
/// say why; the opaque one answers `None` by design.
pub fn failure_class(
    circuit: &EvaluationCircuit,
    z: &QueryValue,
    t: &ProofTranscript,
) -> Option<&'static str> {
    if t.backend != Backend::Transparent {
        return None;
    }
    match decode_witness(&t.payload) {
        Ok(w) => diagnose(circuit, z, &w).err().map(|f| f.class()),
        Err(_) => Some("malformed"),
    }
}
