//! A self-contained file for offline verification: public parameters, the
//! circuit, the claimed answer and the proof.

use crate::authority::wire::{decode_circuit, decode_value, encode_circuit, encode_value};
use crate::authority::{EvaluationCircuit, QueryValue};
use crate::codec::{Reader, Writer};

use super::{verify, ProofError, ProofTranscript, PublicParams};

const MAGIC: &str = "pmm-proof-bundle-v1";

#[derive(Clone, Debug, PartialEq)]
pub struct ProofBundle {
    pub pp: PublicParams,
    pub circuit: EvaluationCircuit,
    pub z: QueryValue,
    pub transcript: ProofTranscript,
}

pub fn encode_bundle(b: &ProofBundle) -> Vec<u8> {
    let mut w = Writer::new();
    w.str(MAGIC)
        .bytes(&b.pp.encode())
        .bytes(&encode_circuit(&b.circuit))
        .bytes(&encode_value(&b.z))
        .bytes(&b.transcript.to_bytes());
    w.finish()
}

pub fn decode_bundle(bytes: &[u8]) -> Result<ProofBundle, ProofError> {
    let mut r = Reader::new(bytes);
    if r.str()? != MAGIC {
        return Err(ProofError::MalformedCircuit("not a proof bundle".into()));
    }
    let pp = PublicParams::decode(r.bytes()?)?;
    let circuit = decode_circuit(r.bytes()?)?;
    let z = decode_value(r.bytes()?)?;
    let transcript = ProofTranscript::from_bytes(r.bytes()?)?;
    r.finish()?;
    Ok(ProofBundle {
        pp,
        circuit,
        z,
        transcript,
    })
}

/// Decodes and verifies a bundle.
pub fn verify_bundle(bytes: &[u8]) -> Result<bool, ProofError> {
    let b = decode_bundle(bytes)?;
    Ok(verify(&b.pp, &b.circuit, &b.z, &b.transcript))
}
