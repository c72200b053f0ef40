//! Digital signatures. The default scheme is Ed25519.

use ed25519_dalek::{Signer as _, SigningKey, VerifyingKey};
use rand::{CryptoRng, RngCore};

use super::CryptoError;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct PublicKey(pub Vec<u8>);

impl PublicKey {
    pub fn to_hex(&self) -> String {
        hex::encode(&self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self, CryptoError> {
        hex::decode(s.trim())
            .map(PublicKey)
            .map_err(|_| CryptoError::BadHex(s.to_string()))
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct SecretKey(pub(crate) Vec<u8>);

impl std::fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("SecretKey(..)")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeyPair {
    pub public: PublicKey,
    pub secret: SecretKey,
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Signature(pub Vec<u8>);

impl Signature {
    pub fn to_hex(&self) -> String {
        hex::encode(&self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self, CryptoError> {
        hex::decode(s.trim())
            .map(Signature)
            .map_err(|_| CryptoError::BadHex(s.to_string()))
    }
}

pub trait SignatureScheme {
    fn keygen<R: RngCore + CryptoRng>(&self, rng: &mut R) -> KeyPair;
    fn sign(&self, sk: &SecretKey, msg: &[u8]) -> Result<Signature, CryptoError>;
    /// Never panics: malformed keys or signatures just fail verification.
    fn verify(&self, pk: &PublicKey, msg: &[u8], sig: &Signature) -> bool;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Ed25519;

impl SignatureScheme for Ed25519 {
    fn keygen<R: RngCore + CryptoRng>(&self, rng: &mut R) -> KeyPair {
        let sk = SigningKey::generate(rng);
        KeyPair {
            public: PublicKey(sk.verifying_key().to_bytes().to_vec()),
            secret: SecretKey(sk.to_bytes().to_vec()),
        }
    }

    fn sign(&self, sk: &SecretKey, msg: &[u8]) -> Result<Signature, CryptoError> {
        let bytes: [u8; 32] =
            sk.0.as_slice()
                .try_into()
                .map_err(|_| CryptoError::BadKey)?;
        let sk = SigningKey::from_bytes(&bytes);
        Ok(Signature(sk.sign(msg).to_bytes().to_vec()))
    }

    fn verify(&self, pk: &PublicKey, msg: &[u8], sig: &Signature) -> bool {
        let Ok(pk_bytes) = <[u8; 32]>::try_from(pk.0.as_slice()) else {
            return false;
        };
        let Ok(vk) = VerifyingKey::from_bytes(&pk_bytes) else {
            return false;
        };
        let Ok(sig) = ed25519_dalek::Signature::from_slice(&sig.0) else {
            return false;
        };
        vk.verify_strict(msg, &sig).is_ok()
    }
}

pub fn keygen<R: RngCore + CryptoRng>(rng: &mut R) -> KeyPair {
    Ed25519.keygen(rng)
}

pub fn sign(sk: &SecretKey, msg: &[u8]) -> Result<Signature, CryptoError> {
    Ed25519.sign(sk, msg)
}

pub fn verify_sig(pk: &PublicKey, msg: &[u8], sig: &Signature) -> bool {
    Ed25519.verify(pk, msg, sig)
}
