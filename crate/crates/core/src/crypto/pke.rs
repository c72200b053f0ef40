//! Public-key encryption: ephemeral X25519 key agreement, SHA-256 key
//! derivation and ChaCha20-Poly1305. Decrypting with the wrong key fails the
//! authentication tag instead of returning garbage.

use chacha20poly1305::aead::Aead;
use chacha20poly1305::{ChaCha20Poly1305, Key, KeyInit, Nonce as AeadNonce};
use rand::{CryptoRng, RngCore};
use x25519_dalek::{PublicKey as XPublic, StaticSecret};

use super::hash::hash_parts;
use super::sig::{KeyPair, PublicKey, SecretKey};
use super::CryptoError;

const KDF_LABEL: &[u8] = b"pmm-pke-v1";

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Ciphertext(pub Vec<u8>);

pub trait PkeScheme {
    fn keygen<R: RngCore + CryptoRng>(&self, rng: &mut R) -> KeyPair;
    fn encrypt<R: RngCore + CryptoRng>(
        &self,
        pk: &PublicKey,
        msg: &[u8],
        rng: &mut R,
    ) -> Result<Ciphertext, CryptoError>;
    fn decrypt(&self, sk: &SecretKey, ct: &Ciphertext) -> Result<Vec<u8>, CryptoError>;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct X25519ChaChaPoly;

fn derive_key(shared: &[u8; 32], eph: &[u8; 32], recipient: &[u8; 32]) -> Key {
    let k = hash_parts(&[KDF_LABEL, shared, eph, recipient]);
    *Key::from_slice(&k.0)
}

fn as_array(b: &[u8]) -> Result<[u8; 32], CryptoError> {
    b.try_into().map_err(|_| CryptoError::BadKey)
}

impl PkeScheme for X25519ChaChaPoly {
    fn keygen<R: RngCore + CryptoRng>(&self, rng: &mut R) -> KeyPair {
        let sk = StaticSecret::random_from_rng(rng);
        KeyPair {
            public: PublicKey(XPublic::from(&sk).to_bytes().to_vec()),
            secret: SecretKey(sk.to_bytes().to_vec()),
        }
    }

    fn encrypt<R: RngCore + CryptoRng>(
        &self,
        pk: &PublicKey,
        msg: &[u8],
        rng: &mut R,
    ) -> Result<Ciphertext, CryptoError> {
        let recipient = as_array(&pk.0)?;
        let eph = StaticSecret::random_from_rng(rng);
        let eph_pub = XPublic::from(&eph).to_bytes();
        let shared = eph.diffie_hellman(&XPublic::from(recipient));
        let key = derive_key(shared.as_bytes(), &eph_pub, &recipient);
        // fresh key per message, so a fixed AEAD nonce is fine
        let body = ChaCha20Poly1305::new(&key)
            .encrypt(AeadNonce::from_slice(&[0u8; 12]), msg)
            .map_err(|_| CryptoError::Encryption)?;
        let mut out = eph_pub.to_vec();
        out.extend_from_slice(&body);
        Ok(Ciphertext(out))
    }

    fn decrypt(&self, sk: &SecretKey, ct: &Ciphertext) -> Result<Vec<u8>, CryptoError> {
        if ct.0.len() < 32 + 16 {
            return Err(CryptoError::Decryption);
        }
        let sk = StaticSecret::from(as_array(&sk.0)?);
        let recipient = XPublic::from(&sk).to_bytes();
        let eph_pub = as_array(&ct.0[..32])?;
        let shared = sk.diffie_hellman(&XPublic::from(eph_pub));
        let key = derive_key(shared.as_bytes(), &eph_pub, &recipient);
        ChaCha20Poly1305::new(&key)
            .decrypt(AeadNonce::from_slice(&[0u8; 12]), &ct.0[32..])
            .map_err(|_| CryptoError::Decryption)
    }
}

pub fn pke_keygen<R: RngCore + CryptoRng>(rng: &mut R) -> KeyPair {
    X25519ChaChaPoly.keygen(rng)
}

pub fn pke_encrypt<R: RngCore + CryptoRng>(
    pk: &PublicKey,
    msg: &[u8],
    rng: &mut R,
) -> Result<Ciphertext, CryptoError> {
    X25519ChaChaPoly.encrypt(pk, msg, rng)
}

pub fn pke_decrypt(sk: &SecretKey, ct: &Ciphertext) -> Result<Vec<u8>, CryptoError> {
    X25519ChaChaPoly.decrypt(sk, ct)
}
