//! Hashing, hiding commitments, Merkle trees, signatures, public-key
//! encryption and coin flipping.
//!
//! Everything here is a pure function of its inputs. Randomness always comes
//! from a caller-owned RNG so that seeded runs are reproducible bit for bit.

mod coinflip;
mod hash;
mod merkle;
mod pke;
mod sig;

pub use coinflip::{
    coin_flip, CoinFlipError, CoinFlipTranscript, CoinFlipper, CoinParty, RandomBits, Reveal,
};
pub use hash::{commit, hash, hash_node, hash_parts, Digest, Nonce, NODE_PREFIX};
pub use merkle::{mcommit, merkle_verify, merkle_verify_commitment, MerkleProof, MerkleTree, Side};
pub use pke::{pke_decrypt, pke_encrypt, pke_keygen, Ciphertext, PkeScheme, X25519ChaChaPoly};
pub use sig::{
    keygen, sign, verify_sig, Ed25519, KeyPair, PublicKey, SecretKey, Signature, SignatureScheme,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CryptoError {
    #[error("cannot build a Merkle tree over zero items")]
    EmptyTree,
    #[error("{items} items but {nonces} nonces")]
    LengthMismatch { items: usize, nonces: usize },
    #[error("leaf index {index} out of range for {len} leaves")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("malformed key")]
    BadKey,
    #[error("invalid hex: {0:?}")]
    BadHex(String),
    #[error("malformed proof line: {0:?}")]
    BadProofText(String),
    #[error("encryption failed")]
    Encryption,
    #[error("decryption failed: wrong key or corrupted ciphertext")]
    Decryption,
}
