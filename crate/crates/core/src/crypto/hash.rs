use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use sha2::{Digest as _, Sha256};

use super::CryptoError;

/// Prefix for internal Merkle nodes.
pub const NODE_PREFIX: u8 = 0x01;

/// A 32-byte SHA-256 output.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Digest(pub [u8; 32]);

impl Digest {
    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    /// First eight bytes as a big-endian integer.
    pub fn leading_u64(&self) -> u64 {
        u64::from_be_bytes(self.0[..8].try_into().unwrap())
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", &self.to_hex()[..16])
    }
}

impl FromStr for Digest {
    type Err = CryptoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bytes = hex::decode(s.trim()).map_err(|_| CryptoError::BadHex(s.to_string()))?;
        let arr: [u8; 32] = bytes
            .try_into()
            .map_err(|_| CryptoError::BadHex(s.to_string()))?;
        Ok(Digest(arr))
    }
}

/// A 32-byte hiding nonce.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Nonce(pub [u8; 32]);

impl Nonce {
    pub fn random<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        let mut b = [0u8; 32];
        rng.fill_bytes(&mut b);
        Nonce(b)
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Debug for Nonce {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Nonce({})", &self.to_hex()[..16])
    }
}

impl FromStr for Nonce {
    type Err = CryptoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Digest::from_str(s).map(|d| Nonce(d.0))
    }
}

pub fn hash(bytes: &[u8]) -> Digest {
    Digest(Sha256::digest(bytes).into())
}

pub fn hash_parts(parts: &[&[u8]]) -> Digest {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    Digest(h.finalize().into())
}

/// Hiding commitment `H(nonce || item)`.
pub fn commit(nonce: &Nonce, item: &[u8]) -> Digest {
    hash_parts(&[&nonce.0, item])
}

/// Internal Merkle node `H(0x01 || left || right)`.
pub fn hash_node(left: &Digest, right: &Digest) -> Digest {
    hash_parts(&[&[NODE_PREFIX], &left.0, &right.0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn commit_of_zero_nonce_and_empty_item() {
        // sha256 of 32 zero bytes
        let expected: Digest = "66687aadf862bd776c8fc18b8e9f8e20089714856ee233b3902a591d0d5f2925"
            .parse()
            .unwrap();
        assert_eq!(commit(&Nonce([0; 32]), b""), expected);
    }

    #[test]
    fn commit_is_deterministic_and_hiding_nonce_matters() {
        let a = Nonce([1; 32]);
        let b = Nonce([2; 32]);
        assert_eq!(commit(&a, b"trip"), commit(&a, b"trip"));
        assert_ne!(commit(&a, b"trip"), commit(&b, b"trip"));
    }

    #[test]
    fn digest_hex_round_trip() {
        let d = hash(b"abc");
        assert_eq!(d.to_hex().parse::<Digest>().unwrap(), d);
        assert!("zz".parse::<Digest>().is_err());
        assert!("abcd".parse::<Digest>().is_err());
    }
}
