//! Two-party commit-reveal coin flipping.
//!
//! Each party commits to `H(nonce || seed)`, both commitments are exchanged,
//! then both reveal. The shared output is `H(seed_a || seed_b)`. A reveal
//! that does not open its commitment aborts the protocol and names the party.

use rand::RngCore;

use super::hash::{commit, hash_parts, Digest, Nonce};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoinParty {
    A,
    B,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CoinFlipError {
    #[error("party {0:?} revealed a value that does not open its commitment")]
    Mismatch(CoinParty),
    #[error("party {0:?} revealed before both commitments were exchanged")]
    OutOfOrder(CoinParty),
}

/// Shared random output of a completed flip.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RandomBits(pub Digest);

impl RandomBits {
    /// Maps the bits onto `0..n`.
    pub fn index(&self, n: usize) -> usize {
        assert!(n > 0, "cannot pick from an empty set");
        let wide = u128::from_be_bytes(self.0 .0[..16].try_into().unwrap());
        (wide % n as u128) as usize
    }
}

#[derive(Clone, Debug)]
pub struct Reveal {
    pub seed: Vec<u8>,
    pub nonce: Nonce,
}

/// One participant's private state.
#[derive(Clone, Debug)]
pub struct CoinFlipper {
    seed: Vec<u8>,
    nonce: Nonce,
}

impl CoinFlipper {
    pub fn new<R: RngCore + ?Sized>(seed: Vec<u8>, rng: &mut R) -> Self {
        Self {
            seed,
            nonce: Nonce::random(rng),
        }
    }

    pub fn commitment(&self) -> Digest {
        commit(&self.nonce, &self.seed)
    }

    pub fn reveal(&self) -> Reveal {
        Reveal {
            seed: self.seed.clone(),
            nonce: self.nonce,
        }
    }
}

/// The public transcript both parties (and any observer) can check.
#[derive(Clone, Debug, Default)]
pub struct CoinFlipTranscript {
    commit_a: Option<Digest>,
    commit_b: Option<Digest>,
    reveal_a: Option<Reveal>,
}

impl CoinFlipTranscript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn commit(&mut self, party: CoinParty, c: Digest) {
        match party {
            CoinParty::A => self.commit_a = Some(c),
            CoinParty::B => self.commit_b = Some(c),
        }
    }

    fn check(&self, party: CoinParty, r: &Reveal) -> Result<(), CoinFlipError> {
        let c = match party {
            CoinParty::A => self.commit_a,
            CoinParty::B => self.commit_b,
        };
        match (self.commit_a.is_some() && self.commit_b.is_some(), c) {
            (true, Some(c)) if commit(&r.nonce, &r.seed) == c => Ok(()),
            (true, Some(_)) => Err(CoinFlipError::Mismatch(party)),
            _ => Err(CoinFlipError::OutOfOrder(party)),
        }
    }

    /// A reveals first.
    pub fn reveal_a(&mut self, r: Reveal) -> Result<(), CoinFlipError> {
        self.check(CoinParty::A, &r)?;
        self.reveal_a = Some(r);
        Ok(())
    }

    /// B reveals second, completing the flip.
    pub fn reveal_b(&self, r: &Reveal) -> Result<RandomBits, CoinFlipError> {
        let a = self
            .reveal_a
            .as_ref()
            .ok_or(CoinFlipError::OutOfOrder(CoinParty::B))?;
        self.check(CoinParty::B, r)?;
        Ok(RandomBits(hash_parts(&[&a.seed, &r.seed])))
    }
}

/// Runs the honest protocol end to end.
pub fn coin_flip<R: RngCore + ?Sized>(
    party_a_seed: &[u8],
    party_b_seed: &[u8],
    rng: &mut R,
) -> Result<RandomBits, CoinFlipError> {
    let a = CoinFlipper::new(party_a_seed.to_vec(), rng);
    let b = CoinFlipper::new(party_b_seed.to_vec(), rng);
    let mut t = CoinFlipTranscript::new();
    t.commit(CoinParty::A, a.commitment());
    t.commit(CoinParty::B, b.commitment());
    t.reveal_a(a.reveal())?;
    t.reveal_b(&b.reveal())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn honest_parties_agree() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let bits = coin_flip(b"alpha", b"beta", &mut rng).unwrap();
        assert_eq!(bits.0, hash_parts(&[b"alpha", b"beta"]));
    }

    #[test]
    fn b_changing_seed_after_seeing_a_is_blamed() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let a = CoinFlipper::new(b"a-seed".to_vec(), &mut rng);
        let b = CoinFlipper::new(b"b-seed".to_vec(), &mut rng);
        let mut t = CoinFlipTranscript::new();
        t.commit(CoinParty::A, a.commitment());
        t.commit(CoinParty::B, b.commitment());
        t.reveal_a(a.reveal()).unwrap();
        let mut cheat = b.reveal();
        cheat.seed = b"chosen after seeing a".to_vec();
        assert_eq!(
            t.reveal_b(&cheat),
            Err(CoinFlipError::Mismatch(CoinParty::B))
        );
    }

    #[test]
    fn revealing_before_commitments_is_rejected() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let a = CoinFlipper::new(b"a".to_vec(), &mut rng);
        let mut t = CoinFlipTranscript::new();
        t.commit(CoinParty::A, a.commitment());
        assert_eq!(
            t.reveal_a(a.reveal()),
            Err(CoinFlipError::OutOfOrder(CoinParty::A))
        );
    }
}
