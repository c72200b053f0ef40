//! Merkle commitments over hidden items.
//!
//! Level 0 holds the raw items. Level 1 holds one hiding commitment
//! `H(r_i || m_i)` per item, so a rider's receipt digest is exactly a level-1
//! node. Each higher level hashes pairs of children with the node prefix; a
//! level of odd width duplicates its last node before pairing.

use std::fmt;
use std::str::FromStr;

use super::hash::{commit, hash_node, Digest, Nonce};
use super::CryptoError;

#[derive(Clone, PartialEq, Eq)]
pub struct MerkleTree {
    leaves: Vec<(Vec<u8>, Nonce)>,
    /// `levels[0]` is the commitment level, the last level is the root.
    levels: Vec<Vec<Digest>>,
}

impl fmt::Debug for MerkleTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MerkleTree")
            .field("leaves", &self.leaves.len())
            .field("root", &self.root())
            .finish()
    }
}

/// Builds the tree for `items` under `nonces` (the `MCommit` operation).
pub fn mcommit(items: &[Vec<u8>], nonces: &[Nonce]) -> Result<MerkleTree, CryptoError> {
    if items.len() != nonces.len() {
        return Err(CryptoError::LengthMismatch {
            items: items.len(),
            nonces: nonces.len(),
        });
    }
    MerkleTree::build(items.iter().cloned().zip(nonces.iter().copied()).collect())
}

impl MerkleTree {
    pub fn build(leaves: Vec<(Vec<u8>, Nonce)>) -> Result<Self, CryptoError> {
        if leaves.is_empty() {
            return Err(CryptoError::EmptyTree);
        }
        let base: Vec<Digest> = leaves.iter().map(|(m, r)| commit(r, m)).collect();
        let mut levels = vec![base];
        while levels.last().unwrap().len() > 1 {
            let prev = levels.last().unwrap();
            let next = prev
                .chunks(2)
                .map(|pair| match pair {
                    [l, r] => hash_node(l, r),
                    [l] => hash_node(l, l),
                    _ => unreachable!(),
                })
                .collect();
            levels.push(next);
        }
        Ok(Self { leaves, levels })
    }

    pub fn root(&self) -> Digest {
        self.levels.last().unwrap()[0]
    }

    pub fn len(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }

    /// Number of hash levels, commitment level through root.
    pub fn height(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[Vec<Digest>] {
        &self.levels
    }

    pub fn leaf(&self, index: usize) -> Option<(&[u8], &Nonce)> {
        self.leaves.get(index).map(|(m, r)| (m.as_slice(), r))
    }

    pub fn leaf_commitment(&self, index: usize) -> Option<Digest> {
        self.levels[0].get(index).copied()
    }

    /// Index of the first leaf whose commitment equals `digest`.
    pub fn position_of(&self, digest: &Digest) -> Option<usize> {
        self.levels[0].iter().position(|d| d == digest)
    }

    pub fn prove(&self, index: usize) -> Result<MerkleProof, CryptoError> {
        if index >= self.len() {
            return Err(CryptoError::IndexOutOfRange {
                index,
                len: self.len(),
            });
        }
        let mut siblings = Vec::with_capacity(self.height() - 1);
        let mut x = index;
        for level in &self.levels[..self.levels.len() - 1] {
            let entry = if x.is_multiple_of(2) {
                // right sibling, or a duplicate of ourselves at the ragged end
                (*level.get(x + 1).unwrap_or(&level[x]), Side::Right)
            } else {
                (level[x - 1], Side::Left)
            };
            siblings.push(entry);
            x /= 2;
        }
        Ok(MerkleProof {
            leaf_index: index,
            siblings,
        })
    }
}

/// Which side of the running hash a sibling sits on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MerkleProof {
    pub leaf_index: usize,
    pub siblings: Vec<(Digest, Side)>,
}

impl MerkleProof {
    /// Root obtained by folding the siblings into `leaf`.
    pub fn fold(&self, leaf: Digest) -> Digest {
        self.siblings
            .iter()
            .fold(leaf, |acc, (sib, side)| match side {
                Side::Right => hash_node(&acc, sib),
                Side::Left => hash_node(sib, &acc),
            })
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("index {}\n", self.leaf_index);
        for (d, side) in &self.siblings {
            let s = match side {
                Side::Left => 'L',
                Side::Right => 'R',
            };
            out.push_str(&format!("{} {}\n", d.to_hex(), s));
        }
        out
    }
}

impl FromStr for MerkleProof {
    type Err = CryptoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut lines = s.lines().filter(|l| !l.trim().is_empty());
        let bad = |l: &str| CryptoError::BadProofText(l.to_string());
        let first = lines.next().ok_or_else(|| bad(""))?;
        let leaf_index = first
            .strip_prefix("index ")
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| bad(first))?;
        let mut siblings = Vec::new();
        for line in lines {
            let (hex, side) = line.trim().split_once(' ').ok_or_else(|| bad(line))?;
            let side = match side.trim() {
                "L" => Side::Left,
                "R" => Side::Right,
                _ => return Err(bad(line)),
            };
            siblings.push((hex.parse()?, side));
        }
        Ok(MerkleProof {
            leaf_index,
            siblings,
        })
    }
}

/// Checks that `(item, nonce)` sits under `root` along `proof`.
pub fn merkle_verify(root: &Digest, item: &[u8], nonce: &Nonce, proof: &MerkleProof) -> bool {
    merkle_verify_commitment(root, &commit(nonce, item), proof)
}

/// Same check starting from an already-computed leaf commitment, which is
/// all a receipt holder needs to reveal.
pub fn merkle_verify_commitment(root: &Digest, leaf: &Digest, proof: &MerkleProof) -> bool {
    // a tree of 2^64 leaves is not a thing
    if proof.siblings.len() > 64 {
        return false;
    }
    proof.fold(*leaf) == *root
}
