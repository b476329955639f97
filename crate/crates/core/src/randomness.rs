//! Commitments, seed combination, PRG expansion and permutation derivation.

use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::types::{Commitment, PartialSeed, Permutation};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedMatrixEntry {
    pub i: u64,
    pub j: usize,
    pub sigma: Option<PartialSeed>,
    pub commitment: Commitment,
}

impl SeedMatrixEntry {
    pub fn is_consistent(&self) -> bool {
        self.sigma
            .as_ref()
            .is_none_or(|s| verify_opening(s, &self.commitment))
    }
}

pub fn commit(sigma: &PartialSeed) -> Commitment {
    Commitment(Sha256::digest(sigma.bytes()).into())
}

pub fn verify_opening(sigma: &PartialSeed, c: &Commitment) -> bool {
    commit(sigma) == *c
}

pub fn fresh_seed<R: RngCore + ?Sized>(rng: &mut R, lambda_bits: usize) -> PartialSeed {
    let mut bytes = vec![0u8; lambda_bits / 8];
    rng.fill_bytes(&mut bytes);
    PartialSeed::new(bytes, lambda_bits).expect("length matches λ")
}

/// XOR of all present openings over `0^λ`.
pub fn combine_seeds<'a, I>(openings: I, lambda_bits: usize) -> PartialSeed
where
    I: IntoIterator<Item = Option<&'a PartialSeed>>,
{
    let mut acc = vec![0u8; lambda_bits / 8];
    for s in openings.into_iter().flatten() {
        debug_assert_eq!(s.bits(), lambda_bits);
        for (a, b) in acc.iter_mut().zip(s.bytes()) {
            *a ^= b;
        }
    }
    PartialSeed::new(acc, lambda_bits).expect("length matches λ")
}

/// SHA-256 counter-mode byte stream: block `t` is `SHA256(seed || t_be64)`.
#[derive(Debug, Clone)]
pub struct PrgStream {
    seed: Vec<u8>,
    counter: u64,
    block: [u8; 32],
    pos: usize,
}

impl PrgStream {
    pub fn new(seed: &PartialSeed) -> Self {
        PrgStream {
            seed: seed.bytes().to_vec(),
            counter: 0,
            block: [0; 32],
            pos: 32,
        }
    }

    pub fn next_byte(&mut self) -> u8 {
        if self.pos == 32 {
            let mut h = Sha256::new();
            h.update(&self.seed);
            h.update(self.counter.to_be_bytes());
            self.block = h.finalize().into();
            self.counter += 1;
            self.pos = 0;
        }
        let b = self.block[self.pos];
        self.pos += 1;
        b
    }

    /// Uniform draw from `0..range` by rejection over the minimal byte width.
    pub fn uniform_below(&mut self, range: u64) -> u64 {
        assert!(range > 0, "empty range");
        if range == 1 {
            return 0;
        }
        let mut width = 1u32;
        while width < 8 && (1u128 << (8 * width)) < range as u128 {
            width += 1;
        }
        let space = 1u128 << (8 * width);
        let limit = space - space % range as u128;
        loop {
            let mut v: u128 = 0;
            for _ in 0..width {
                v = (v << 8) | self.next_byte() as u128;
            }
            if v < limit {
                return (v % range as u128) as u64;
            }
        }
    }
}

pub fn prg(seed: &PartialSeed, nbytes: usize) -> Vec<u8> {
    let mut s = PrgStream::new(seed);
    (0..nbytes).map(|_| s.next_byte()).collect()
}

/// Fisher–Yates over the identity array, `i` from `L-1` down to 1.
pub fn perm_from_rand_bits(seed: &PartialSeed, len: usize) -> Permutation {
    let mut arr: Vec<usize> = (0..len).collect();
    let mut stream = PrgStream::new(seed);
    for i in (1..len).rev() {
        let j = stream.uniform_below(i as u64 + 1) as usize;
        arr.swap(i, j);
    }
    Permutation::new(arr).expect("shuffle of identity is a bijection")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn seed(b: u8) -> PartialSeed {
        PartialSeed::new(vec![b; 32], 256).unwrap()
    }

    #[test]
    fn commit_zero_seed_golden() {
        assert_eq!(
            commit(&PartialSeed::zero(256)).to_hex(),
            "66687aadf862bd776c8fc18b8e9f8e20089714856ee233b3902a591d0d5f2925"
        );
    }

    #[test]
    fn prg_zero_seed_golden() {
        assert_eq!(
            hex::encode(prg(&PartialSeed::zero(256), 32)),
            "2c34ce1df23b838c5abf2a7f6437cca3d3067ed509ff25f11df6b11b582b51eb"
        );
    }

    #[test]
    fn prg_prefix_consistency() {
        let s = seed(7);
        assert!(prg(&s, 0).is_empty());
        assert_eq!(prg(&s, 64)[..32], prg(&s, 32)[..]);
        assert_eq!(prg(&s, 100)[..77], prg(&s, 77)[..]);
    }

    #[test]
    fn opening_verification() {
        let s = seed(3);
        let c = commit(&s);
        assert!(verify_opening(&s, &c));
        assert!(!verify_opening(&seed(4), &c));
        let mut flipped = s.bytes().to_vec();
        flipped[31] ^= 1;
        assert!(!verify_opening(&PartialSeed::new(flipped, 256).unwrap(), &c));
    }

    #[test]
    fn combine_examples() {
        let s = seed(0x5a);
        let t = seed(0x13);
        assert_eq!(combine_seeds([None, None], 256), PartialSeed::zero(256));
        assert_eq!(combine_seeds([Some(&s), None, None], 256), s);
        assert_eq!(combine_seeds([Some(&s), Some(&s), Some(&t)], 256), t);
    }

    #[test]
    fn singleton_and_determinism() {
        assert_eq!(perm_from_rand_bits(&seed(9), 1), Permutation::identity(1));
        assert_eq!(perm_from_rand_bits(&seed(9), 0).len(), 0);
        assert_eq!(perm_from_rand_bits(&seed(9), 50), perm_from_rand_bits(&seed(9), 50));
    }

    #[test]
    fn no_collisions_at_test_scale() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let mut seen = std::collections::BTreeSet::new();
        for _ in 0..100_000 {
            assert!(seen.insert(commit(&fresh_seed(&mut rng, 256))));
        }
    }

    #[test]
    fn uniform_below_width_boundaries() {
        let mut s = PrgStream::new(&seed(1));
        for range in [2u64, 255, 256, 257, 65_536, 65_537, 1 << 40] {
            for _ in 0..50 {
                assert!(s.uniform_below(range) < range);
            }
        }
    }
}
