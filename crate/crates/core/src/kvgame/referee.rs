use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_eta, CosetTable};
use crate::bitlinalg::BitVec;
use crate::error::Result;

/// One round of the KV protocol.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RefereeRound {
    /// Coset id [x] sent to Alice.
    pub alice_question: usize,
    /// Coset id [x⊕z] sent to Bob.
    pub bob_question: usize,
    /// Hidden noise string; the players win iff their answers XOR to it.
    pub z: BitVec,
}

/// Seeded referee.
///
/// Randomness comes from ChaCha8 (`rand_chacha`) seeded with
/// `seed_from_u64`, so a seed replays the same rounds on every platform.
pub struct Referee<'a> {
    table: &'a CosetTable,
    eta: f64,
    rng: ChaCha8Rng,
}

impl<'a> Referee<'a> {
    pub fn new(table: &'a CosetTable, eta: f64, seed: u64) -> Result<Self> {
        check_eta(eta)?;
        Ok(Referee { table, eta, rng: ChaCha8Rng::seed_from_u64(seed) })
    }

    pub fn next_round(&mut self) -> RefereeRound {
        let n = self.table.n();
        let x = self.rng.gen_range(0..self.table.num_cosets());
        let mut z = 0u64;
        for _ in 0..n {
            z = (z << 1) | self.rng.gen_bool(self.eta) as u64;
        }
        let z = BitVec::new(n, z).expect("n-bit noise string");
        let shifted = self.table.representative(x).xor(&z).expect("equal lengths");
        RefereeRound { alice_question: x, bob_question: self.table.coset_of(&shifted), z }
    }

    /// Shared generator, for callers that sample player outcomes in lockstep.
    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// First round drawn from `seed`.
pub fn referee_sample(table: &CosetTable, eta: f64, seed: u64) -> Result<RefereeRound> {
    Ok(Referee::new(table, eta, seed)?.next_round())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kvgame::build_hadamard_subgroup;

    #[test]
    fn deterministic_per_seed() {
        let t = build_hadamard_subgroup(2).unwrap();
        let draw = |seed| {
            let mut r = Referee::new(&t, 0.25, seed).unwrap();
            (0..100).map(|_| r.next_round()).collect::<Vec<_>>()
        };
        assert_eq!(draw(42), draw(42));
        assert_ne!(draw(42), draw(43));
        assert_eq!(referee_sample(&t, 0.25, 42).unwrap(), draw(42)[0]);
    }

    #[test]
    fn bob_question_is_shifted_coset() {
        let t = build_hadamard_subgroup(3).unwrap();
        let mut r = Referee::new(&t, 0.3, 1).unwrap();
        for _ in 0..500 {
            let round = r.next_round();
            // Any element of [x] shifted by z lands in Bob's coset.
            for a in t.coset(round.alice_question) {
                assert_eq!(t.coset_of(&a.xor(&round.z).unwrap()), round.bob_question);
            }
        }
    }

    #[test]
    fn vanishing_noise() {
        let t = build_hadamard_subgroup(2).unwrap();
        let mut r = Referee::new(&t, 1e-9, 5).unwrap();
        let zero = (0..10_000).filter(|_| r.next_round().z.hamming_weight() == 0).count();
        assert!(zero as f64 / 1e4 > 0.999);
    }

    #[test]
    fn weight_one_frequency() {
        let t = build_hadamard_subgroup(2).unwrap();
        let mut r = Referee::new(&t, 0.25, 9).unwrap();
        let samples = 100_000;
        let hits = (0..samples).filter(|_| r.next_round().z.hamming_weight() == 1).count();
        let p = 4.0 * 0.25 * 0.75f64.powi(3);
        let sigma = (p * (1.0 - p) / samples as f64).sqrt();
        assert!((hits as f64 / samples as f64 - p).abs() < 4.0 * sigma);
    }

    #[test]
    fn uniform_questions() {
        let t = build_hadamard_subgroup(2).unwrap();
        let mut r = Referee::new(&t, 0.25, 11).unwrap();
        let mut counts = [0usize; 4];
        for _ in 0..40_000 {
            counts[r.next_round().alice_question] += 1;
        }
        let sigma = (40_000.0f64 * 0.25 * 0.75).sqrt();
        assert!(counts.iter().all(|&c| (c as f64 - 10_000.0).abs() < 4.0 * sigma));
    }

    #[test]
    fn invalid_eta() {
        let t = build_hadamard_subgroup(2).unwrap();
        assert!(Referee::new(&t, 0.0, 1).is_err());
        assert!(referee_sample(&t, 0.75, 1).is_err());
    }
}
