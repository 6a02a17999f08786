use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::DeterministicStrategy;
use crate::error::{Error, Result};
use crate::kvgame::BellFunctional;

/// Most Alice assignments K^N that exact enumeration will visit.
pub const MAX_ENUMERATED_ASSIGNMENTS: u64 = 1_000_000;

const MAX_SWEEPS: usize = 10_000;

#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalValue {
    /// max over local P of |⟨M,P⟩|.
    pub value: f64,
    /// A vertex attaining it.
    pub strategy: DeterministicStrategy,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeuristicValue {
    /// Best value found; a lower bound on the classical value.
    pub value: f64,
    pub strategy: DeterministicStrategy,
    /// Best-so-far after each restart.
    pub history: Vec<f64>,
}

struct Scenario<'a> {
    n: usize,
    k: usize,
    coeffs: &'a [f64],
    sign: f64,
}

impl Scenario<'_> {
    #[inline]
    fn c(&self, x: usize, y: usize, a: usize, b: usize) -> f64 {
        self.sign * self.coeffs[((x * self.n + y) * self.k + a) * self.k + b]
    }

    /// Σ_y max_b Σ_x c(x, y, f(x), b), with the maximizing b per y.
    fn bob_best_response(&self, alice: &[usize], bob: &mut [usize]) -> f64 {
        let mut total = 0.0;
        for y in 0..self.n {
            let mut best = f64::NEG_INFINITY;
            for b in 0..self.k {
                let mut s = 0.0;
                for (x, &a) in alice.iter().enumerate() {
                    s += self.c(x, y, a, b);
                }
                if s > best {
                    best = s;
                    bob[y] = b;
                }
            }
            total += best;
        }
        total
    }

    fn alice_best_response(&self, bob: &[usize], alice: &mut [usize]) {
        for (x, slot) in alice.iter_mut().enumerate() {
            let mut best = f64::NEG_INFINITY;
            for a in 0..self.k {
                let mut s = 0.0;
                for (y, &b) in bob.iter().enumerate() {
                    s += self.c(x, y, a, b);
                }
                if s > best {
                    best = s;
                    *slot = a;
                }
            }
        }
    }

    /// Enumerates Alice's assignments; Bob's optimum is separable per y.
    fn enumerate(&self) -> (f64, DeterministicStrategy) {
        let count = (self.k as u64).pow(self.n as u32);
        let mut alice = vec![0usize; self.n];
        let mut bob = vec![0usize; self.n];
        let mut best = (f64::NEG_INFINITY, DeterministicStrategy { alice: alice.clone(), bob: bob.clone() });
        for _ in 0..count {
            let v = self.bob_best_response(&alice, &mut bob);
            if v > best.0 {
                best = (v, DeterministicStrategy { alice: alice.clone(), bob: bob.clone() });
            }
            increment(&mut alice, self.k);
        }
        best
    }
}

/// Base-K counter increment with the last input least significant.
fn increment(digits: &mut [usize], k: usize) {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < k {
            return;
        }
        *d = 0;
    }
}

fn check_enumerable(m: &BellFunctional) -> Result<()> {
    let count = (m.outputs() as u64).checked_pow(m.inputs() as u32);
    match count {
        Some(c) if c <= MAX_ENUMERATED_ASSIGNMENTS => Ok(()),
        _ => Err(Error::guard(format!(
            "K^N = {}^{} assignments exceed {MAX_ENUMERATED_ASSIGNMENTS}; use classical_value_heuristic",
            m.outputs(),
            m.inputs()
        ))),
    }
}

/// ω(M) by enumerating Alice's deterministic assignments, for M and −M.
pub fn classical_value_exact(m: &BellFunctional) -> Result<ClassicalValue> {
    check_enumerable(m)?;
    let coeffs = m.to_dense()?;
    let (n, k) = (m.inputs(), m.outputs());
    let plus = Scenario { n, k, coeffs: &coeffs, sign: 1.0 }.enumerate();
    let minus = Scenario { n, k, coeffs: &coeffs, sign: -1.0 }.enumerate();
    let (value, strategy) = if plus.0 >= minus.0 { plus } else { minus };
    Ok(ClassicalValue { value, strategy })
}

/// Lower bound on ω(M) by alternating best responses from random starts.
///
/// Each restart runs once on M and once on −M; a run stops when a sweep no
/// longer improves the value. Deterministic for a given seed.
pub fn classical_value_heuristic(m: &BellFunctional, restarts: usize, seed: u64) -> Result<HeuristicValue> {
    if restarts == 0 {
        return Err(Error::invalid("restarts must be at least 1"));
    }
    let coeffs = m.to_dense()?;
    let (n, k) = (m.inputs(), m.outputs());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, DeterministicStrategy)> = None;
    let mut history = Vec::with_capacity(restarts);
    for _ in 0..restarts {
        for sign in [1.0, -1.0] {
            let sc = Scenario { n, k, coeffs: &coeffs, sign };
            let mut alice: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
            let mut bob = vec![0usize; n];
            let mut value = sc.bob_best_response(&alice, &mut bob);
            for _ in 0..MAX_SWEEPS {
                let mut next_alice = alice.clone();
                sc.alice_best_response(&bob, &mut next_alice);
                let mut next_bob = bob.clone();
                let next = sc.bob_best_response(&next_alice, &mut next_bob);
                if next > value + 1e-15 {
                    alice = next_alice;
                    bob = next_bob;
                    value = next;
                } else {
                    break;
                }
            }
            if best.as_ref().is_none_or(|(v, _)| value > *v) {
                best = Some((value, DeterministicStrategy { alice, bob }));
            }
        }
        history.push(best.as_ref().map(|b| b.0).unwrap_or(0.0));
    }
    let (value, strategy) = best.expect("at least one restart");
    Ok(HeuristicValue { value, strategy, history })
}
