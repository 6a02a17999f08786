use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{classical_value_heuristic, pair, quantum_prob, ProbDist};
use crate::bitlinalg::ComplexMatrix;
use crate::error::{Error, Result};
use crate::kvgame::{BellFunctional, Measurement};
use crate::states::make_mes;

pub const MAX_SEESAW_DIM: usize = 16;
/// Largest N·K accepted by the see-saw.
pub const MAX_SEESAW_SCENARIO: usize = 64;

const STALL_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeesawConfig {
    /// Local dimension of the shared maximally entangled state.
    pub dim: usize,
    /// Alternation rounds per start.
    pub iters: usize,
    /// Random starts; each runs on M and on −M.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SeesawConfig {
    fn default() -> Self {
        SeesawConfig { dim: 2, iters: 100, restarts: 20, seed: 0 }
    }
}

#[derive(Clone, Debug)]
pub struct SeesawResult {
    /// |⟨M, P⟩| for the reported strategy.
    pub value: f64,
    pub alice: Vec<Measurement>,
    pub bob: Vec<Measurement>,
    pub distribution: ProbDist,
}

struct Problem<'a> {
    n: usize,
    k: usize,
    dim: usize,
    c: &'a [f64],
    sign: f64,
}

impl Problem<'_> {
    /// Reward operators R[u][o] for one party given the other's measurements.
    ///
    /// With the MES, P(a,b|x,y) = tr(E^T F)/dim, so the objective is linear
    /// in each party's operators with coefficients built from the transposes
    /// of the other party's.
    fn rewards(&self, other: &[Measurement], for_bob: bool) -> Vec<Vec<ComplexMatrix>> {
        let (n, k) = (self.n, self.k);
        let transposed: Vec<Vec<ComplexMatrix>> =
            other.iter().map(|m| m.operators().iter().map(|op| op.transpose()).collect()).collect();
        let scale = self.sign / self.dim as f64;
        (0..n)
            .map(|u| {
                (0..k)
                    .map(|o| {
                        let mut r = ComplexMatrix::zeros(self.dim, self.dim);
                        for v in 0..n {
                            for o2 in 0..k {
                                let c = if for_bob {
                                    self.c[((v * n + u) * k + o2) * k + o]
                                } else {
                                    self.c[((u * n + v) * k + o) * k + o2]
                                };
                                if c != 0.0 {
                                    r.add_scaled_assign(scale * c, &transposed[v][o2]).expect("equal dims");
                                }
                            }
                        }
                        r
                    })
                    .collect()
            })
            .collect()
    }

    /// Best projective measurement over a few candidate eigenbases, each
    /// vector sent to the outcome with the largest diagonal reward.
    fn respond(&self, rewards: &[ComplexMatrix], current: &Measurement) -> Result<(Measurement, f64)> {
        let d = self.dim;
        let mut candidates = Vec::with_capacity(self.k + 2);
        let mut labels = ComplexMatrix::zeros(d, d);
        let mut sym = ComplexMatrix::zeros(d, d);
        for (b, (r, f)) in rewards.iter().zip(current.operators()).enumerate() {
            labels.add_scaled_assign((b + 1) as f64, f)?;
            sym.add_scaled_assign(0.5, &r.matmul(f)?)?;
            sym.add_scaled_assign(0.5, &f.matmul(r)?)?;
        }
        candidates.push(labels);
        candidates.push(sym);
        let mut mean = ComplexMatrix::zeros(d, d);
        for r in rewards {
            mean.add_scaled_assign(1.0 / self.k as f64, r)?;
        }
        for r in rewards {
            candidates.push(r.sub(&mean)?);
        }

        let mut best: Option<(f64, ComplexMatrix, Vec<usize>)> = None;
        for h in &candidates {
            let (_, basis) = h.hermitian_eigh()?;
            let mut score = 0.0;
            let mut assignment = Vec::with_capacity(d);
            for j in 0..d {
                let v = basis.column(j);
                let (o, w) = rewards
                    .iter()
                    .map(|r| expectation(r, &v))
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |acc, (o, w)| if w > acc.1 { (o, w) } else { acc });
                assignment.push(o);
                score += w;
            }
            if best.as_ref().is_none_or(|b| score > b.0) {
                best = Some((score, basis, assignment));
            }
        }
        let (score, basis, assignment) = best.expect("at least one candidate");
        Ok((Measurement::from_basis(&basis, &assignment, self.k)?, score))
    }

    fn respond_all(&self, rewards: &[Vec<ComplexMatrix>], current: &[Measurement]) -> Result<(Vec<Measurement>, f64)> {
        let mut total = 0.0;
        let mut out = Vec::with_capacity(self.n);
        for (r, m) in rewards.iter().zip(current) {
            let (meas, v) = self.respond(r, m)?;
            total += v;
            out.push(meas);
        }
        Ok((out, total))
    }
}

fn expectation(r: &ComplexMatrix, v: &[Complex64]) -> f64 {
    let d = v.len();
    let mut s = Complex64::new(0.0, 0.0);
    for i in 0..d {
        for j in 0..d {
            s += v[i].conj() * r[(i, j)] * v[j];
        }
    }
    s.re
}

fn random_measurement(rng: &mut ChaCha8Rng, dim: usize, outcomes: usize) -> Result<Measurement> {
    let a = ComplexMatrix::from_fn(dim, dim, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let h = a.add(&a.adjoint())?;
    let (_, basis) = h.hermitian_eigh()?;
    let assignment: Vec<usize> = (0..dim).map(|_| rng.gen_range(0..outcomes)).collect();
    Measurement::from_basis(&basis, &assignment, outcomes)
}

/// Lower bound on ω*(M) from alternating projective best responses with a
/// maximally entangled state of dimension `cfg.dim`.
///
/// The reported value is recomputed from the returned strategy, so it is
/// always attained by an explicit quantum distribution.
pub fn seesaw_lower_bound(m: &BellFunctional, cfg: &SeesawConfig) -> Result<SeesawResult> {
    let (n, k) = (m.inputs(), m.outputs());
    if cfg.dim == 0 || cfg.dim > MAX_SEESAW_DIM {
        return Err(Error::guard(format!("see-saw dimension must be in 1..={MAX_SEESAW_DIM}, got {}", cfg.dim)));
    }
    if n * k > MAX_SEESAW_SCENARIO {
        return Err(Error::guard(format!("see-saw needs N·K ≤ {MAX_SEESAW_SCENARIO}, got {}", n * k)));
    }
    if cfg.restarts == 0 || cfg.iters == 0 {
        return Err(Error::invalid("restarts and iters must be at least 1"));
    }
    let c = m.to_dense()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best: Option<(f64, Vec<Measurement>, Vec<Measurement>)> = None;
    let mut climb = |sign: f64, mut alice: Vec<Measurement>, mut bob: Vec<Measurement>| -> Result<()> {
        let prob = Problem { n, k, dim: cfg.dim, c: &c, sign };
        let mut prev = f64::NEG_INFINITY;
        for _ in 0..cfg.iters {
            bob = prob.respond_all(&prob.rewards(&alice, true), &bob)?.0;
            let (next, v) = prob.respond_all(&prob.rewards(&bob, false), &alice)?;
            alice = next;
            if best.as_ref().is_none_or(|b| v > b.0) {
                best = Some((v, alice.clone(), bob.clone()));
            }
            if v - prev < STALL_TOL {
                break;
            }
            prev = v;
        }
        Ok(())
    };

    // The first start lifts a good deterministic strategy, so the result is
    // never below the classical heuristic.
    let det = classical_value_heuristic(m, cfg.restarts, cfg.seed)?;
    let sign = if pair(m, &ProbDist::deterministic(&det.strategy, k)?)? >= 0.0 { 1.0 } else { -1.0 };
    let lift = |f: &[usize]| -> Result<Vec<Measurement>> {
        f.iter().map(|&a| Measurement::from_basis(&ComplexMatrix::identity(cfg.dim), &vec![a; cfg.dim], k)).collect()
    };
    climb(sign, lift(&det.strategy.alice)?, lift(&det.strategy.bob)?)?;

    for _ in 0..cfg.restarts {
        for sign in [1.0, -1.0] {
            let alice = (0..n).map(|_| random_measurement(&mut rng, cfg.dim, k)).collect::<Result<Vec<_>>>()?;
            let bob = (0..n).map(|_| random_measurement(&mut rng, cfg.dim, k)).collect::<Result<Vec<_>>>()?;
            climb(sign, alice, bob)?;
        }
    }
    let (_, alice, bob) = best.expect("at least one iteration");
    let distribution = quantum_prob(&make_mes(cfg.dim)?, &alice, &bob)?;
    let value = pair(m, &distribution)?.abs();
    Ok(SeesawResult { value, alice, bob, distribution })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kvgame::{build_hadamard_subgroup, kv_functional};
    use crate::values::classical_value_exact;

    #[test]
    fn chsh_reaches_tsirelson() {
        let chsh = BellFunctional::chsh();
        let r = seesaw_lower_bound(&chsh, &SeesawConfig { restarts: 20, ..Default::default() }).unwrap();
        assert!(r.value >= classical_value_exact(&chsh).unwrap().value);
        assert!((r.value - (2.0 + 2f64.sqrt())).abs() < 1e-6, "{}", r.value);
    }

    #[test]
    fn zero_functional() {
        let z = BellFunctional::zero(2, 2).unwrap();
        assert_eq!(seesaw_lower_bound(&z, &SeesawConfig::default()).unwrap().value, 0.0);
    }

    #[test]
    fn value_is_certified_by_strategy() {
        let t = build_hadamard_subgroup(2).unwrap();
        let g = kv_functional(&t, 0.25).unwrap();
        let cfg = SeesawConfig { dim: 4, restarts: 5, seed: 3, ..Default::default() };
        let r = seesaw_lower_bound(&g, &cfg).unwrap();
        let q = quantum_prob(&make_mes(4).unwrap(), &r.alice, &r.bob).unwrap();
        assert_eq!(pair(&g, &q).unwrap().abs(), r.value);
        let det = classical_value_heuristic(&g, 5, 3).unwrap().value;
        assert!(r.value >= det - 1e-12, "{} vs {det}", r.value);
        for meas in r.alice.iter().chain(&r.bob) {
            Measurement::new(meas.operators().to_vec()).unwrap();
        }
    }

    #[test]
    fn negative_functional() {
        let neg = BellFunctional::from_entries(2, 2, {
            let mut v = Vec::new();
            BellFunctional::chsh().for_each_nonzero(|x, y, a, b, c| v.push(((x, y, a, b), -c)));
            v
        })
        .unwrap();
        let r = seesaw_lower_bound(&neg, &SeesawConfig::default()).unwrap();
        assert!((r.value - (2.0 + 2f64.sqrt())).abs() < 1e-6);
    }

    #[test]
    fn deterministic_per_seed() {
        let chsh = BellFunctional::chsh();
        let cfg = SeesawConfig { restarts: 3, seed: 17, ..Default::default() };
        let a = seesaw_lower_bound(&chsh, &cfg).unwrap();
        let b = seesaw_lower_bound(&chsh, &cfg).unwrap();
        assert_eq!(a.value, b.value);
        assert_eq!(a.distribution, b.distribution);
    }

    #[test]
    fn guards() {
        let chsh = BellFunctional::chsh();
        assert!(matches!(seesaw_lower_bound(&chsh, &SeesawConfig { dim: 17, ..Default::default() }), Err(Error::Guard(_))));
        assert!(seesaw_lower_bound(&chsh, &SeesawConfig { restarts: 0, ..Default::default() }).is_err());
        let big = BellFunctional::zero(9, 8).unwrap();
        assert!(matches!(seesaw_lower_bound(&big, &SeesawConfig::default()), Err(Error::Guard(_))));
    }
}
