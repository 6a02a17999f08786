use num_complex::Complex64;
use serde::Serialize;

use super::{pair, ProbDist};
use crate::bitlinalg::ComplexMatrix;
use crate::error::{Error, Result};
use crate::kvgame::{build_hadamard_subgroup, check_eta, kv_functional, kv_measurements, Measurement};
use crate::states::{realize_term, DensityMatrix, StateExpansion};

/// Largest joint dimension for which a full quantum table is computed.
pub const MAX_JOINT_DIM: usize = 4096;

// KV instances whose quantum table is computed densely: n ≤ 2^3.
const MAX_DENSE_KV_LOG_N: u32 = 3;

/// P(a,b|x,y) = tr((E_x^a ⊗ F_y^b) ρ).
///
/// Alice's operator is contracted into ρ once per (x,a), leaving a K-by-K
/// reduced operator on Bob's side; each entry is then one trace product.
pub fn quantum_prob(rho: &DensityMatrix, alice: &[Measurement], bob: &[Measurement]) -> Result<ProbDist> {
    let (da, db) = (rho.dim_a(), rho.dim_b());
    if rho.joint_dim() > MAX_JOINT_DIM {
        return Err(Error::guard(format!(
            "joint dimension {} exceeds {MAX_JOINT_DIM}; use quantum_value_kv_closed_form",
            rho.joint_dim()
        )));
    }
    if alice.len() != bob.len() || alice.is_empty() {
        return Err(Error::dims(format!(
            "Alice has {} inputs and Bob {}; both must be equal and nonzero",
            alice.len(),
            bob.len()
        )));
    }
    let k = alice[0].outcomes();
    if alice.iter().chain(bob).any(|m| m.outcomes() != k) {
        return Err(Error::dims("all measurements must have the same number of outcomes"));
    }
    if alice.iter().any(|m| m.dim() != da) || bob.iter().any(|m| m.dim() != db) {
        return Err(Error::dims(format!(
            "measurement dimensions do not match the state (C^{da} ⊗ C^{db})"
        )));
    }

    let m = rho.matrix();
    let reduced: Vec<ComplexMatrix> = alice
        .iter()
        .flat_map(|meas| meas.operators())
        .map(|e| {
            let mut r = ComplexMatrix::zeros(db, db);
            for i in 0..da {
                for j in 0..da {
                    let eij = e[(i, j)];
                    if eij == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    for l in 0..db {
                        for kk in 0..db {
                            r[(l, kk)] += eij * m[(j * db + l, i * db + kk)];
                        }
                    }
                }
            }
            r
        })
        .collect();

    let n = alice.len();
    let mut table = Vec::with_capacity(n * n * k * k);
    for x in 0..n {
        for y in 0..n {
            for a in 0..k {
                let r = &reduced[x * k + a];
                for b in 0..k {
                    let v = bob[y].operator(b).trace_product(r)?;
                    if v.im.abs() > 1e-9 {
                        return Err(Error::numerical(format!(
                            "P({a},{b}|{x},{y}) has imaginary part {:e}",
                            v.im
                        )));
                    }
                    if v.re < -1e-10 {
                        return Err(Error::numerical(format!("P({a},{b}|{x},{y}) = {:e}", v.re)));
                    }
                    table.push(v.re.max(0.0));
                }
            }
        }
    }
    for (q, block) in table.chunks(k * k).enumerate() {
        let s: f64 = block.iter().sum();
        if (s - 1.0).abs() > 1e-10 {
            return Err(Error::numerical(format!(
                "outcome probabilities for questions ({}, {}) sum to {s}",
                q / n,
                q % n
            )));
        }
    }
    ProbDist::new(n, k, table)
}

/// (1−2η)² + 4η(1−η)/n, the KV value of the MES strategy, i.e.
/// E_z (1 − 2|z|/n)² over z ~ Bernoulli(η)^n.
pub fn kv_mes_value(n: f64, eta: f64) -> f64 {
    (1.0 - 2.0 * eta).powi(2) + 4.0 * eta * (1.0 - eta) / n
}

/// KV value of |ψ_n⟩ with the coset measurements, from the closed form.
pub fn quantum_value_kv_closed_form(n: usize, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::invalid(format!("n = {n} is not a power of two ≥ 2")));
    }
    Ok(kv_mes_value(n as f64, eta))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExpansionPath {
    /// Realize every term and evaluate it densely.
    Exact,
    /// Only the all-MES term, from the closed form.
    Bound,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExpansionValue {
    /// Full weighted value; `None` on the bound path.
    pub total: Option<f64>,
    /// p^k · ⟨G_KV, Q_1⟩, a lower bound on the total because every KV
    /// coefficient is nonnegative.
    pub mes_term: f64,
}

/// KV value (n = d^k) of the state described by `exp`, measured with the
/// coset measurements on both sides.
pub fn kv_value_for_expansion(exp: &StateExpansion, eta: f64, path: ExpansionPath) -> Result<ExpansionValue> {
    check_eta(eta)?;
    let n = (exp.d as u64)
        .checked_pow(exp.k)
        .ok_or_else(|| Error::guard(format!("{}^{} overflows", exp.d, exp.k)))?;
    if !n.is_power_of_two() {
        return Err(Error::invalid(format!("KV games need n = d^k to be a power of two, got {n}")));
    }
    let weight = exp.mes_term().weight;
    match path {
        ExpansionPath::Bound => Ok(ExpansionValue { total: None, mes_term: weight * kv_mes_value(n as f64, eta) }),
        ExpansionPath::Exact => {
            let l = n.trailing_zeros();
            if l > MAX_DENSE_KV_LOG_N {
                return Err(Error::guard(format!(
                    "exact expansion value needs n = d^k ≤ {}, got {n}",
                    1u32 << MAX_DENSE_KV_LOG_N
                )));
            }
            let table = build_hadamard_subgroup(l)?;
            let game = kv_functional(&table, eta)?;
            let meas = kv_measurements(&table);
            let mut total = 0.0;
            let mut mes_term = 0.0;
            for (i, term) in exp.terms.iter().enumerate() {
                let rho = realize_term(&term.pattern, exp.d)?;
                let q = quantum_prob(&rho, &meas, &meas)?;
                let v = term.weight * pair(&game, &q)?;
                if i == 0 {
                    mes_term = v;
                }
                total += v;
            }
            Ok(ExpansionValue { total: Some(total), mes_term })
        }
    }
}
