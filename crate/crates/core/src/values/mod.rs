//! Distributions, the ⟨M,P⟩ pairing, and classical and quantum values.

mod bounds;
mod classical;
mod quantum;
mod report;
mod seesaw;

pub use bounds::{
    almost_activation_exponent, almost_activation_lower_factor, almost_activation_threshold_ln_d,
    almost_activation_weight, first_crossing, lv_mes_upper_bound_symbolic, lv_tensor_upper_bound_symbolic,
    superactivation_ratio_bound, SymbolicBound, C_DOUBLE_PRIME,
};
pub use classical::{
    classical_value_exact, classical_value_heuristic, ClassicalValue, HeuristicValue,
    MAX_ENUMERATED_ASSIGNMENTS,
};
pub use quantum::{
    kv_mes_value, kv_value_for_expansion, quantum_prob, quantum_value_kv_closed_form,
    ExpansionPath, ExpansionValue, MAX_JOINT_DIM,
};
pub use report::{ReportBounds, Tagged, ViolationReport};
pub use seesaw::{seesaw_lower_bound, SeesawConfig, SeesawResult, MAX_SEESAW_DIM, MAX_SEESAW_SCENARIO};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kvgame::BellFunctional;

/// How a reported number was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exact,
    ClosedFormValidated,
    HeuristicLb,
    FormulaUb,
    FormulaLb,
    FormulaSymbolic,
    MonteCarlo,
}

const NEGATIVE_CLAMP: f64 = 1e-14;
const NORMALIZATION_TOL: f64 = 1e-10;

/// Table P(a,b|x,y), stored flat as ((x·N + y)·K + a)·K + b.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbDist {
    inputs: usize,
    outputs: usize,
    table: Vec<f64>,
}

impl ProbDist {
    /// Entries in [−1e-14, 0) are clamped to zero; every (x,y) block must sum
    /// to one within 1e-10.
    pub fn new(inputs: usize, outputs: usize, mut table: Vec<f64>) -> Result<Self> {
        let block = outputs * outputs;
        if inputs == 0 || outputs == 0 || table.len() != inputs * inputs * block {
            return Err(Error::dims(format!(
                "{} entries do not form a table with N={inputs}, K={outputs}",
                table.len()
            )));
        }
        for (i, v) in table.iter_mut().enumerate() {
            if !v.is_finite() || *v < -NEGATIVE_CLAMP {
                return Err(Error::invalid(format!("entry {i} = {v} is not a probability")));
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        for (q, chunk) in table.chunks(block).enumerate() {
            let s: f64 = chunk.iter().sum();
            if (s - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::invalid(format!(
                    "P(·,·|{},{}) sums to {s}",
                    q / inputs,
                    q % inputs
                )));
            }
        }
        Ok(ProbDist { inputs, outputs, table })
    }

    pub fn uniform(inputs: usize, outputs: usize) -> Result<Self> {
        let w = 1.0 / (outputs * outputs) as f64;
        Self::new(inputs, outputs, vec![w; inputs * inputs * outputs * outputs])
    }

    /// Point mass of a deterministic strategy pair.
    pub fn deterministic(strategy: &DeterministicStrategy, outputs: usize) -> Result<Self> {
        let n = strategy.inputs();
        if strategy.alice.iter().chain(&strategy.bob).any(|&o| o >= outputs) {
            return Err(Error::invalid("strategy output out of range"));
        }
        let mut table = vec![0.0; n * n * outputs * outputs];
        for x in 0..n {
            for y in 0..n {
                table[((x * n + y) * outputs + strategy.alice[x]) * outputs + strategy.bob[y]] = 1.0;
            }
        }
        Ok(ProbDist { inputs: n, outputs, table })
    }

    /// λ·P1 + (1−λ)·P2.
    pub fn mix(lambda: f64, p1: &ProbDist, p2: &ProbDist) -> Result<Self> {
        if p1.inputs != p2.inputs || p1.outputs != p2.outputs {
            return Err(Error::dims("mixing distributions of different scenarios"));
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::invalid(format!("mixing weight {lambda} outside [0, 1]")));
        }
        let table = p1.table.iter().zip(&p2.table).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect();
        Self::new(p1.inputs, p1.outputs, table)
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn index(&self, x: usize, y: usize, a: usize, b: usize) -> usize {
        ((x * self.inputs + y) * self.outputs + a) * self.outputs + b
    }

    pub fn get(&self, x: usize, y: usize, a: usize, b: usize) -> f64 {
        self.table[self.index(x, y, a, b)]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.table
    }

    /// One row per (x,y), x-major, each holding K² entries a-major.
    pub fn to_document(&self) -> DistributionDocument {
        let block = self.outputs * self.outputs;
        DistributionDocument {
            inputs: self.inputs,
            outputs: self.outputs,
            table: self.table.chunks(block).map(|c| c.to_vec()).collect(),
        }
    }

    pub fn from_document(doc: &DistributionDocument) -> Result<Self> {
        let block = doc.outputs * doc.outputs;
        if doc.table.len() != doc.inputs * doc.inputs || doc.table.iter().any(|r| r.len() != block) {
            return Err(Error::dims(format!(
                "distribution table must have N² = {} rows of K² = {block} entries",
                doc.inputs * doc.inputs
            )));
        }
        Self::new(doc.inputs, doc.outputs, doc.table.concat())
    }
}

/// JSON distribution file: `{N, K, table: [[...]]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionDocument {
    #[serde(rename = "N")]
    pub inputs: usize,
    #[serde(rename = "K")]
    pub outputs: usize,
    pub table: Vec<Vec<f64>>,
}

/// A pair of deterministic response functions.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DeterministicStrategy {
    pub alice: Vec<usize>,
    pub bob: Vec<usize>,
}

impl DeterministicStrategy {
    pub fn inputs(&self) -> usize {
        self.alice.len()
    }

    /// Inverse of [`DeterministicStrategy::vertex_index`].
    pub fn from_vertex_index(index: u64, inputs: usize, outputs: usize) -> Self {
        let per_party = (outputs as u64).pow(inputs as u32);
        DeterministicStrategy {
            alice: assignment_from_counter(index / per_party, inputs, outputs),
            bob: assignment_from_counter(index % per_party, inputs, outputs),
        }
    }

    /// Position in the canonical vertex order: Alice-major, each party's
    /// assignment read as a base-K counter with input 0 most significant.
    pub fn vertex_index(&self, outputs: usize) -> u64 {
        let per_party = (outputs as u64).pow(self.inputs() as u32);
        counter_from_assignment(&self.alice, outputs) * per_party + counter_from_assignment(&self.bob, outputs)
    }
}

pub(crate) fn assignment_from_counter(mut counter: u64, inputs: usize, outputs: usize) -> Vec<usize> {
    let mut out = vec![0; inputs];
    for slot in out.iter_mut().rev() {
        *slot = (counter % outputs as u64) as usize;
        counter /= outputs as u64;
    }
    out
}

fn counter_from_assignment(assignment: &[usize], outputs: usize) -> u64 {
    assignment.iter().fold(0u64, |acc, &o| acc * outputs as u64 + o as u64)
}

/// Number of deterministic strategy pairs, K^{2N}, if it fits in a u64.
pub fn vertex_count(inputs: usize, outputs: usize) -> Option<u64> {
    (outputs as u64).checked_pow(2 * inputs as u32)
}

/// ⟨M,P⟩ = Σ M(x,y,a,b)·P(a,b|x,y).
pub fn pair(m: &BellFunctional, p: &ProbDist) -> Result<f64> {
    if m.inputs() != p.inputs || m.outputs() != p.outputs {
        return Err(Error::dims(format!(
            "functional on (N={}, K={}) paired with distribution on (N={}, K={})",
            m.inputs(),
            m.outputs(),
            p.inputs,
            p.outputs
        )));
    }
    let mut total = 0.0;
    m.for_each_nonzero(|x, y, a, b, c| total += c * p.get(x, y, a, b));
    Ok(total)
}

#[cfg(test)]
pub(crate) mod test_util {
    use super::ProbDist;
    use rand::Rng;

    pub fn random_dist(rng: &mut impl Rng, inputs: usize, outputs: usize) -> ProbDist {
        let block = outputs * outputs;
        let mut table = Vec::new();
        for _ in 0..inputs * inputs {
            let raw: Vec<f64> = (0..block).map(|_| rng.gen_range(0.0..1.0)).collect();
            let s: f64 = raw.iter().sum();
            table.extend(raw.iter().map(|v| v / s));
        }
        ProbDist::new(inputs, outputs, table).unwrap()
    }
}
