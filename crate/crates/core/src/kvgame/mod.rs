//! The Khot-Vishnoi coset game.
//!
//! Questions are cosets of the Hadamard code H inside {0,1}^n (n = 2^l),
//! answers are positions inside the asked coset, and the pair wins when the
//! XOR of the two answered group elements equals the hidden noise string z.

mod functional;
mod referee;

pub use functional::{BellFunctional, EntryDoc, GameDocument, KvMeta, MAX_DENSE_COEFFS};
pub use referee::{referee_sample, Referee, RefereeRound};

use num_complex::Complex64;

use crate::bitlinalg::{BitVec, ComplexMatrix};
use crate::error::{Error, Result};

/// Largest supported l (n = 2^l = 16, 4096 cosets).
pub const MAX_LOG_N: u32 = 4;

/// Universal constants of the asymptotic KV bounds.
///
/// `c` bounds the classical value by c/n; `c_prime` bounds the MES value
/// from below by c′/(ln n)². Only reporting formulas use these.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KvConstants {
    pub c: f64,
    pub c_prime: f64,
}

/// c = e^4, c′ = 4.
pub const KV_CONSTANTS: KvConstants = KvConstants { c: 54.598_150_033_144_236, c_prime: 4.0 };

/// Hadamard subgroup and coset quotient of {0,1}^n.
#[derive(Clone, Debug)]
pub struct CosetTable {
    l: u32,
    n: usize,
    subgroup: Vec<BitVec>,
    cosets: Vec<Vec<BitVec>>,
    // Indexed by integer encoding: (coset id, position in coset).
    member_index: Vec<(u32, u32)>,
}

impl CosetTable {
    pub fn l(&self) -> u32 {
        self.l
    }

    /// String length n = 2^l, which is also the answer alphabet size.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_cosets(&self) -> usize {
        self.cosets.len()
    }

    pub fn subgroup(&self) -> &[BitVec] {
        &self.subgroup
    }

    pub fn cosets(&self) -> &[Vec<BitVec>] {
        &self.cosets
    }

    pub fn coset(&self, id: usize) -> &[BitVec] {
        &self.cosets[id]
    }

    /// The group element answered by position `pos` of coset `id`.
    pub fn element(&self, id: usize, pos: usize) -> BitVec {
        self.cosets[id][pos]
    }

    /// Smallest element of the coset, used as its representative.
    pub fn representative(&self, id: usize) -> BitVec {
        self.cosets[id][0]
    }

    pub fn member_index(&self, v: &BitVec) -> (usize, usize) {
        assert_eq!(v.len(), self.n, "bit vector length does not match the table");
        let (c, p) = self.member_index[v.value() as usize];
        (c as usize, p as usize)
    }

    pub fn coset_of(&self, v: &BitVec) -> usize {
        self.member_index(v).0
    }

    /// Pr_η(z) for a string of weight `w`.
    pub fn noise_probability(&self, eta: f64, w: u32) -> f64 {
        eta.powi(w as i32) * (1.0 - eta).powi(self.n as i32 - w as i32)
    }
}

/// Builds H = { h_s } with h_s(i) = ⟨bin(s), bin(i)⟩ mod 2 and its cosets.
///
/// Cosets are sorted internally by integer encoding and numbered in
/// ascending order of their smallest element.
pub fn build_hadamard_subgroup(l: u32) -> Result<CosetTable> {
    if !(1..=MAX_LOG_N).contains(&l) {
        return Err(Error::invalid(format!("l = {l} outside 1..={MAX_LOG_N}")));
    }
    let n = 1usize << l;
    let subgroup: Vec<BitVec> = (0..n)
        .map(|s| {
            let bits: Vec<bool> = (0..n).map(|i| (s & i).count_ones() % 2 == 1).collect();
            BitVec::from_bits(&bits)
        })
        .collect::<Result<_>>()?;

    let size = 1usize << n;
    let unassigned = (u32::MAX, u32::MAX);
    let mut member_index = vec![unassigned; size];
    let mut cosets = Vec::with_capacity(size / n);
    for x in 0..size as u64 {
        if member_index[x as usize] != unassigned {
            continue;
        }
        let xv = BitVec::new(n, x)?;
        let mut coset: Vec<BitVec> = subgroup.iter().map(|h| xv.xor(h)).collect::<Result<_>>()?;
        coset.sort();
        let id = cosets.len() as u32;
        for (pos, v) in coset.iter().enumerate() {
            member_index[v.value() as usize] = (id, pos as u32);
        }
        cosets.push(coset);
    }
    Ok(CosetTable { l, n, subgroup, cosets, member_index })
}

pub(crate) fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta <= 0.5) {
        return Err(Error::invalid(format!("η = {eta} outside (0, 1/2]")));
    }
    Ok(())
}

/// The asymptotic choice η = 1/2 − 1/ln n; only positive for n ≥ 8.
pub fn paper_eta(n: f64) -> Result<f64> {
    let eta = 0.5 - 1.0 / n.ln();
    if n < 8.0 || !(eta > 0.0) {
        return Err(Error::invalid(format!(
            "η = 1/2 − 1/ln n is not a valid noise rate for n = {n} (requires n ≥ 8)"
        )));
    }
    Ok(eta)
}

/// Builds the KV game as a Bell functional.
///
/// Coefficient at ([x],[y],a,b) is (n/2^n)·Pr_η(a⊕b): the only z compatible
/// with a win is a⊕b, and a⊕b always lies in [x⊕y] so Bob's question is
/// automatically consistent.
pub fn kv_functional(table: &CosetTable, eta: f64) -> Result<BellFunctional> {
    check_eta(eta)?;
    Ok(BellFunctional::kv(table.clone(), eta))
}

/// Referee question distribution π([x],[y]).
#[derive(Clone, Debug)]
pub struct QuestionMarginal {
    n: usize,
    num_cosets: usize,
    representatives: Vec<BitVec>,
    member: CosetLookup,
    // Σ_{z∈c} Pr_η(z) for every coset c.
    coset_mass: Vec<f64>,
}

#[derive(Clone, Debug)]
struct CosetLookup(Vec<u32>);

impl QuestionMarginal {
    /// π([x],[y]) = (n/2^n)·Σ_{z∈[x⊕y]} Pr_η(z).
    pub fn get(&self, x: usize, y: usize) -> f64 {
        let d = self.representatives[x].value() ^ self.representatives[y].value();
        self.coset_mass[self.member.0[d as usize] as usize] / self.num_cosets as f64
    }

    pub fn inputs(&self) -> usize {
        self.num_cosets
    }

    pub fn total(&self) -> f64 {
        (0..self.num_cosets)
            .map(|x| (0..self.num_cosets).map(|y| self.get(x, y)).sum::<f64>())
            .sum()
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

pub fn kv_question_marginal(functional: &BellFunctional) -> Result<QuestionMarginal> {
    let meta = functional
        .kv_meta()
        .ok_or_else(|| Error::invalid("question marginal is only defined for KV functionals"))?;
    let table = functional.kv_table()?;
    let mut coset_mass = vec![0.0; table.num_cosets()];
    for (id, coset) in table.cosets().iter().enumerate() {
        coset_mass[id] = coset.iter().map(|z| table.noise_probability(meta.eta, z.hamming_weight())).sum();
    }
    Ok(QuestionMarginal {
        n: table.n(),
        num_cosets: table.num_cosets(),
        representatives: (0..table.num_cosets()).map(|c| table.representative(c)).collect(),
        member: CosetLookup(table.member_index.iter().map(|&(c, _)| c).collect()),
        coset_mass,
    })
}

/// A POVM on C^dim with one operator per outcome.
#[derive(Clone, Debug)]
pub struct Measurement {
    dim: usize,
    operators: Vec<ComplexMatrix>,
}

const POVM_TOL: f64 = 1e-10;

impl Measurement {
    /// Checks each operator is PSD and that they sum to the identity.
    pub fn new(operators: Vec<ComplexMatrix>) -> Result<Self> {
        let m = Self::from_trusted(operators)?;
        let mut sum = ComplexMatrix::zeros(m.dim, m.dim);
        for (a, op) in m.operators.iter().enumerate() {
            if !op.is_hermitian(POVM_TOL) {
                return Err(Error::invalid(format!("operator {a} is not Hermitian")));
            }
            let min = op.min_eigenvalue()?;
            if min < -POVM_TOL {
                return Err(Error::invalid(format!("operator {a} has eigenvalue {min:e}")));
            }
            sum.add_scaled_assign(1.0, op)?;
        }
        let defect = sum.max_abs_diff(&ComplexMatrix::identity(m.dim))?;
        if defect > POVM_TOL {
            return Err(Error::invalid(format!("operators sum to identity only within {defect:e}")));
        }
        Ok(m)
    }

    pub(crate) fn from_trusted(operators: Vec<ComplexMatrix>) -> Result<Self> {
        let dim = operators.first().map(|o| o.rows()).ok_or_else(|| Error::invalid("no outcomes"))?;
        if operators.iter().any(|o| o.rows() != dim || o.cols() != dim) {
            return Err(Error::dims("all measurement operators must be dim x dim"));
        }
        Ok(Measurement { dim, operators })
    }

    /// Projective measurement onto an orthonormal basis; vector `j` goes to
    /// outcome `assignment[j]`.
    pub fn from_basis(basis: &ComplexMatrix, assignment: &[usize], outcomes: usize) -> Result<Self> {
        let dim = basis.rows();
        if assignment.len() != basis.cols() || assignment.iter().any(|&a| a >= outcomes) {
            return Err(Error::invalid("basis assignment does not match the outcome count"));
        }
        let mut ops = vec![ComplexMatrix::zeros(dim, dim); outcomes];
        for (j, &a) in assignment.iter().enumerate() {
            ops[a].add_scaled_assign(1.0, &ComplexMatrix::outer(&basis.column(j)))?;
        }
        Self::from_trusted(ops)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn outcomes(&self) -> usize {
        self.operators.len()
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    pub fn operator(&self, a: usize) -> &ComplexMatrix {
        &self.operators[a]
    }
}

/// u_a(i) = (−1)^{a(i)} / √n.
pub fn kv_vector(a: &BitVec) -> Vec<Complex64> {
    let s = 1.0 / (a.len() as f64).sqrt();
    a.bits().map(|b| Complex64::new(if b { -s } else { s }, 0.0)).collect()
}

/// One von Neumann measurement per coset: projectors onto u_a, a ∈ [x],
/// ordered by position inside the coset.
pub fn kv_measurements(table: &CosetTable) -> Vec<Measurement> {
    table
        .cosets()
        .iter()
        .map(|coset| {
            let ops = coset.iter().map(|a| ComplexMatrix::outer(&kv_vector(a))).collect();
            Measurement { dim: table.n(), operators: ops }
        })
        .collect()
}

/// Classical value bound n^{−η/(1−η)}.
pub fn kv_classical_upper_bound(n: usize, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    Ok((n as f64).powf(-eta / (1.0 - eta)))
}

/// The asymptotic form c/n, stated for η = 1/2 − 1/ln n and so only
/// offered for n ≥ 8.
pub fn kv_classical_upper_bound_c_over_n(n: f64) -> Result<f64> {
    paper_eta(n)?;
    Ok(KV_CONSTANTS.c / n)
}

/// c′/(ln n)², the lower bound on the MES strategy's value.
pub fn kv_quantum_lower_bound(n: f64) -> f64 {
    KV_CONSTANTS.c_prime / n.ln().powi(2)
}
