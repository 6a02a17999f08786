//! Maximally entangled and isotropic states, and the product expansion of
//! isotropic tensor powers.
//!
//! Joint systems on k copies are laid out as
//! (Alice copy 1 ⊗ … ⊗ Alice copy k) ⊗ (Bob copy 1 ⊗ … ⊗ Bob copy k).
//! In that layout k copies of |ψ_d⟩ are literally |ψ_{d^k}⟩.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bitlinalg::ComplexMatrix;
use crate::error::{Error, Result};

/// Largest local dimension d^k that [`realize_term`] will materialize.
pub const MAX_REALIZED_LOCAL_DIM: usize = 64;

/// Largest copy count for which the 2^k-term expansion is built.
pub const MAX_EXPANSION_COPIES: u32 = 20;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;

/// A bipartite density operator on C^{dim_a} ⊗ C^{dim_b}.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    dim_a: usize,
    dim_b: usize,
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(matrix: ComplexMatrix, dim_a: usize, dim_b: usize) -> Result<Self> {
        let rho = Self::from_trusted(matrix, dim_a, dim_b)?;
        let defect = rho.matrix.hermiticity_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::invalid(format!("matrix is not Hermitian (defect {defect:e})")));
        }
        let tr = rho.matrix.trace();
        if (tr - 1.0).norm() > TRACE_TOL {
            return Err(Error::invalid(format!("trace is {tr}, expected 1")));
        }
        let min_eig = rho.matrix.min_eigenvalue()?;
        if min_eig < -PSD_TOL {
            return Err(Error::invalid(format!("smallest eigenvalue {min_eig:e} is negative")));
        }
        Ok(rho)
    }

    /// Shape check only; for operators that are positive by construction.
    pub(crate) fn from_trusted(matrix: ComplexMatrix, dim_a: usize, dim_b: usize) -> Result<Self> {
        if !matrix.is_square() || matrix.rows() != dim_a * dim_b {
            return Err(Error::dims(format!(
                "{}x{} matrix is not an operator on C^{dim_a} ⊗ C^{dim_b}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        Ok(DensityMatrix { dim_a, dim_b, matrix })
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn joint_dim(&self) -> usize {
        self.dim_a * self.dim_b
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn purity(&self) -> f64 {
        self.matrix.trace_product(&self.matrix).map(|z| z.re).unwrap_or(f64::NAN)
    }
}

/// |ψ_d⟩⟨ψ_d| with |ψ_d⟩ = d^{-1/2} Σ_i |ii⟩.
pub fn make_mes(d: usize) -> Result<DensityMatrix> {
    if d < 2 {
        return Err(Error::invalid(format!("local dimension must be at least 2, got {d}")));
    }
    let mut m = ComplexMatrix::zeros(d * d, d * d);
    let w = Complex64::new(1.0 / d as f64, 0.0);
    for i in 0..d {
        for j in 0..d {
            m[(i * d + i, j * d + j)] = w;
        }
    }
    DensityMatrix::from_trusted(m, d, d)
}

/// 1/d² on C^d ⊗ C^d.
pub fn make_maximally_mixed(d: usize) -> Result<DensityMatrix> {
    if d < 1 {
        return Err(Error::invalid("local dimension must be positive"));
    }
    let m = ComplexMatrix::identity(d * d).scale(1.0 / (d * d) as f64);
    DensityMatrix::from_trusted(m, d, d)
}

fn check_weight(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("mixing weight p = {p} outside [0, 1]")));
    }
    Ok(())
}

/// p·|ψ_d⟩⟨ψ_d| + (1−p)·1/d².
pub fn make_isotropic(d: usize, p: f64) -> Result<DensityMatrix> {
    check_weight(p)?;
    let mut m = make_mes(d)?.matrix.scale(p);
    m.add_scaled_assign(1.0 - p, make_maximally_mixed(d)?.matrix())?;
    DensityMatrix::from_trusted(m, d, d)
}

/// Weight p at which the isotropic state of local dimension `d` is known to
/// admit a local model: (3d−1)(d−1)^{d−1} / ((d+1) d^d).
pub fn locality_threshold(d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::invalid(format!("local dimension must be at least 2, got {d}")));
    }
    let d = d as f64;
    let ratio = ((d - 1.0) / d).powf(d - 1.0);
    Ok((3.0 * d - 1.0) * ratio / ((d + 1.0) * d))
}

/// The factor α = d·p(d).
pub fn threshold_alpha(d: usize) -> Result<f64> {
    Ok(d as f64 * locality_threshold(d)?)
}

/// Operator placed on one copy of a product term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Factor {
    /// |ψ_d⟩⟨ψ_d|
    Mes,
    /// 1/d²
    Mix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionTerm {
    pub weight: f64,
    pub pattern: Vec<Factor>,
}

impl ExpansionTerm {
    pub fn mes_count(&self) -> usize {
        self.pattern.iter().filter(|f| **f == Factor::Mes).count()
    }
}

/// The 2^k product terms of δ_p^{⊗k}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateExpansion {
    pub d: usize,
    pub k: u32,
    pub p: f64,
    pub terms: Vec<ExpansionTerm>,
}

impl StateExpansion {
    pub fn total_weight(&self) -> f64 {
        self.terms.iter().map(|t| t.weight).sum()
    }

    /// The all-MES term, which always comes first.
    pub fn mes_term(&self) -> &ExpansionTerm {
        &self.terms[0]
    }
}

/// Expands δ_p^{⊗k} into its product terms.
///
/// Reading MES as 1 and MIX as 0 with copy 0 most significant, terms are
/// listed in descending order of that integer, so the all-MES term is first.
pub fn expand_tensor_power(d: usize, p: f64, k: u32) -> Result<StateExpansion> {
    if k == 0 {
        return Err(Error::invalid("copy count must be at least 1"));
    }
    if d < 2 {
        return Err(Error::invalid(format!("local dimension must be at least 2, got {d}")));
    }
    if k > MAX_EXPANSION_COPIES {
        return Err(Error::guard(format!(
            "2^{k} expansion terms exceed the k ≤ {MAX_EXPANSION_COPIES} limit"
        )));
    }
    let count = 1u64 << k;
    let terms = (0..count)
        .rev()
        .map(|code| {
            let pattern: Vec<Factor> = (0..k)
                .map(|i| if (code >> (k - 1 - i)) & 1 == 1 { Factor::Mes } else { Factor::Mix })
                .collect();
            let s = code.count_ones() as i32;
            let weight = p.powi(s) * (1.0 - p).powi(k as i32 - s);
            ExpansionTerm { weight, pattern }
        })
        .collect();
    Ok(StateExpansion { d, k, p, terms })
}

/// Local dimension d^k, or a guard error past [`MAX_REALIZED_LOCAL_DIM`].
fn realized_local_dim(d: usize, k: usize) -> Result<usize> {
    let mut dim = 1usize;
    for _ in 0..k {
        dim = dim.saturating_mul(d);
        if dim > MAX_REALIZED_LOCAL_DIM {
            return Err(Error::guard(format!(
                "local dimension {d}^{k} exceeds {MAX_REALIZED_LOCAL_DIM}"
            )));
        }
    }
    Ok(dim)
}

/// Reorders an operator on (A1 B1)(A2 B2)…(Ak Bk) to (A1…Ak)(B1…Bk).
pub fn interleaved_to_party_major(m: &ComplexMatrix, d: usize, k: usize) -> Result<ComplexMatrix> {
    let dims = vec![d; 2 * k];
    let perm: Vec<usize> = (0..k).map(|i| 2 * i).chain((0..k).map(|i| 2 * i + 1)).collect();
    m.permute_factors(&dims, &perm)
}

/// Tensor product of one bipartite state per copy, in party-major layout.
pub fn tensor_copies(copies: &[&DensityMatrix]) -> Result<DensityMatrix> {
    let first = copies.first().ok_or_else(|| Error::invalid("no copies to combine"))?;
    let d = first.dim_a();
    if copies.iter().any(|c| c.dim_a() != d || c.dim_b() != d) {
        return Err(Error::dims("all copies must share one local dimension"));
    }
    let local = realized_local_dim(d, copies.len())?;
    let mut joint = first.matrix().clone();
    for c in &copies[1..] {
        joint = joint.kron(c.matrix());
    }
    let m = interleaved_to_party_major(&joint, d, copies.len())?;
    DensityMatrix::from_trusted(m, local, local)
}

/// Materializes one product term of the expansion on C^{d^k} ⊗ C^{d^k}.
pub fn realize_term(pattern: &[Factor], d: usize) -> Result<DensityMatrix> {
    if pattern.is_empty() {
        return Err(Error::invalid("empty pattern"));
    }
    realized_local_dim(d, pattern.len())?;
    let mes = make_mes(d)?;
    let mix = make_maximally_mixed(d)?;
    let copies: Vec<&DensityMatrix> = pattern
        .iter()
        .map(|f| match f {
            Factor::Mes => &mes,
            Factor::Mix => &mix,
        })
        .collect();
    tensor_copies(&copies)
}

/// Σ_terms weight · realize_term(term).
pub fn realize_expansion(exp: &StateExpansion) -> Result<DensityMatrix> {
    let mut acc: Option<ComplexMatrix> = None;
    let mut dims = (0, 0);
    for term in &exp.terms {
        let rho = realize_term(&term.pattern, exp.d)?;
        dims = (rho.dim_a(), rho.dim_b());
        match acc.as_mut() {
            None => acc = Some(rho.matrix().scale(term.weight)),
            Some(m) => m.add_scaled_assign(term.weight, rho.matrix())?,
        }
    }
    let m = acc.ok_or_else(|| Error::invalid("empty expansion"))?;
    DensityMatrix::from_trusted(m, dims.0, dims.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitlinalg::Subsystem;

    fn assert_valid(rho: &DensityMatrix) {
        DensityMatrix::new(rho.matrix().clone(), rho.dim_a(), rho.dim_b()).unwrap();
    }

    #[test]
    fn mes_d2_layout() {
        let rho = make_mes(2).unwrap();
        let m = rho.matrix();
        for (r, c) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            assert_eq!(m[(r, c)], Complex64::new(0.5, 0.0));
        }
        let nonzero = m.as_slice().iter().filter(|z| z.norm() > 0.0).count();
        assert_eq!(nonzero, 4);
    }

    #[test]
    fn mes_is_pure_with_mixed_marginals() {
        for d in 2..=5 {
            let rho = make_mes(d).unwrap();
            assert_valid(&rho);
            assert!((rho.purity() - 1.0).abs() < 1e-12);
        }
        let rho = make_mes(4).unwrap();
        let quarter = ComplexMatrix::identity(4).scale(0.25);
        for side in [Subsystem::A, Subsystem::B] {
            let marginal = rho.matrix().partial_trace(4, 4, side).unwrap();
            assert!(marginal.max_abs_diff(&quarter).unwrap() < 1e-14);
        }
        assert!(make_mes(1).is_err());
    }

    #[test]
    fn isotropic_endpoints_and_spectrum() {
        let one = make_isotropic(3, 1.0).unwrap();
        assert!(one.matrix().max_abs_diff(make_mes(3).unwrap().matrix()).unwrap() < 1e-15);
        let zero = make_isotropic(3, 0.0).unwrap();
        assert!(zero.matrix().max_abs_diff(&ComplexMatrix::identity(9).scale(1.0 / 9.0)).unwrap() < 1e-15);

        let half = make_isotropic(2, 0.5).unwrap();
        let (vals, _) = half.matrix().hermitian_eigh().unwrap();
        let expect = [0.125, 0.125, 0.125, 0.625];
        for (v, e) in vals.iter().zip(expect) {
            assert!((v - e).abs() < 1e-12, "{vals:?}");
        }
        assert!(make_isotropic(2, 1.1).is_err());
        assert!(make_isotropic(2, -0.1).is_err());
    }

    #[test]
    fn threshold_values() {
        assert!((locality_threshold(2).unwrap() - 5.0 / 12.0).abs() < 1e-15);
        // (3d−1)(d−1)^{d−1}/((d+1)d^d) with exact integers.
        let exact = |d: u64| {
            ((3 * d - 1) * (d - 1).pow(d as u32 - 1)) as f64 / ((d + 1) * d.pow(d as u32)) as f64
        };
        for d in 2..=10 {
            let got = locality_threshold(d as usize).unwrap();
            assert!((got - exact(d)).abs() < 1e-15 * exact(d).max(1.0), "d={d}");
        }
        let p7 = locality_threshold(7).unwrap();
        let p8 = locality_threshold(8).unwrap();
        // 933120/6588344 and 18941489/150994944.
        assert!((p7 - 0.141_631_948_787_130_7).abs() < 1e-15);
        assert!((p8 - 0.125_444_524_817_996_6).abs() < 1e-15);
        assert!(7.0 * p7 < 1.0 && 8.0 * p8 > 1.0);
    }

    #[test]
    fn alpha_increasing_and_crossing() {
        let alphas: Vec<f64> = (2..=16).map(|d| threshold_alpha(d).unwrap()).collect();
        assert!(alphas.windows(2).all(|w| w[1] > w[0]));
        assert!(threshold_alpha(7).unwrap() < 1.0 && threshold_alpha(8).unwrap() > 1.0);
    }

    #[test]
    fn expansion_weights() {
        let e1 = expand_tensor_power(3, 0.3, 1).unwrap();
        assert_eq!(e1.terms.len(), 2);
        assert_eq!(e1.terms[0], ExpansionTerm { weight: 0.3, pattern: vec![Factor::Mes] });
        assert_eq!(e1.terms[1], ExpansionTerm { weight: 0.7, pattern: vec![Factor::Mix] });

        let p: f64 = 0.3;
        let e2 = expand_tensor_power(2, p, 2).unwrap();
        let w: Vec<f64> = e2.terms.iter().map(|t| t.weight).collect();
        let expect = [p * p, p * (1.0 - p), p * (1.0 - p), (1.0 - p) * (1.0 - p)];
        for (a, b) in w.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(e2.terms[1].pattern, vec![Factor::Mes, Factor::Mix]);
        assert_eq!(e2.terms[2].pattern, vec![Factor::Mix, Factor::Mes]);

        let e3 = expand_tensor_power(2, 0.4, 3).unwrap();
        assert_eq!(e3.terms.len(), 8);
        assert!((e3.total_weight() - 1.0).abs() < 1e-14);
        assert!((e3.mes_term().weight - 0.064).abs() < 1e-15);
        for t in &e3.terms {
            let s = t.mes_count() as i32;
            assert!((t.weight - 0.4f64.powi(s) * 0.6f64.powi(3 - s)).abs() < 1e-15);
        }
        assert!(expand_tensor_power(2, 0.4, 0).is_err());
    }

    #[test]
    fn all_mes_term_is_mes_of_product_dimension() {
        let rho = realize_term(&[Factor::Mes, Factor::Mes], 2).unwrap();
        assert!(rho.matrix().max_abs_diff(make_mes(4).unwrap().matrix()).unwrap() < 1e-12);
        let rho3 = realize_term(&[Factor::Mes; 3], 2).unwrap();
        assert!(rho3.matrix().max_abs_diff(make_mes(8).unwrap().matrix()).unwrap() < 1e-12);
        let rho32 = realize_term(&[Factor::Mes; 2], 3).unwrap();
        assert!(rho32.matrix().max_abs_diff(make_mes(9).unwrap().matrix()).unwrap() < 1e-12);
    }

    #[test]
    fn all_mix_term() {
        let rho = realize_term(&[Factor::Mix, Factor::Mix], 2).unwrap();
        assert!(rho.matrix().max_abs_diff(&ComplexMatrix::identity(16).scale(1.0 / 16.0)).unwrap() < 1e-15);
    }

    #[test]
    fn mixed_term_matches_entrywise_oracle() {
        // Entry ((a1 a2),(b1 b2)) x ((a1' a2'),(b1' b2')) = MES[(a1 b1),(a1' b1')] · (1/4)δ.
        let rho = realize_term(&[Factor::Mes, Factor::Mix], 2).unwrap();
        let mes = make_mes(2).unwrap();
        let idx = |a1: usize, a2: usize, b1: usize, b2: usize| ((a1 * 2 + a2) * 2 + b1) * 2 + b2;
        let mut worst = 0.0f64;
        for r in 0..16 {
            for c in 0..16 {
                let (a1, a2, b1, b2) = ((r >> 3) & 1, (r >> 2) & 1, (r >> 1) & 1, r & 1);
                let (a1p, a2p, b1p, b2p) = ((c >> 3) & 1, (c >> 2) & 1, (c >> 1) & 1, c & 1);
                let mes_part = mes.matrix()[(a1 * 2 + b1, a1p * 2 + b1p)];
                let mix_part = if a2 == a2p && b2 == b2p { 0.25 } else { 0.0 };
                assert_eq!(idx(a1, a2, b1, b2), r);
                worst = worst.max((rho.matrix()[(r, c)] - mes_part * mix_part).norm());
            }
        }
        assert!(worst < 1e-15);
        assert_valid(&rho);
    }

    #[test]
    fn realize_guard() {
        assert!(matches!(realize_term(&[Factor::Mes; 3], 5), Err(Error::Guard(_))));
        assert!(matches!(realize_term(&[Factor::Mes; 7], 2), Err(Error::Guard(_))));
    }

    #[test]
    fn expansion_equals_direct_tensor_power() {
        for d in 2..=4 {
            for step in 0..=10 {
                let p = step as f64 / 10.0;
                let delta = make_isotropic(d, p).unwrap();
                for k in 1..=2u32 {
                    let exp = expand_tensor_power(d, p, k).unwrap();
                    let summed = realize_expansion(&exp).unwrap();
                    let direct = if k == 1 {
                        delta.matrix().clone()
                    } else {
                        let joint = delta.matrix().kron(delta.matrix());
                        interleaved_to_party_major(&joint, d, 2).unwrap()
                    };
                    let diff = summed.matrix().max_abs_diff(&direct).unwrap();
                    assert!(diff < 1e-10, "d={d} p={p} k={k} diff={diff:e}");
                }
            }
        }
    }

    #[test]
    fn realized_terms_are_states() {
        let exp = expand_tensor_power(2, 0.5, 3).unwrap();
        for t in &exp.terms {
            assert_valid(&realize_term(&t.pattern, 2).unwrap());
        }
    }
}
