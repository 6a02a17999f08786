use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{build_hadamard_subgroup, check_eta, CosetTable};
use crate::error::{Error, Result};

/// Largest coefficient count that is ever materialized densely.
pub const MAX_DENSE_COEFFS: usize = 1 << 24;

/// Largest KV instance (n) written to a game file.
const MAX_SERIALIZED_N: usize = 8;

type Key = (usize, usize, usize, usize);

/// Tag carried by Khot-Vishnoi instances.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KvMeta {
    pub n: usize,
    pub eta: f64,
}

#[derive(Clone, Debug)]
struct KvCoefficients {
    table: Arc<CosetTable>,
    // 1 / number of cosets
    scale: f64,
    // Pr_η(z) indexed by |z|
    weight_probability: Vec<f64>,
}

impl KvCoefficients {
    fn coeff(&self, x: usize, y: usize, a: usize, b: usize) -> f64 {
        let z = self.table.element(x, a).value() ^ self.table.element(y, b).value();
        self.scale * self.weight_probability[z.count_ones() as usize]
    }
}

#[derive(Clone, Debug)]
enum Coefficients {
    Sparse(BTreeMap<Key, f64>),
    Kv(Arc<KvCoefficients>),
}

/// Coefficient table M(x,y,a,b) on a scenario with N inputs and K outputs
/// per party. Indices are 0-based; absent entries are zero.
///
/// KV instances are generated from the closed form on demand rather than
/// stored, so n = 16 games stay cheap to hold.
#[derive(Clone, Debug)]
pub struct BellFunctional {
    inputs: usize,
    outputs: usize,
    coeffs: Coefficients,
    kv: Option<KvMeta>,
}

impl BellFunctional {
    pub(crate) fn kv(table: CosetTable, eta: f64) -> Self {
        let n = table.n();
        let weight_probability = (0..=n as u32).map(|w| table.noise_probability(eta, w)).collect();
        let inputs = table.num_cosets();
        let kv = KvCoefficients {
            scale: 1.0 / inputs as f64,
            table: Arc::new(table),
            weight_probability,
        };
        BellFunctional {
            inputs,
            outputs: n,
            coeffs: Coefficients::Kv(Arc::new(kv)),
            kv: Some(KvMeta { n, eta }),
        }
    }

    pub fn from_entries(
        inputs: usize,
        outputs: usize,
        entries: impl IntoIterator<Item = (Key, f64)>,
    ) -> Result<Self> {
        if inputs == 0 || outputs == 0 {
            return Err(Error::invalid("scenario needs at least one input and one output"));
        }
        let mut map = BTreeMap::new();
        for ((x, y, a, b), c) in entries {
            if x >= inputs || y >= inputs || a >= outputs || b >= outputs {
                return Err(Error::invalid(format!(
                    "entry ({x},{y},{a},{b}) outside a scenario with N={inputs}, K={outputs}"
                )));
            }
            if !c.is_finite() {
                return Err(Error::invalid(format!("non-finite coefficient at ({x},{y},{a},{b})")));
            }
            if map.insert((x, y, a, b), c).is_some() {
                return Err(Error::invalid(format!("duplicate entry ({x},{y},{a},{b})")));
            }
        }
        map.retain(|_, c| *c != 0.0);
        Ok(BellFunctional { inputs, outputs, coeffs: Coefficients::Sparse(map), kv: None })
    }

    pub fn zero(inputs: usize, outputs: usize) -> Result<Self> {
        Self::from_entries(inputs, outputs, std::iter::empty())
    }

    /// Indicator of a⊕b = x·y on two inputs and two outputs, without
    /// question weights (classical value 3).
    pub fn chsh() -> Self {
        Self::chsh_scaled(1.0)
    }

    /// CHSH as a game with uniform question weights (classical value 3/4).
    pub fn chsh_game() -> Self {
        Self::chsh_scaled(0.25)
    }

    fn chsh_scaled(w: f64) -> Self {
        let entries = (0..16usize).filter_map(|i| {
            let (x, y, a, b) = (i >> 3 & 1, i >> 2 & 1, i >> 1 & 1, i & 1);
            ((a ^ b) == (x & y)).then_some(((x, y, a, b), w))
        });
        Self::from_entries(2, 2, entries).expect("static CHSH entries are valid")
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn kv_meta(&self) -> Option<KvMeta> {
        self.kv
    }

    /// The coset table behind a KV instance, rebuilt if the functional was
    /// loaded from a file.
    pub fn kv_table(&self) -> Result<Arc<CosetTable>> {
        match (&self.coeffs, self.kv) {
            (Coefficients::Kv(kv), _) => Ok(kv.table.clone()),
            (_, Some(meta)) => {
                let l = meta.n.trailing_zeros();
                if !meta.n.is_power_of_two() {
                    return Err(Error::invalid(format!("KV tag n = {} is not a power of two", meta.n)));
                }
                Ok(Arc::new(build_hadamard_subgroup(l)?))
            }
            _ => Err(Error::invalid("functional is not a KV instance")),
        }
    }

    pub fn coeff(&self, x: usize, y: usize, a: usize, b: usize) -> f64 {
        match &self.coeffs {
            Coefficients::Sparse(map) => map.get(&(x, y, a, b)).copied().unwrap_or(0.0),
            Coefficients::Kv(kv) => kv.coeff(x, y, a, b),
        }
    }

    /// Streams every nonzero coefficient in (x, y, a, b) lexicographic order.
    pub fn for_each_nonzero(&self, mut f: impl FnMut(usize, usize, usize, usize, f64)) {
        match &self.coeffs {
            Coefficients::Sparse(map) => {
                for (&(x, y, a, b), &c) in map {
                    f(x, y, a, b, c);
                }
            }
            Coefficients::Kv(kv) => {
                let k = self.outputs;
                for x in 0..self.inputs {
                    for y in 0..self.inputs {
                        for a in 0..k {
                            for b in 0..k {
                                let c = kv.coeff(x, y, a, b);
                                if c != 0.0 {
                                    f(x, y, a, b, c);
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.coeffs {
            Coefficients::Sparse(map) => map.is_empty(),
            Coefficients::Kv(_) => false,
        }
    }

    pub fn coefficient_count(&self) -> usize {
        self.inputs * self.inputs * self.outputs * self.outputs
    }

    /// Flat coefficient array indexed ((x·N + y)·K + a)·K + b.
    pub fn to_dense(&self) -> Result<Vec<f64>> {
        let total = self.coefficient_count();
        if total > MAX_DENSE_COEFFS {
            return Err(Error::guard(format!(
                "{total} coefficients exceed the dense limit of {MAX_DENSE_COEFFS}"
            )));
        }
        let (n, k) = (self.inputs, self.outputs);
        let mut dense = vec![0.0; total];
        self.for_each_nonzero(|x, y, a, b, c| dense[((x * n + y) * k + a) * k + b] = c);
        Ok(dense)
    }

    /// Sum of all coefficients.
    pub fn coefficient_mass(&self) -> f64 {
        let mut total = 0.0;
        self.for_each_nonzero(|_, _, _, _, c| total += c);
        total
    }

    pub fn to_document(&self) -> Result<GameDocument> {
        if let Some(meta) = self.kv {
            if meta.n > MAX_SERIALIZED_N {
                return Err(Error::guard(format!(
                    "KV game files are limited to n ≤ {MAX_SERIALIZED_N}, got n = {}",
                    meta.n
                )));
            }
        }
        let mut entries = Vec::new();
        self.for_each_nonzero(|x, y, a, b, c| entries.push(EntryDoc { x, y, a, b, c }));
        Ok(GameDocument {
            n: self.kv.map(|m| m.n),
            eta: self.kv.map(|m| m.eta),
            inputs: self.inputs,
            outputs: self.outputs,
            entries,
        })
    }

    pub fn from_document(doc: &GameDocument) -> Result<Self> {
        let mut f = Self::from_entries(
            doc.inputs,
            doc.outputs,
            doc.entries.iter().map(|e| ((e.x, e.y, e.a, e.b), e.c)),
        )?;
        match (doc.n, doc.eta) {
            (Some(n), Some(eta)) => {
                check_eta(eta)?;
                if !n.is_power_of_two() || n < 2 || doc.outputs != n || doc.inputs != (1usize << n) / n {
                    return Err(Error::invalid(format!(
                        "KV tag n = {n} is inconsistent with N = {}, K = {}",
                        doc.inputs, doc.outputs
                    )));
                }
                f.kv = Some(KvMeta { n, eta });
            }
            (None, None) => {}
            _ => return Err(Error::invalid("game file must give both n and eta, or neither")),
        }
        Ok(f)
    }
}

/// JSON game file: `{n, eta, N, K, entries: [{x, y, a, b, c}]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameDocument {
    pub n: Option<usize>,
    pub eta: Option<f64>,
    #[serde(rename = "N")]
    pub inputs: usize,
    #[serde(rename = "K")]
    pub outputs: usize,
    pub entries: Vec<EntryDoc>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntryDoc {
    pub x: usize,
    pub y: usize,
    pub a: usize,
    pub b: usize,
    pub c: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitlinalg::BitVec;
    use crate::kvgame::kv_functional;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// (n/2^n) Σ_z Pr_η(z)·[[x⊕z]=[y]]·[a⊕b=z], summed over all 2^n strings.
    fn brute_force_coeff(t: &CosetTable, eta: f64, x: usize, y: usize, a: usize, b: usize) -> f64 {
        let n = t.n();
        let xr = t.representative(x);
        let (ae, be) = (t.element(x, a), t.element(y, b));
        let mut total = 0.0;
        for z in 0..1u64 << n {
            let zv = BitVec::new(n, z).unwrap();
            if t.coset_of(&xr.xor(&zv).unwrap()) != y || ae.xor(&be).unwrap() != zv {
                continue;
            }
            let w = zv.hamming_weight() as i32;
            total += eta.powi(w) * (1.0 - eta).powi(n as i32 - w);
        }
        total * n as f64 / (1u64 << n) as f64
    }

    #[test]
    fn closed_form_matches_definition_n4() {
        let t = build_hadamard_subgroup(2).unwrap();
        for eta in [0.1, 0.25, 0.5] {
            let g = kv_functional(&t, eta).unwrap();
            for x in 0..4 {
                for y in 0..4 {
                    for a in 0..4 {
                        for b in 0..4 {
                            let diff = (g.coeff(x, y, a, b) - brute_force_coeff(&t, eta, x, y, a, b)).abs();
                            assert!(diff <= 1e-14);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn covariance_under_translation() {
        for l in [2, 3] {
            let t = build_hadamard_subgroup(l).unwrap();
            let n = t.n();
            let g = kv_functional(&t, 0.3).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(l as u64);
            for _ in 0..200 {
                let shift = BitVec::new(n, rng.gen_range(0..1u64 << n)).unwrap();
                let (x, y) = (rng.gen_range(0..t.num_cosets()), rng.gen_range(0..t.num_cosets()));
                let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
                let (x2, a2) = t.member_index(&t.element(x, a).xor(&shift).unwrap());
                let (y2, b2) = t.member_index(&t.element(y, b).xor(&shift).unwrap());
                assert!((g.coeff(x, y, a, b) - g.coeff(x2, y2, a2, b2)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_outside_scenario_and_validation() {
        assert!(BellFunctional::from_entries(2, 2, [((2, 0, 0, 0), 1.0)]).is_err());
        assert!(BellFunctional::from_entries(2, 2, [((0, 0, 0, 0), 1.0), ((0, 0, 0, 0), 2.0)]).is_err());
        assert!(BellFunctional::from_entries(2, 2, [((0, 0, 0, 0), f64::NAN)]).is_err());
        let z = BellFunctional::zero(3, 2).unwrap();
        assert!(z.is_zero());
        assert_eq!(z.coeff(1, 2, 0, 1), 0.0);
    }

    #[test]
    fn chsh_layout() {
        let m = BellFunctional::chsh();
        assert_eq!(m.coeff(1, 1, 0, 1), 1.0);
        assert_eq!(m.coeff(1, 1, 0, 0), 0.0);
        assert_eq!(m.coeff(0, 1, 1, 1), 1.0);
        assert_eq!(m.coefficient_mass(), 8.0);
        assert_eq!(BellFunctional::chsh_game().coefficient_mass(), 2.0);
    }

    #[test]
    fn document_round_trip_keeps_kv_tag() {
        let t = build_hadamard_subgroup(2).unwrap();
        let g = kv_functional(&t, 0.25).unwrap();
        let doc = g.to_document().unwrap();
        assert_eq!(doc.entries.len(), 256);
        let json = serde_json::to_string(&doc).unwrap();
        assert!(json.contains("\"N\":4") && json.contains("\"K\":4"));
        let back = BellFunctional::from_document(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back.kv_meta(), g.kv_meta());
        assert_eq!(back.to_dense().unwrap(), g.to_dense().unwrap());
        assert_eq!(back.kv_table().unwrap().num_cosets(), 4);
    }

    #[test]
    fn large_kv_games_are_not_serialized() {
        let t = build_hadamard_subgroup(4).unwrap();
        let g = kv_functional(&t, 0.25).unwrap();
        assert!(matches!(g.to_document(), Err(Error::Guard(_))));
        assert!(matches!(g.to_dense(), Err(Error::Guard(_))));
        // Streaming lookups still work.
        assert!(g.coeff(4095, 17, 3, 9) > 0.0);
    }

    #[test]
    fn inconsistent_kv_tag_rejected() {
        let mut doc = BellFunctional::chsh().to_document().unwrap();
        doc.n = Some(4);
        doc.eta = Some(0.25);
        assert!(BellFunctional::from_document(&doc).is_err());
        doc.n = None;
        assert!(BellFunctional::from_document(&doc).is_err());
    }
}
