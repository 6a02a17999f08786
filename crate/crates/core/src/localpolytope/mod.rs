//! Membership in the local polytope and local-weight decompositions.

mod simplex;

pub use simplex::{solve_lp, LinearProgram, LpSolution, LpStatus, Sense, VarBound};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kvgame::BellFunctional;
use crate::values::{pair, DeterministicStrategy, DistributionDocument, ProbDist};

/// Largest K^N per party for which vertices are enumerated.
pub const MAX_VERTICES_PER_PARTY: u64 = 4096;
/// Largest dense tableau (rows × columns) any LP here will build.
pub const MAX_TABLEAU_CELLS: usize = 1 << 23;

const MEMBERSHIP_TOL: f64 = 1e-9;
const WEIGHT_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightedVertex {
    /// Canonical vertex index (Alice-major).
    pub vertex: u64,
    pub strategy: DeterministicStrategy,
    pub weight: f64,
}

/// A Bell functional separating P from the local polytope.
#[derive(Clone, Debug)]
pub struct Certificate {
    pub functional: BellFunctional,
    /// ⟨M, P⟩.
    pub value: f64,
    /// max over deterministic D of ⟨M, D⟩, by enumeration.
    pub local_max: f64,
    pub gap: f64,
}

#[derive(Clone, Debug)]
pub struct LocalityVerdict {
    pub local: bool,
    /// A convex decomposition into vertices when local.
    pub weights: Vec<WeightedVertex>,
    pub certificate: Option<Certificate>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// max Σq subject to Σ q_s D_s ≤ P.
    RemainderFree,
    /// max λ subject to λP + (1−λ)P′ local for some local P′.
    RemainderLocal,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalContentResult {
    pub lambda: f64,
    pub variant: Variant,
    pub local_weights: Vec<WeightedVertex>,
    /// Decomposition of (1−λ)P′; empty for the remainder-free variant.
    pub remainder_weights: Vec<WeightedVertex>,
    /// The normalized remainder, when λ < 1.
    pub residual_distribution: Option<DistributionDocument>,
    /// Max-norm violation of the variant's defining identity.
    pub reconstruction_residual: f64,
}

struct Vertices {
    n: usize,
    k: usize,
    count: u64,
}

impl Vertices {
    fn new(p: &ProbDist) -> Result<Self> {
        let (n, k) = (p.inputs(), p.outputs());
        match (k as u64).checked_pow(n as u32) {
            Some(per) if per <= MAX_VERTICES_PER_PARTY => Ok(Vertices { n, k, count: per * per }),
            _ => Err(Error::guard(format!(
                "K^N = {k}^{n} deterministic assignments per party exceed {MAX_VERTICES_PER_PARTY}"
            ))),
        }
    }

    fn entries(&self) -> usize {
        self.n * self.n * self.k * self.k
    }

    /// Positions of the N² unit entries of vertex `s` in the flat table.
    fn support(&self, s: u64) -> Vec<usize> {
        let st = DeterministicStrategy::from_vertex_index(s, self.n, self.k);
        let mut out = Vec::with_capacity(self.n * self.n);
        for x in 0..self.n {
            for y in 0..self.n {
                out.push(((x * self.n + y) * self.k + st.alice[x]) * self.k + st.bob[y]);
            }
        }
        out
    }

    fn weighted(&self, weights: &[f64]) -> Vec<WeightedVertex> {
        weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > WEIGHT_FLOOR)
            .map(|(s, &w)| WeightedVertex {
                vertex: s as u64,
                strategy: DeterministicStrategy::from_vertex_index(s as u64, self.n, self.k),
                weight: w,
            })
            .collect()
    }

    /// Σ_s w_s D_s.
    fn combine(&self, weights: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.entries()];
        for (s, &w) in weights.iter().enumerate() {
            if w != 0.0 {
                for i in self.support(s as u64) {
                    out[i] += w;
                }
            }
        }
        out
    }
}

fn check_cells(rows: usize, cols: usize) -> Result<()> {
    // Slack and artificial columns can add up to two per row.
    let cells = rows.saturating_mul(cols.saturating_add(2 * rows + 1));
    if cells > MAX_TABLEAU_CELLS {
        return Err(Error::guard(format!(
            "LP with {rows} rows and {cols} variables exceeds the {MAX_TABLEAU_CELLS}-cell tableau limit"
        )));
    }
    Ok(())
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Decides P ∈ L; a nonlocal P comes with a separating functional whose gap
/// is re-verified against every vertex.
pub fn is_local(p: &ProbDist) -> Result<LocalityVerdict> {
    let vs = Vertices::new(p)?;
    let (e, v) = (vs.entries(), vs.count as usize);
    check_cells(e + 1, v)?;

    let mut lp = LinearProgram::maximize(vec![0.0; v]);
    let mut rows = vec![vec![0.0; v]; e];
    for s in 0..v {
        for i in vs.support(s as u64) {
            rows[i][s] = 1.0;
        }
    }
    for (row, &pi) in rows.into_iter().zip(p.as_slice()) {
        lp.push(row, Sense::Eq, pi);
    }
    lp.push(vec![1.0; v], Sense::Eq, 1.0);
    let sol = solve_lp(&lp)?;

    if sol.status == LpStatus::Optimal {
        let q = sol.solution.expect("optimal solutions carry a point");
        let residual = max_abs(vs.combine(&q).iter().zip(p.as_slice()).map(|(a, b)| a - b));
        if residual > MEMBERSHIP_TOL {
            return Err(Error::numerical(format!("membership reconstruction off by {residual:e}")));
        }
        return Ok(LocalityVerdict { local: true, weights: vs.weighted(&q), certificate: None });
    }

    let certificate = separate(p, &vs)?;
    if certificate.gap <= MEMBERSHIP_TOL {
        return Err(Error::numerical(format!(
            "membership LP is infeasible but the best separating gap is only {:e}",
            certificate.gap
        )));
    }
    Ok(LocalityVerdict { local: false, weights: Vec::new(), certificate: Some(certificate) })
}

/// max ⟨M,P⟩ − t subject to ⟨M,D_s⟩ ≤ t for all s and −1 ≤ M ≤ 1.
fn separate(p: &ProbDist, vs: &Vertices) -> Result<Certificate> {
    let (e, v) = (vs.entries(), vs.count as usize);
    check_cells(v + 2 * e, e + 1)?;
    let mut objective = p.as_slice().to_vec();
    objective.push(-1.0);
    let mut lp = LinearProgram::maximize(objective);
    lp.bounds = vec![VarBound::Free; e + 1];
    for s in 0..v {
        let mut row = vec![0.0; e + 1];
        for i in vs.support(s as u64) {
            row[i] = 1.0;
        }
        row[e] = -1.0;
        lp.push(row, Sense::Le, 0.0);
    }
    for i in 0..e {
        let mut row = vec![0.0; e + 1];
        row[i] = 1.0;
        lp.push(row.clone(), Sense::Le, 1.0);
        lp.push(row, Sense::Ge, -1.0);
    }
    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::numerical(format!("separation LP ended {:?}", sol.status)));
    }
    let m = sol.solution.expect("optimal solutions carry a point");
    let (n, k) = (vs.n, vs.k);
    let entries = (0..e).map(|i| ((i / (n * k * k), i / (k * k) % n, i / k % k, i % k), if m[i].abs() < WEIGHT_FLOOR { 0.0 } else { m[i] }));
    let functional = BellFunctional::from_entries(n, k, entries)?;
    let dense = functional.to_dense()?;
    let local_max = (0..vs.count)
        .map(|s| vs.support(s).iter().map(|&i| dense[i]).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    let value = pair(&functional, p)?;
    Ok(Certificate { functional, value, local_max, gap: value - local_max })
}

/// Largest local weight λ in a decomposition of P, for either reading of
/// the local part.
pub fn local_content(p: &ProbDist, variant: Variant) -> Result<LocalContentResult> {
    let vs = Vertices::new(p)?;
    let (e, v) = (vs.entries(), vs.count as usize);
    let target = p.as_slice();
    let mut support_rows = vec![vec![0.0; v]; e];
    for s in 0..v {
        for i in vs.support(s as u64) {
            support_rows[i][s] = 1.0;
        }
    }

    match variant {
        Variant::RemainderFree => {
            check_cells(e, v)?;
            let mut lp = LinearProgram::maximize(vec![1.0; v]);
            for (row, &pi) in support_rows.into_iter().zip(target) {
                lp.push(row, Sense::Le, pi);
            }
            let sol = solve_lp(&lp)?;
            let q = sol.solution.ok_or_else(|| Error::numerical(format!("local-content LP ended {:?}", sol.status)))?;
            let lambda = q.iter().sum::<f64>().min(1.0);
            let local = vs.combine(&q);
            let excess = local.iter().zip(target).map(|(l, t)| (l - t).max(0.0));
            let reconstruction_residual = max_abs(excess);
            let residual_distribution = if lambda < 1.0 - WEIGHT_FLOOR {
                let rest: Vec<f64> = local.iter().zip(target).map(|(l, t)| ((t - l) / (1.0 - lambda)).max(0.0)).collect();
                Some(ProbDist::new(p.inputs(), p.outputs(), rest)?.to_document())
            } else {
                None
            };
            Ok(LocalContentResult {
                lambda,
                variant,
                local_weights: vs.weighted(&q),
                remainder_weights: Vec::new(),
                residual_distribution,
                reconstruction_residual,
            })
        }
        Variant::RemainderLocal => {
            // Variables: q (v), r (v), λ.
            let nv = 2 * v + 1;
            check_cells(e + 2, nv)?;
            let mut objective = vec![0.0; nv];
            objective[2 * v] = 1.0;
            let mut lp = LinearProgram::maximize(objective);
            for (row, &pi) in support_rows.iter().zip(target) {
                let mut full = Vec::with_capacity(nv);
                full.extend(row.iter().map(|x| -x));
                full.extend(row.iter().copied());
                full.push(pi);
                lp.push(full, Sense::Eq, 0.0);
            }
            let mut sum_q = vec![0.0; nv];
            sum_q[..v].fill(1.0);
            lp.push(sum_q, Sense::Eq, 1.0);
            let mut sum_r = vec![0.0; nv];
            sum_r[v..2 * v].fill(1.0);
            sum_r[2 * v] = 1.0;
            lp.push(sum_r, Sense::Eq, 1.0);
            let sol = solve_lp(&lp)?;
            let x = sol.solution.ok_or_else(|| Error::numerical(format!("local-content LP ended {:?}", sol.status)))?;
            let (q, r) = (&x[..v], &x[v..2 * v]);
            let lambda = x[2 * v].clamp(0.0, 1.0);
            let lq = vs.combine(q);
            let lr = vs.combine(r);
            let identity = (0..e).map(|i| lambda * target[i] - lq[i] + lr[i]);
            let sums = [q.iter().sum::<f64>() - 1.0, r.iter().sum::<f64>() - (1.0 - lambda)];
            let reconstruction_residual = max_abs(identity).max(max_abs(sums));
            let residual_distribution = if lambda < 1.0 - WEIGHT_FLOOR {
                let rest: Vec<f64> = lr.iter().map(|x| x / (1.0 - lambda)).collect();
                Some(ProbDist::new(p.inputs(), p.outputs(), rest)?.to_document())
            } else {
                None
            };
            Ok(LocalContentResult {
                lambda,
                variant,
                local_weights: vs.weighted(q),
                remainder_weights: vs.weighted(r),
                residual_distribution,
                reconstruction_residual,
            })
        }
    }
}

/// LV = 2/π − 1.
pub fn lv_from_pi(pi: f64) -> Result<f64> {
    if !(pi > 0.0 && pi <= 1.0) {
        return Err(Error::invalid(format!("π = {pi} must lie in (0, 1]")));
    }
    Ok(2.0 / pi - 1.0)
}

/// P(a,b|x,y) = 1/2 when a⊕b = x·y.
pub fn pr_box() -> ProbDist {
    let mut t = vec![0.0; 16];
    for x in 0..2 {
        for y in 0..2 {
            for a in 0..2 {
                let b = a ^ (x & y);
                t[((x * 2 + y) * 2 + a) * 2 + b] = 0.5;
            }
        }
    }
    ProbDist::new(2, 2, t).expect("valid table")
}
