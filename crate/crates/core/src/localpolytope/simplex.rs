use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Entries above this are eligible pivots.
const PIVOT_TOL: f64 = 1e-9;
/// Pivots smaller than this abort the solve.
const PIVOT_MIN: f64 = 1e-11;
const OPT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarBound {
    #[default]
    NonNegative,
    Free,
}

/// maximize c·x subject to rows·x (sense) rhs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub senses: Vec<Sense>,
    pub rhs: Vec<f64>,
    pub bounds: Vec<VarBound>,
}

impl LinearProgram {
    /// All variables nonnegative, no constraints yet.
    pub fn maximize(objective: Vec<f64>) -> Self {
        let n = objective.len();
        LinearProgram { objective, rows: Vec::new(), senses: Vec::new(), rhs: Vec::new(), bounds: vec![VarBound::NonNegative; n] }
    }

    pub fn constraint(mut self, row: Vec<f64>, sense: Sense, rhs: f64) -> Self {
        self.push(row, sense, rhs);
        self
    }

    pub fn push(&mut self, row: Vec<f64>, sense: Sense, rhs: f64) {
        self.rows.push(row);
        self.senses.push(sense);
        self.rhs.push(rhs);
    }

    pub fn free(mut self, var: usize) -> Self {
        self.bounds[var] = VarBound::Free;
        self
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.objective.len();
        if self.bounds.len() != n {
            return Err(Error::dims(format!("{} bounds for {n} variables", self.bounds.len())));
        }
        if self.senses.len() != self.rows.len() || self.rhs.len() != self.rows.len() {
            return Err(Error::dims("rows, senses and rhs must have equal length"));
        }
        if let Some(i) = self.rows.iter().position(|r| r.len() != n) {
            return Err(Error::dims(format!("row {i} has {} entries, expected {n}", self.rows[i].len())));
        }
        let finite = self.objective.iter().chain(&self.rhs).chain(self.rows.iter().flatten()).all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("LP entries must be finite"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub value: Option<f64>,
    pub solution: Option<Vec<f64>>,
    /// One multiplier per constraint row, from the certified final basis.
    pub duals: Option<Vec<f64>>,
}

impl LpSolution {
    fn without_point(status: LpStatus) -> Self {
        LpSolution { status, value: None, solution: None, duals: None }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Column {
    /// Original variable `j`, or its negative part when split.
    Var { j: usize, negative: bool },
    Slack,
    Artificial,
}

struct Tableau {
    m: usize,
    width: usize,
    a: Vec<f64>,
    /// z_j = c_B·B⁻¹A_j − c_j; last entry is the objective value.
    z: Vec<f64>,
    basis: Vec<usize>,
    /// Standardized row each tableau row came from.
    origin: Vec<usize>,
    pivots: usize,
}

impl Tableau {
    fn cols(&self) -> usize {
        self.width - 1
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.width + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.a[i * self.width + self.width - 1]
    }

    fn pivot(&mut self, r: usize, c: usize) -> Result<()> {
        let w = self.width;
        let p = self.a[r * w + c];
        if p.abs() < PIVOT_MIN {
            return Err(Error::numerical(format!("pivot {p:e} at row {r}, column {c}")));
        }
        self.pivots += 1;
        if self.pivots > MAX_PIVOTS {
            return Err(Error::numerical(format!("simplex exceeded {MAX_PIVOTS} pivots")));
        }
        for v in &mut self.a[r * w..(r + 1) * w] {
            *v /= p;
        }
        let prow: Vec<f64> = self.a[r * w..(r + 1) * w].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.a[i * w + c];
            if f != 0.0 {
                for (v, pv) in self.a[i * w..(i + 1) * w].iter_mut().zip(&prow) {
                    *v -= f * pv;
                }
                self.a[i * w + c] = 0.0;
            }
        }
        let f = self.z[c];
        if f != 0.0 {
            for (v, pv) in self.z.iter_mut().zip(&prow) {
                *v -= f * pv;
            }
            self.z[c] = 0.0;
        }
        self.basis[r] = c;
        Ok(())
    }

    fn set_objective(&mut self, c: &[f64]) {
        self.z = c.iter().map(|v| -v).chain(std::iter::once(0.0)).collect();
        for i in 0..self.m {
            let cb = c[self.basis[i]];
            if cb != 0.0 {
                for (zj, aij) in self.z.iter_mut().zip(&self.a[i * self.width..(i + 1) * self.width]) {
                    *zj += cb * aij;
                }
            }
        }
    }

    /// Bland's rule to optimality; `false` means unbounded.
    fn optimize(&mut self, allowed: &[bool]) -> Result<bool> {
        loop {
            let Some(j) = (0..self.cols()).find(|&j| allowed[j] && self.z[j] < -OPT_TOL) else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let aij = self.at(i, j);
                if aij <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs(i).max(0.0) / aij;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((r, best)) if ratio < best - 1e-12 || (ratio <= best + 1e-12 && self.basis[i] < self.basis[r]) => {
                        Some((i, ratio))
                    }
                    keep => keep,
                };
            }
            match leave {
                Some((r, _)) => self.pivot(r, j)?,
                None => return Ok(false),
            }
        }
    }

    fn remove_row(&mut self, r: usize) {
        let w = self.width;
        self.a.drain(r * w..(r + 1) * w);
        self.basis.remove(r);
        self.origin.remove(r);
        self.m -= 1;
    }
}

/// Gaussian elimination with partial pivoting; `mat` is n×n row-major.
fn solve_dense(mut mat: Vec<f64>, n: usize, mut rhs: Vec<f64>) -> Result<Vec<f64>> {
    for col in 0..n {
        let p = (col..n)
            .max_by(|&a, &b| mat[a * n + col].abs().total_cmp(&mat[b * n + col].abs()))
            .expect("nonempty range");
        if mat[p * n + col].abs() < PIVOT_MIN {
            return Err(Error::numerical(format!("final basis is singular at column {col}")));
        }
        if p != col {
            for k in 0..n {
                mat.swap(p * n + k, col * n + k);
            }
            rhs.swap(p, col);
        }
        for r in col + 1..n {
            let f = mat[r * n + col] / mat[col * n + col];
            if f != 0.0 {
                for k in col..n {
                    mat[r * n + k] -= f * mat[col * n + k];
                }
                rhs[r] -= f * rhs[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| mat[r * n + k] * x[k]).sum();
        x[r] = (rhs[r] - s) / mat[r * n + r];
    }
    Ok(x)
}

/// Dense two-phase simplex with Bland's rule.
///
/// The final basis is re-solved from the original data: the primal point must
/// be feasible and every reduced cost nonpositive, otherwise the solve fails
/// with a numerical error rather than report an uncertified optimum.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    let m = lp.num_rows();

    // Standardize: rhs ≥ 0, free variables split, then slacks and artificials.
    let mut columns = Vec::new();
    for (j, b) in lp.bounds.iter().enumerate() {
        columns.push(Column::Var { j, negative: false });
        if *b == VarBound::Free {
            columns.push(Column::Var { j, negative: true });
        }
    }
    let flip: Vec<f64> = lp.rhs.iter().map(|&b| if b < 0.0 { -1.0 } else { 1.0 }).collect();
    let senses: Vec<Sense> = lp
        .senses
        .iter()
        .zip(&flip)
        .map(|(&s, &f)| match (s, f < 0.0) {
            (Sense::Le, true) => Sense::Ge,
            (Sense::Ge, true) => Sense::Le,
            (s, _) => s,
        })
        .collect();
    let n_struct = columns.len();
    let mut slack_of = vec![None; m];
    let mut art_of = vec![None; m];
    for i in 0..m {
        if senses[i] != Sense::Eq {
            slack_of[i] = Some(columns.len());
            columns.push(Column::Slack);
        }
    }
    for i in 0..m {
        if senses[i] != Sense::Le {
            art_of[i] = Some(columns.len());
            columns.push(Column::Artificial);
        }
    }
    let ncols = columns.len();
    let width = ncols + 1;

    // Standardized constraint matrix, kept for certification.
    let mut std_a = vec![0.0; m * ncols];
    for i in 0..m {
        for (c, col) in columns[..n_struct].iter().enumerate() {
            if let Column::Var { j, negative } = *col {
                let v = flip[i] * lp.rows[i][j];
                std_a[i * ncols + c] = if negative { -v } else { v };
            }
        }
        if let Some(s) = slack_of[i] {
            std_a[i * ncols + s] = if senses[i] == Sense::Le { 1.0 } else { -1.0 };
        }
        if let Some(a) = art_of[i] {
            std_a[i * ncols + a] = 1.0;
        }
    }
    let std_b: Vec<f64> = lp.rhs.iter().zip(&flip).map(|(b, f)| b * f).collect();
    let std_c: Vec<f64> = columns
        .iter()
        .map(|col| match *col {
            Column::Var { j, negative } => {
                if negative {
                    -lp.objective[j]
                } else {
                    lp.objective[j]
                }
            }
            _ => 0.0,
        })
        .collect();

    let mut a = vec![0.0; m * width];
    for i in 0..m {
        a[i * width..i * width + ncols].copy_from_slice(&std_a[i * ncols..(i + 1) * ncols]);
        a[i * width + ncols] = std_b[i];
    }
    let basis: Vec<usize> = (0..m).map(|i| art_of[i].or(slack_of[i]).expect("every row has a basic column")).collect();
    let mut t = Tableau { m, width, a, z: Vec::new(), basis, origin: (0..m).collect(), pivots: 0 };

    let is_art: Vec<bool> = columns.iter().map(|c| *c == Column::Artificial).collect();
    if is_art.iter().any(|&x| x) {
        let phase1: Vec<f64> = is_art.iter().map(|&x| if x { -1.0 } else { 0.0 }).collect();
        t.set_objective(&phase1);
        t.optimize(&vec![true; ncols])?;
        if t.z[ncols] < -FEAS_TOL {
            return Ok(LpSolution::without_point(LpStatus::Infeasible));
        }
        // Drive artificials out of the basis; rows that cannot pivot are redundant.
        let mut r = 0;
        while r < t.m {
            if is_art[t.basis[r]] {
                match (0..ncols).filter(|&j| !is_art[j]).find(|&j| t.at(r, j).abs() > PIVOT_TOL) {
                    Some(j) => t.pivot(r, j)?,
                    None => {
                        t.remove_row(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
    }
    let allowed: Vec<bool> = is_art.iter().map(|&x| !x).collect();
    t.set_objective(&std_c);
    if !t.optimize(&allowed)? {
        return Ok(LpSolution::without_point(LpStatus::Unbounded));
    }

    // Certify at the final basis from the standardized data.
    let mr = t.m;
    let mut bmat = vec![0.0; mr * mr];
    for (r, &orow) in t.origin.iter().enumerate() {
        for (k, &col) in t.basis.iter().enumerate() {
            bmat[r * mr + k] = std_a[orow * ncols + col];
        }
    }
    let b: Vec<f64> = t.origin.iter().map(|&i| std_b[i]).collect();
    let x_b = solve_dense(bmat.clone(), mr, b)?;
    if let Some(v) = x_b.iter().find(|v| **v < -FEAS_TOL) {
        return Err(Error::numerical(format!("final basis is primal infeasible: {v:e}")));
    }
    let mut bt = vec![0.0; mr * mr];
    for r in 0..mr {
        for k in 0..mr {
            bt[k * mr + r] = bmat[r * mr + k];
        }
    }
    let c_b: Vec<f64> = t.basis.iter().map(|&c| std_c[c]).collect();
    let y = solve_dense(bt, mr, c_b)?;
    for j in (0..ncols).filter(|&j| allowed[j]) {
        let yaj: f64 = t.origin.iter().zip(&y).map(|(&i, yi)| yi * std_a[i * ncols + j]).sum();
        let reduced = std_c[j] - yaj;
        if reduced > OPT_TOL.max(1e-9 * std_c[j].abs()) {
            return Err(Error::numerical(format!("reduced cost {reduced:e} on column {j} at the final basis")));
        }
    }

    let mut x = vec![0.0; lp.num_vars()];
    for (&col, &v) in t.basis.iter().zip(&x_b) {
        if let Column::Var { j, negative } = columns[col] {
            x[j] += if negative { -v } else { v };
        }
    }
    let value = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    let mut duals = vec![0.0; m];
    for (&i, yi) in t.origin.iter().zip(&y) {
        duals[i] = yi * flip[i];
    }
    Ok(LpSolution { status: LpStatus::Optimal, value: Some(value), solution: Some(x), duals: Some(duals) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn value(lp: &LinearProgram) -> f64 {
        let s = solve_lp(lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        s.value.unwrap()
    }

    /// Best objective over all basic points: every choice of n tight
    /// hyperplanes among the rows and the bounds x_j = 0.
    fn vertex_oracle(lp: &LinearProgram) -> Option<f64> {
        let n = lp.num_vars();
        let mut planes: Vec<(Vec<f64>, f64)> = lp.rows.iter().cloned().zip(lp.rhs.iter().copied()).collect();
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            planes.push((e, 0.0));
        }
        let total = planes.len();
        let mut best: Option<f64> = None;
        let mut idx: Vec<usize> = (0..n).collect();
        loop {
            let mut mat = Vec::with_capacity(n * n);
            let mut rhs = Vec::with_capacity(n);
            for &i in &idx {
                mat.extend_from_slice(&planes[i].0);
                rhs.push(planes[i].1);
            }
            if let Ok(x) = solve_dense(mat, n, rhs) {
                let feasible = x.iter().all(|&v| v >= -1e-9)
                    && lp.rows.iter().zip(&lp.senses).zip(&lp.rhs).all(|((r, s), b)| {
                        let ax: f64 = r.iter().zip(&x).map(|(p, q)| p * q).sum();
                        match s {
                            Sense::Le => ax <= b + 1e-9,
                            Sense::Ge => ax >= b - 1e-9,
                            Sense::Eq => (ax - b).abs() <= 1e-9,
                        }
                    });
                if feasible {
                    let v: f64 = lp.objective.iter().zip(&x).map(|(p, q)| p * q).sum();
                    best = Some(best.map_or(v, |b: f64| b.max(v)));
                }
            }
            // Next n-subset in lexicographic order.
            let mut i = n;
            loop {
                if i == 0 {
                    return best;
                }
                i -= 1;
                if idx[i] < total - n + i {
                    break;
                }
            }
            idx[i] += 1;
            for k in i + 1..n {
                idx[k] = idx[k - 1] + 1;
            }
        }
    }

    #[test]
    fn one_variable() {
        let lp = LinearProgram::maximize(vec![1.0]).constraint(vec![1.0], Sense::Le, 3.0);
        assert!((value(&lp) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_optimum() {
        let lp = LinearProgram::maximize(vec![1.0, 1.0]).constraint(vec![1.0, 1.0], Sense::Le, 1.0);
        let s = solve_lp(&lp).unwrap();
        assert!((s.value.unwrap() - 1.0).abs() < 1e-12);
        let x = s.solution.unwrap();
        assert!((x[0] + x[1] - 1.0).abs() < 1e-12 && x.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn infeasible_and_unbounded() {
        let lp = LinearProgram::maximize(vec![1.0]).constraint(vec![1.0], Sense::Le, 1.0).constraint(vec![1.0], Sense::Ge, 2.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);
        let lp = LinearProgram::maximize(vec![1.0, 0.0]).constraint(vec![1.0, -1.0], Sense::Le, 1.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn free_variables_and_equalities() {
        // max −x s.t. x ≥ −2 with x free.
        let lp = LinearProgram::maximize(vec![-1.0]).constraint(vec![1.0], Sense::Ge, -2.0).free(0);
        let s = solve_lp(&lp).unwrap();
        assert!((s.value.unwrap() - 2.0).abs() < 1e-12);
        assert!((s.solution.unwrap()[0] + 2.0).abs() < 1e-12);
        // max x + 2y s.t. x + y = 1, y − x ≤ 0.
        let lp = LinearProgram::maximize(vec![1.0, 2.0])
            .constraint(vec![1.0, 1.0], Sense::Eq, 1.0)
            .constraint(vec![-1.0, 1.0], Sense::Le, 0.0);
        assert!((value(&lp) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn redundant_equalities() {
        let lp = LinearProgram::maximize(vec![1.0, 1.0])
            .constraint(vec![1.0, 1.0], Sense::Eq, 1.0)
            .constraint(vec![2.0, 2.0], Sense::Eq, 2.0)
            .constraint(vec![1.0, 0.0], Sense::Le, 0.25);
        let s = solve_lp(&lp).unwrap();
        assert!((s.value.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(s.duals.unwrap().len(), 3);
    }

    #[test]
    fn duals_price_the_objective() {
        // max 3x + 2y s.t. x + y ≤ 4, x + 3y ≤ 6, x ≤ 3.
        let lp = LinearProgram::maximize(vec![3.0, 2.0])
            .constraint(vec![1.0, 1.0], Sense::Le, 4.0)
            .constraint(vec![1.0, 3.0], Sense::Le, 6.0)
            .constraint(vec![1.0, 0.0], Sense::Le, 3.0);
        let s = solve_lp(&lp).unwrap();
        assert!((s.value.unwrap() - 11.0).abs() < 1e-12);
        let y = s.duals.unwrap();
        let dual_obj: f64 = y.iter().zip(&lp.rhs).map(|(a, b)| a * b).sum();
        assert!((dual_obj - 11.0).abs() < 1e-10);
        assert!(y.iter().all(|&v| v >= -1e-12));
    }

    #[test]
    fn random_lps_match_vertex_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..100 {
            let n = 5;
            let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let mut lp = LinearProgram::maximize((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect());
            lp.push(vec![1.0; n], Sense::Le, 10.0);
            for _ in 0..7 {
                let row: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let ax: f64 = row.iter().zip(&x0).map(|(a, b)| a * b).sum();
                match rng.gen_range(0..4) {
                    0 => lp.push(row, Sense::Ge, ax - rng.gen_range(0.0..1.0)),
                    1 => lp.push(row, Sense::Eq, ax),
                    _ => lp.push(row, Sense::Le, ax + rng.gen_range(0.0..1.0)),
                }
            }
            let oracle = vertex_oracle(&lp).expect("x0 is feasible");
            assert!((value(&lp) - oracle).abs() < 1e-8);
        }
    }

    #[test]
    fn json_round_trip() {
        let lp = LinearProgram::maximize(vec![1.0]).constraint(vec![1.0], Sense::Le, 3.0);
        let text = serde_json::to_string(&lp).unwrap();
        assert!(text.contains("\"<=\""));
        assert_eq!(serde_json::from_str::<LinearProgram>(&text).unwrap(), lp);
        let s: LpSolution = serde_json::from_str(&serde_json::to_string(&solve_lp(&lp).unwrap()).unwrap()).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
    }

    #[test]
    fn rejects_malformed() {
        let mut lp = LinearProgram::maximize(vec![1.0, 2.0]);
        lp.push(vec![1.0], Sense::Le, 1.0);
        assert!(matches!(solve_lp(&lp), Err(Error::DimensionMismatch(_))));
        let lp = LinearProgram::maximize(vec![f64::NAN]);
        assert!(solve_lp(&lp).is_err());
    }
}
