//! GF(2) bit vectors and dense complex matrices.
//!
//! Bit vectors use a most-significant-first convention: bit 0 is the leading
//! digit of the integer encoding, so `0101` on four bits encodes 5. Every
//! coset and answer index elsewhere in the crate derives from this order.

use std::fmt;
use std::ops::{Index, IndexMut};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest supported bit-vector length.
pub const MAX_BITS: usize = 64;

/// Element of the group {0,1}^n, n ≤ 64.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitVec {
    len: u8,
    value: u64,
}

impl BitVec {
    /// Builds a vector from its integer encoding.
    pub fn new(len: usize, value: u64) -> Result<Self> {
        if len == 0 || len > MAX_BITS {
            return Err(Error::invalid(format!("bit length {len} outside 1..={MAX_BITS}")));
        }
        if len < 64 && value >> len != 0 {
            return Err(Error::invalid(format!("value {value} does not fit in {len} bits")));
        }
        Ok(BitVec { len: len as u8, value })
    }

    pub fn zeros(len: usize) -> Result<Self> {
        Self::new(len, 0)
    }

    pub fn ones(len: usize) -> Result<Self> {
        Self::new(len, mask(len))
    }

    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        let value = bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64);
        Self::new(bits.len(), value)
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Integer encoding, bit 0 most significant.
    pub fn value(&self) -> u64 {
        self.value
    }

    /// The `i`-th digit, counted from the most significant end.
    pub fn bit(&self, i: usize) -> bool {
        assert!(i < self.len(), "bit index {i} out of range for length {}", self.len);
        (self.value >> (self.len() - 1 - i)) & 1 == 1
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len()).map(move |i| self.bit(i))
    }

    pub fn xor(&self, other: &BitVec) -> Result<BitVec> {
        if self.len != other.len {
            return Err(Error::LengthMismatch { left: self.len(), right: other.len() });
        }
        Ok(BitVec { len: self.len, value: self.value ^ other.value })
    }

    pub fn hamming_weight(&self) -> u32 {
        self.value.count_ones()
    }
}

fn mask(len: usize) -> u64 {
    if len >= 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

impl fmt::Display for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.bits() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVec({self})")
    }
}

impl std::str::FromStr for BitVec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::invalid(format!("invalid bit character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        BitVec::from_bits(&bits)
    }
}

pub fn xor(u: &BitVec, v: &BitVec) -> Result<BitVec> {
    u.xor(v)
}

pub fn hamming_weight(u: &BitVec) -> u32 {
    u.hamming_weight()
}

/// Dense row-major complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows.min(8) {
            let row: Vec<String> = (0..self.cols.min(8))
                .map(|c| {
                    let z = self[(r, c)];
                    format!("{:.4}{:+.4}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix { rows, cols, data: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        ComplexMatrix { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dims(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        m
    }

    /// |v⟩⟨v|
    pub fn outer(v: &[Complex64]) -> Self {
        Self::from_fn(v.len(), v.len(), |r, c| v[r] * v[c].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn scale(&self, s: f64) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    /// `self += s * other`
    pub fn add_scaled_assign(&mut self, s: f64, other: &Self) -> Result<()> {
        self.check_same_shape(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
        Ok(())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::dims(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[r * other.cols..(r + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// max |M − M†| entrywise.
    pub fn hermiticity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for r in 0..self.rows {
            for c in r..self.cols {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut out = Self::zeros(rows, cols);
        for ar in 0..self.rows {
            for ac in 0..self.cols {
                let a = self[(ar, ac)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for br in 0..other.rows {
                    let base = (ar * other.rows + br) * cols + ac * other.cols;
                    let brow = &other.data[br * other.cols..(br + 1) * other.cols];
                    for (d, b) in out.data[base..base + other.cols].iter_mut().zip(brow) {
                        *d = a * b;
                    }
                }
            }
        }
        out
    }

    /// tr(self · other) as Σ_ij A_ij B_ji, without forming the product.
    pub fn trace_product(&self, other: &Self) -> Result<Complex64> {
        if self.cols != other.rows || self.rows != other.cols {
            return Err(Error::dims(format!(
                "trace of {}x{} times {}x{} is undefined",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..self.rows {
            for j in 0..self.cols {
                acc += self[(i, j)] * other[(j, i)];
            }
        }
        Ok(acc)
    }

    /// Reorders tensor factors of an operator on ⊗_i C^{dims[i]}.
    ///
    /// Factor `j` of the result is factor `perm[j]` of `self`.
    pub fn permute_factors(&self, dims: &[usize], perm: &[usize]) -> Result<Self> {
        let total: usize = dims.iter().product();
        if !self.is_square() || self.rows != total {
            return Err(Error::dims(format!(
                "{}x{} matrix does not act on a space of dimension {total}",
                self.rows, self.cols
            )));
        }
        let mut seen = vec![false; dims.len()];
        if perm.len() != dims.len() || perm.iter().any(|&p| p >= dims.len() || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::invalid(format!("{perm:?} is not a permutation of {} factors", dims.len())));
        }
        let src = permutation_index_map(dims, perm);
        Ok(Self::from_fn(total, total, |r, c| self[(src[r], src[c])]))
    }

    /// Partial trace of a bipartite operator on C^{dim_a} ⊗ C^{dim_b}.
    pub fn partial_trace(&self, dim_a: usize, dim_b: usize, keep: Subsystem) -> Result<Self> {
        if !self.is_square() || self.rows != dim_a * dim_b {
            return Err(Error::dims(format!(
                "{}x{} matrix is not an operator on {dim_a}x{dim_b}",
                self.rows, self.cols
            )));
        }
        Ok(match keep {
            Subsystem::A => Self::from_fn(dim_a, dim_a, |i, j| {
                (0..dim_b).map(|k| self[(i * dim_b + k, j * dim_b + k)]).sum()
            }),
            Subsystem::B => Self::from_fn(dim_b, dim_b, |k, l| {
                (0..dim_a).map(|i| self[(i * dim_b + k, i * dim_b + l)]).sum()
            }),
        })
    }

    /// Eigendecomposition of a Hermitian matrix.
    ///
    /// Eigenvalues are returned ascending; column `i` of the second value is
    /// the eigenvector of eigenvalue `i`.
    pub fn hermitian_eigh(&self) -> Result<(Vec<f64>, ComplexMatrix)> {
        if !self.is_square() {
            return Err(Error::dims("eigendecomposition of a non-square matrix"));
        }
        let n = self.rows;
        let m = DMatrix::from_fn(n, n, |r, c| self[(r, c)]);
        let eig = m.symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = Self::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
        Ok((values, vectors))
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        let (vals, _) = self.hermitian_eigh()?;
        Ok(vals.first().copied().unwrap_or(0.0))
    }

    /// Column `c` as a vector.
    pub fn column(&self, c: usize) -> Vec<Complex64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::dims(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }
}

/// One side of a bipartite system.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// For each basis index of the permuted space, the index it came from.
fn permutation_index_map(dims: &[usize], perm: &[usize]) -> Vec<usize> {
    let total: usize = dims.iter().product();
    // Stride of each original factor in the original (row-major) layout.
    let mut strides = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let mut digits = vec![0usize; dims.len()];
    let mut map = Vec::with_capacity(total);
    for _ in 0..total {
        map.push(digits.iter().zip(perm).map(|(&dgt, &p)| dgt * strides[p]).sum());
        for j in (0..digits.len()).rev() {
            digits[j] += 1;
            if digits[j] < new_dims[j] {
                break;
            }
            digits[j] = 0;
        }
    }
    map
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kron(b)
}

pub fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<Complex64> {
    a.trace_product(b)
}


#[cfg(test)]
mod tests {
    use super::test_util::*;
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bv(s: &str) -> BitVec {
        s.parse().unwrap()
    }

    #[test]
    fn xor_examples() {
        assert_eq!(xor(&bv("0000"), &bv("0000")).unwrap(), bv("0000"));
        assert_eq!(xor(&bv("0101"), &bv("0011")).unwrap(), bv("0110"));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..32 {
            let u = BitVec::new(16, rand::Rng::gen_range(&mut rng, 0..1 << 16)).unwrap();
            assert_eq!(u.xor(&u).unwrap(), BitVec::zeros(16).unwrap());
        }
    }

    #[test]
    fn xor_rejects_length_mismatch() {
        assert!(matches!(
            bv("010").xor(&bv("0101")),
            Err(Error::LengthMismatch { left: 3, right: 4 })
        ));
    }

    #[test]
    fn weight_examples() {
        assert_eq!(hamming_weight(&bv("0000")), 0);
        assert_eq!(hamming_weight(&bv("0110")), 2);
        assert_eq!(hamming_weight(&BitVec::ones(8).unwrap()), 8);
    }

    #[test]
    fn msb_first_encoding() {
        let v = bv("0101");
        assert_eq!(v.value(), 5);
        assert!(!v.bit(0) && v.bit(1) && !v.bit(2) && v.bit(3));
        assert_eq!(v.to_string(), "0101");
        assert!(BitVec::new(3, 8).is_err());
    }

    #[test]
    fn kron_examples() {
        assert_eq!(ComplexMatrix::identity(2).kron(&ComplexMatrix::identity(2)), ComplexMatrix::identity(4));
        let a = ComplexMatrix::from_real_diagonal(&[1.0, 2.0]);
        let b = ComplexMatrix::from_real_diagonal(&[3.0, 4.0]);
        assert_eq!(a.kron(&b), ComplexMatrix::from_real_diagonal(&[3.0, 4.0, 6.0, 8.0]));

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_matrix(&mut rng, 3, 3);
        let b = random_matrix(&mut rng, 3, 3);
        assert!((a.kron(&b).trace() - a.trace() * b.trace()).norm() < 1e-12);
    }

    #[test]
    fn kron_mixed_product_and_associativity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let [a, b, c, d] = std::array::from_fn(|_| random_matrix(&mut rng, 4, 4));
        let lhs = a.kron(&b).matmul(&c.kron(&d)).unwrap();
        let rhs = a.matmul(&c).unwrap().kron(&b.matmul(&d).unwrap());
        assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-12);

        let e = random_matrix(&mut rng, 2, 3);
        let f = random_matrix(&mut rng, 3, 2);
        let g = random_matrix(&mut rng, 2, 2);
        let left = e.kron(&f).kron(&g);
        let right = e.kron(&f.kron(&g));
        assert_eq!((left.rows(), left.cols()), (12, 12));
        assert!(left.max_abs_diff(&right).unwrap() < 1e-12);
    }

    #[test]
    fn trace_product_examples() {
        let rho = ComplexMatrix::from_real_diagonal(&[0.5, 0.25, 0.25]);
        assert!((ComplexMatrix::identity(3).trace_product(&rho).unwrap() - 1.0).norm() < 1e-15);

        let s = 0.5f64.sqrt();
        let p = ComplexMatrix::outer(&[Complex64::new(s, 0.0), Complex64::new(0.0, s)]);
        assert!((p.trace_product(&p).unwrap() - 1.0).norm() < 1e-14);

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let a = random_hermitian(&mut rng, 6);
            let b = random_hermitian(&mut rng, 6);
            let dense = a.matmul(&b).unwrap().trace();
            assert!((a.trace_product(&b).unwrap() - dense).norm() < 1e-12);
        }
    }

    #[test]
    fn trace_product_dimension_mismatch() {
        let a = ComplexMatrix::zeros(2, 3);
        assert!(a.trace_product(&ComplexMatrix::zeros(2, 3)).is_err());
        assert!(a.trace_product(&ComplexMatrix::zeros(3, 2)).is_ok());
    }

    #[test]
    fn permute_factors_matches_swap_of_kron() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_matrix(&mut rng, 2, 2);
        let b = random_matrix(&mut rng, 3, 3);
        let swapped = a.kron(&b).permute_factors(&[2, 3], &[1, 0]).unwrap();
        assert!(swapped.max_abs_diff(&b.kron(&a)).unwrap() < 1e-15);

        let c = random_matrix(&mut rng, 2, 2);
        let abc = a.kron(&b).kron(&c);
        let cab = abc.permute_factors(&[2, 3, 2], &[2, 0, 1]).unwrap();
        assert!(cab.max_abs_diff(&c.kron(&a).kron(&b)).unwrap() < 1e-15);
        assert!(abc.permute_factors(&[2, 3, 2], &[0, 0, 1]).is_err());
    }

    #[test]
    fn partial_trace_of_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = random_matrix(&mut rng, 2, 2);
        let b = random_matrix(&mut rng, 3, 3);
        let ab = a.kron(&b);
        let ta = ab.partial_trace(2, 3, Subsystem::A).unwrap();
        let expect_a = ComplexMatrix::from_fn(2, 2, |r, c| a[(r, c)] * b.trace());
        let expect_b = ComplexMatrix::from_fn(3, 3, |r, c| b[(r, c)] * a.trace());
        assert!(ta.max_abs_diff(&expect_a).unwrap() < 1e-12);
        assert!(ab.partial_trace(2, 3, Subsystem::B).unwrap().max_abs_diff(&expect_b).unwrap() < 1e-12);
    }

    #[test]
    fn eigh_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = random_hermitian(&mut rng, 5);
        let (vals, vecs) = h.hermitian_eigh().unwrap();
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let d = ComplexMatrix::from_real_diagonal(&vals);
        let back = vecs.matmul(&d).unwrap().matmul(&vecs.adjoint()).unwrap();
        assert!(back.max_abs_diff(&h).unwrap() < 1e-12);
    }

    proptest! {
        #[test]
        fn xor_is_an_abelian_group(a in 0u64..1 << 12, b in 0u64..1 << 12, c in 0u64..1 << 12) {
            let [a, b, c] = [a, b, c].map(|v| BitVec::new(12, v).unwrap());
            let zero = BitVec::zeros(12).unwrap();
            prop_assert_eq!(a.xor(&b).unwrap().xor(&c).unwrap(), a.xor(&b.xor(&c).unwrap()).unwrap());
            prop_assert_eq!(a.xor(&b).unwrap(), b.xor(&a).unwrap());
            prop_assert_eq!(a.xor(&zero).unwrap(), a);
            prop_assert_eq!(a.xor(&a).unwrap(), zero);
        }

        #[test]
        fn trace_product_commutes(seed in 0u64..1000, dim in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_matrix(&mut rng, dim, dim);
            let b = random_matrix(&mut rng, dim, dim);
            let ab = a.trace_product(&b).unwrap();
            let ba = b.trace_product(&a).unwrap();
            prop_assert!((ab - ba).norm() < 1e-12);
        }
    }
}
