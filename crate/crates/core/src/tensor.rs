//! Dense tensors, matricization and mode products.
//!
//! Modes are numbered from zero in code. Entries are stored with mode 0
//! running fastest: the multi-index `(i_0, ..., i_{d-1})` lives at
//! `i_0 + n_0 * (i_1 + n_1 * (i_2 + ...))`. The mode-`k` matricization has
//! `n_k` rows; its columns enumerate the remaining indices in increasing mode
//! order with the earliest mode fastest. With this ordering
//!
//! ```text
//! Mat_0(C x_0 U_0 x_1 U_1 ... x_{d-1} U_{d-1}) = U_0 Mat_0(C) (U_{d-1} (x) ... (x) U_1)^T
//! ```
//!
//! where `(x)` is the standard Kronecker product (`nalgebra`'s `kronecker`).

use std::ops::{Add, Sub};

use nalgebra::DMatrix;

use crate::error::{mismatch, Result};
use crate::{Parity, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor<T: Scalar> {
    dims: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> DenseTensor<T> {
    pub fn zeros(dims: Vec<usize>) -> Self {
        let len = dims.iter().product();
        Self { dims, data: vec![T::zero(); len] }
    }

    pub fn from_vec(dims: Vec<usize>, data: Vec<T>) -> Result<Self> {
        let len: usize = dims.iter().product();
        if len != data.len() {
            return Err(mismatch("DenseTensor::from_vec", format!("dims {dims:?} need {len} entries, got {}", data.len())));
        }
        Ok(Self { dims, data })
    }

    /// Builds a tensor entry by entry from its multi-index.
    pub fn from_fn(dims: Vec<usize>, mut f: impl FnMut(&[usize]) -> T) -> Self {
        let len: usize = dims.iter().product();
        let mut idx = vec![0usize; dims.len()];
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(f(&idx));
            increment(&mut idx, &dims);
        }
        Self { dims, data }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn linear_index(&self, idx: &[usize]) -> usize {
        let mut lin = 0;
        for (k, (&i, &n)) in idx.iter().zip(&self.dims).enumerate().rev() {
            debug_assert!(i < n, "index {i} out of range in mode {k}");
            lin = lin * n + i;
        }
        lin
    }

    pub fn get(&self, idx: &[usize]) -> T {
        self.data[self.linear_index(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: T) {
        let lin = self.linear_index(idx);
        self.data[lin] = value;
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x.modulus_squared()).sum::<f64>().sqrt()
    }

    /// `<self, other> = sum conj(self) * other`.
    pub fn inner(&self, other: &Self) -> T {
        assert_eq!(self.dims, other.dims, "inner product of tensors with different shapes");
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |acc, (a, b)| acc + a.conjugate() * *b)
    }

    pub fn scale_mut(&mut self, alpha: T) {
        for x in &mut self.data {
            *x *= alpha;
        }
    }

    pub fn scaled(&self, alpha: T) -> Self {
        let mut out = self.clone();
        out.scale_mut(alpha);
        out
    }

    /// `self += alpha * x`.
    pub fn axpy(&mut self, alpha: T, x: &Self) {
        assert_eq!(self.dims, x.dims, "axpy on tensors with different shapes");
        for (a, b) in self.data.iter_mut().zip(&x.data) {
            *a += alpha * *b;
        }
    }

    fn split(&self, mode: usize) -> (usize, usize, usize) {
        let left = self.dims[..mode].iter().product();
        let right = self.dims[mode + 1..].iter().product();
        (left, self.dims[mode], right)
    }

    fn check_mode(&self, op: &'static str, mode: usize) -> Result<()> {
        if mode >= self.order() {
            return Err(mismatch(op, format!("mode {mode} out of range for order {}", self.order())));
        }
        Ok(())
    }

    /// Mode-`mode` matricization `Mat_mode(Y)`.
    pub fn matricize(&self, mode: usize) -> Result<DMatrix<T>> {
        self.check_mode("matricize", mode)?;
        let (left, n, right) = self.split(mode);
        let mut m = DMatrix::<T>::zeros(n, left * right);
        for r in 0..right {
            for q in 0..n {
                let base = left * (q + n * r);
                for l in 0..left {
                    m[(q, l + left * r)] = self.data[base + l];
                }
            }
        }
        Ok(m)
    }

    /// Inverse of [`DenseTensor::matricize`]: `Ten_mode(Mat_mode(Y)) = Y`.
    pub fn tensorize(m: &DMatrix<T>, mode: usize, dims: &[usize]) -> Result<Self> {
        if mode >= dims.len() {
            return Err(mismatch("tensorize", format!("mode {mode} out of range for order {}", dims.len())));
        }
        let n = dims[mode];
        let left: usize = dims[..mode].iter().product();
        let right: usize = dims[mode + 1..].iter().product();
        if m.nrows() != n || m.ncols() != left * right {
            return Err(mismatch(
                "tensorize",
                format!("matrix {}x{} does not fit dims {dims:?} in mode {mode}", m.nrows(), m.ncols()),
            ));
        }
        let mut data = vec![T::zero(); n * left * right];
        for r in 0..right {
            for q in 0..n {
                let base = left * (q + n * r);
                for l in 0..left {
                    data[base + l] = m[(q, l + left * r)];
                }
            }
        }
        Ok(Self { dims: dims.to_vec(), data })
    }

    /// Mode product `Y x_mode M`: contracts mode `mode` with the columns of `M`.
    pub fn mode_product(&self, mode: usize, m: &DMatrix<T>) -> Result<Self> {
        self.check_mode("mode_product", mode)?;
        let (left, n, right) = self.split(mode);
        if m.ncols() != n {
            return Err(mismatch("mode_product", format!("matrix has {} columns, mode {mode} has size {n}", m.ncols())));
        }
        let p = m.nrows();
        let mut dims = self.dims.clone();
        dims[mode] = p;
        let mut out = vec![T::zero(); left * p * right];
        for r in 0..right {
            for q in 0..n {
                let src = &self.data[left * (q + n * r)..left * (q + n * r) + left];
                for row in 0..p {
                    let c = m[(row, q)];
                    if c == T::zero() {
                        continue;
                    }
                    let dst = &mut out[left * (row + p * r)..left * (row + p * r) + left];
                    for (o, s) in dst.iter_mut().zip(src) {
                        *o += c * *s;
                    }
                }
            }
        }
        Ok(Self { dims, data: out })
    }

    /// Applies the same matrix in every mode: `Y x_0 M x_1 M ... x_{d-1} M`.
    pub fn multi_mode_product(&self, m: &DMatrix<T>) -> Result<Self> {
        let mut out = self.clone();
        for mode in 0..self.order() {
            out = out.mode_product(mode, m)?;
        }
        Ok(out)
    }

    fn check_cubic(&self, op: &'static str) -> Result<()> {
        if self.dims.windows(2).any(|w| w[0] != w[1]) {
            return Err(mismatch(op, format!("all dimensions must agree, got {:?}", self.dims)));
        }
        Ok(())
    }

    /// `Z[i_0, ..., i_{d-1}] = Y[i_{sigma(0)}, ..., i_{sigma(d-1)}]`.
    pub fn permute(&self, perm: &Permutation) -> Result<Self> {
        self.check_cubic("permute")?;
        if perm.len() != self.order() {
            return Err(mismatch("permute", "permutation length differs from tensor order"));
        }
        let mut src = vec![0usize; self.order()];
        Ok(Self::from_fn(self.dims.clone(), |idx| {
            for (k, s) in src.iter_mut().enumerate() {
                *s = idx[perm.sigma[k]];
            }
            self.get(&src)
        }))
    }

    /// Projection onto (anti-)symmetric tensors,
    /// `(1/d!) sum_sigma (+-1)^{sign sigma} permute(Y, sigma)`.
    ///
    /// Each orbit of index permutations is averaged once and written back with
    /// the appropriate sign, so the result has exact parity in floating point
    /// and a tensor that already has the parity is returned bit-for-bit.
    pub fn symmetrize(&self, parity: Parity) -> Result<Self> {
        self.check_cubic("symmetrize")?;
        let d = self.order();
        if d <= 1 {
            return Ok(self.clone());
        }
        let perms = Permutation::all(d);
        let inv_count = 1.0 / perms.len() as f64;
        let mut out = Self::zeros(self.dims.clone());
        let mut idx = vec![0usize; d];
        let mut arranged = vec![0usize; d];
        for _ in 0..self.len() {
            if idx.windows(2).all(|w| w[0] <= w[1]) {
                let repeated = idx.windows(2).any(|w| w[0] == w[1]);
                if parity == Parity::Anti && repeated {
                    // Entries with a repeated index vanish; `out` is already zero.
                } else {
                    let base = self.get(&idx);
                    let mut acc = T::zero();
                    for p in &perms {
                        p.arrange(&idx, &mut arranged);
                        let v = self.get(&arranged);
                        let signed = if parity == Parity::Anti && p.sign < 0 { -v } else { v };
                        acc += signed - base;
                    }
                    let value = base + acc.scale(inv_count);
                    for p in &perms {
                        p.arrange(&idx, &mut arranged);
                        let signed = if parity == Parity::Anti && p.sign < 0 { -value } else { value };
                        out.set(&arranged, signed);
                    }
                }
            }
            increment(&mut idx, &self.dims);
        }
        Ok(out)
    }

    /// `|| Y - symmetrize(Y, parity) ||_F`.
    pub fn parity_defect(&self, parity: Parity) -> Result<f64> {
        let s = self.symmetrize(parity)?;
        Ok((self - &s).norm())
    }
}

fn increment(idx: &mut [usize], dims: &[usize]) {
    for (i, &n) in idx.iter_mut().zip(dims) {
        *i += 1;
        if *i < n {
            return;
        }
        *i = 0;
    }
}

impl<T: Scalar> Add for &DenseTensor<T> {
    type Output = DenseTensor<T>;

    fn add(self, rhs: Self) -> DenseTensor<T> {
        assert_eq!(self.dims, rhs.dims, "adding tensors of different shapes");
        DenseTensor {
            dims: self.dims.clone(),
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| *a + *b).collect(),
        }
    }
}

impl<T: Scalar> Sub for &DenseTensor<T> {
    type Output = DenseTensor<T>;

    fn sub(self, rhs: Self) -> DenseTensor<T> {
        assert_eq!(self.dims, rhs.dims, "subtracting tensors of different shapes");
        DenseTensor {
            dims: self.dims.clone(),
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| *a - *b).collect(),
        }
    }
}

/// A permutation of `{0, ..., d-1}` with its sign.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    sigma: Vec<usize>,
    sign: i8,
}

impl Permutation {
    pub fn new(sigma: Vec<usize>) -> Result<Self> {
        let d = sigma.len();
        let mut seen = vec![false; d];
        for &s in &sigma {
            if s >= d || seen[s] {
                return Err(crate::Error::InvalidArgument(format!("{sigma:?} is not a permutation")));
            }
            seen[s] = true;
        }
        let inversions = (0..d)
            .flat_map(|i| ((i + 1)..d).map(move |j| (i, j)))
            .filter(|&(i, j)| sigma[i] > sigma[j])
            .count();
        let sign = if inversions % 2 == 0 { 1 } else { -1 };
        Ok(Self { sigma, sign })
    }

    /// All `d!` permutations in lexicographic order.
    pub fn all(d: usize) -> Vec<Permutation> {
        let mut out = Vec::new();
        let mut current: Vec<usize> = (0..d).collect();
        loop {
            out.push(Permutation::new(current.clone()).expect("valid permutation"));
            // Next lexicographic permutation.
            let Some(i) = (1..d).rev().find(|&i| current[i - 1] < current[i]) else {
                break;
            };
            let j = (i..d).rev().find(|&j| current[j] > current[i - 1]).expect("pivot exists");
            current.swap(i - 1, j);
            current[i..].reverse();
        }
        out
    }

    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    pub fn sigma(&self) -> &[usize] {
        &self.sigma
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    fn arrange(&self, idx: &[usize], out: &mut [usize]) {
        for (o, &s) in out.iter_mut().zip(&self.sigma) {
            *o = idx[s];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::SeededRng;

    fn brute_mode_product(y: &DenseTensor<f64>, mode: usize, m: &DMatrix<f64>) -> DenseTensor<f64> {
        let mut dims = y.dims().to_vec();
        dims[mode] = m.nrows();
        DenseTensor::from_fn(dims, |idx| {
            let mut src = idx.to_vec();
            (0..y.dims()[mode])
                .map(|q| {
                    src[mode] = q;
                    m[(idx[mode], q)] * y.get(&src)
                })
                .sum()
        })
    }

    #[test]
    fn order_two_matricizations() {
        let mut rng = SeededRng::new(10);
        let y = rng.gaussian_tensor::<f64>(&[3, 4]);
        let m0 = y.matricize(0).unwrap();
        let m1 = y.matricize(1).unwrap();
        assert_eq!(m0, DMatrix::from_column_slice(3, 4, y.data()));
        assert_eq!(m1, m0.transpose());
    }

    #[test]
    fn tensorize_inverts_matricize_exactly() {
        let mut rng = SeededRng::new(10);
        for dims in [vec![2, 3, 4], vec![3, 2, 2, 3]] {
            let y = rng.gaussian_tensor::<f64>(&dims);
            for mode in 0..dims.len() {
                let back = DenseTensor::tensorize(&y.matricize(mode).unwrap(), mode, &dims).unwrap();
                assert_eq!(back, y);
            }
        }
    }

    #[test]
    fn matricization_of_mode_product() {
        let mut rng = SeededRng::new(17);
        let c = rng.gaussian_tensor::<f64>(&[3, 3, 3]);
        let u = rng.gaussian_matrix::<f64>(3, 3);
        let lhs = brute_mode_product(&c, 0, &u).matricize(0).unwrap();
        let rhs = &u * c.matricize(0).unwrap();
        assert!((lhs - rhs).norm() < 1e-13);
    }

    #[test]
    fn kronecker_column_order() {
        let mut rng = SeededRng::new(18);
        let c = rng.gaussian_tensor::<f64>(&[2, 3, 2]);
        let u: Vec<DMatrix<f64>> = [4, 5, 3].iter().zip(c.dims()).map(|(&n, &r)| rng.gaussian_matrix(n, r)).collect();
        let mut y = c.clone();
        for (mode, m) in u.iter().enumerate() {
            y = y.mode_product(mode, m).unwrap();
        }
        let kron = u[2].kronecker(&u[1]);
        let expected = &u[0] * c.matricize(0).unwrap() * kron.transpose();
        assert!((y.matricize(0).unwrap() - expected).norm() < 1e-12);
    }

    #[test]
    fn mode_product_matches_brute_force() {
        let mut rng = SeededRng::new(11);
        let y = rng.gaussian_tensor::<f64>(&[4, 4, 4]);
        let m = rng.gaussian_matrix::<f64>(2, 4);
        for mode in 0..3 {
            let fast = y.mode_product(mode, &m).unwrap();
            assert!((&fast - &brute_mode_product(&y, mode, &m)).norm() < 1e-13);
        }
    }

    #[test]
    fn mode_product_identity_and_composition() {
        let mut rng = SeededRng::new(11);
        let y = rng.gaussian_tensor::<f64>(&[4, 4, 4]);
        assert_eq!(y.mode_product(1, &DMatrix::identity(4, 4)).unwrap(), y);
        let v = rng.gaussian_matrix::<f64>(4, 4);
        let w = rng.gaussian_matrix::<f64>(4, 4);
        for mode in 0..3 {
            let a = y.mode_product(mode, &v).unwrap().mode_product(mode, &w).unwrap();
            let b = y.mode_product(mode, &(&w * &v)).unwrap();
            assert!((&a - &b).norm() <= 1e-12 * b.norm());
        }
    }

    #[test]
    fn distinct_modes_commute() {
        let mut rng = SeededRng::new(12);
        let y = rng.gaussian_tensor::<f64>(&[3, 4, 5]);
        let a = rng.gaussian_matrix::<f64>(2, 3);
        let b = rng.gaussian_matrix::<f64>(6, 4);
        let ab = y.mode_product(0, &a).unwrap().mode_product(1, &b).unwrap();
        let ba = y.mode_product(1, &b).unwrap().mode_product(0, &a).unwrap();
        assert!((&ab - &ba).norm() < 1e-12 * ab.norm());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let y = DenseTensor::<f64>::zeros(vec![2, 3]);
        assert!(y.mode_product(0, &DMatrix::zeros(2, 3)).is_err());
        assert!(y.matricize(2).is_err());
        assert!(DenseTensor::tensorize(&DMatrix::<f64>::zeros(2, 2), 0, &[2, 3]).is_err());
        assert!(y.symmetrize(Parity::Symmetric).is_err());
        assert!(DenseTensor::<f64>::from_vec(vec![2, 2], vec![0.0; 3]).is_err());
    }

    #[test]
    fn order_two_symmetrization() {
        let mut rng = SeededRng::new(13);
        let y = rng.gaussian_tensor::<f64>(&[4, 4]);
        let m = y.matricize(0).unwrap();
        let s = y.symmetrize(Parity::Symmetric).unwrap().matricize(0).unwrap();
        let a = y.symmetrize(Parity::Anti).unwrap().matricize(0).unwrap();
        assert!((s - (&m + m.transpose()) * 0.5).norm() < 1e-15);
        assert!((a - (&m - m.transpose()) * 0.5).norm() < 1e-15);
    }

    #[test]
    fn antisymmetrizing_symmetric_gives_zero() {
        let mut rng = SeededRng::new(13);
        let y = rng.gaussian_tensor::<f64>(&[3, 3, 3]).symmetrize(Parity::Symmetric).unwrap();
        assert!(y.symmetrize(Parity::Anti).unwrap().norm() < 1e-15);
    }

    #[test]
    fn symmetrize_is_idempotent_and_exact() {
        let mut rng = SeededRng::new(13);
        let y = rng.gaussian_tensor::<f64>(&[3, 3, 3]);
        for parity in [Parity::Symmetric, Parity::Anti] {
            let s = y.symmetrize(parity).unwrap();
            let ss = s.symmetrize(parity).unwrap();
            assert!((&s - &ss).norm() <= 1e-14 * s.norm().max(1.0));
            assert_eq!(s.parity_defect(parity).unwrap(), 0.0);
        }
    }

    #[test]
    fn symmetrize_matches_explicit_permutation_sum() {
        let mut rng = SeededRng::new(14);
        let y = rng.gaussian_tensor::<f64>(&[3, 3, 3, 3]);
        for parity in [Parity::Symmetric, Parity::Anti] {
            let mut sum = DenseTensor::zeros(y.dims().to_vec());
            for p in Permutation::all(4) {
                let sign = if parity == Parity::Anti { p.sign() as f64 } else { 1.0 };
                sum.axpy(sign / 24.0, &y.permute(&p).unwrap());
            }
            assert!((&sum - &y.symmetrize(parity).unwrap()).norm() < 1e-14 * y.norm());
        }
    }

    #[test]
    fn parity_defect_cases() {
        let mut rng = SeededRng::new(15);
        let y = rng.gaussian_tensor::<f64>(&[3, 3, 3]);
        let sym = y.symmetrize(Parity::Symmetric).unwrap();
        let anti = y.symmetrize(Parity::Anti).unwrap();
        assert_eq!(sym.parity_defect(Parity::Symmetric).unwrap(), 0.0);
        assert!((anti.parity_defect(Parity::Symmetric).unwrap() - anti.norm()).abs() < 1e-14);
        // Orthogonal decomposition: defect^2 + ||P Y||^2 = ||Y||^2.
        for parity in [Parity::Symmetric, Parity::Anti] {
            let defect = y.parity_defect(parity).unwrap();
            let p = y.symmetrize(parity).unwrap().norm();
            assert!((defect * defect + p * p - y.norm().powi(2)).abs() < 1e-12 * y.norm().powi(2));
        }
    }

    #[test]
    fn permutation_signs() {
        let perms = Permutation::all(3);
        assert_eq!(perms.len(), 6);
        assert_eq!(perms.iter().filter(|p| p.sign() < 0).count(), 3);
        assert_eq!(Permutation::new(vec![1, 0, 2]).unwrap().sign(), -1);
        assert_eq!(Permutation::new(vec![1, 2, 0]).unwrap().sign(), 1);
        assert!(Permutation::new(vec![0, 0, 1]).is_err());
    }
}
