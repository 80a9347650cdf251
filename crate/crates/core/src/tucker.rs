//! Tucker tensors `Y = C x_0 U_0 x_1 U_1 ... x_{d-1} U_{d-1}` and truncation
//! by (symmetric) higher-order SVD.

use nalgebra::DMatrix;

use crate::error::{mismatch, Error, Result};
use crate::linalg::{orthonormality_defect, svd};
use crate::random::SeededRng;
use crate::tensor::DenseTensor;
use crate::{Parity, Scalar};

const ORTHONORMALITY_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
enum Factors<T: Scalar> {
    /// One basis matrix for every mode.
    Shared(DMatrix<T>),
    PerMode(Vec<DMatrix<T>>),
}

#[derive(Clone, Debug)]
pub struct TuckerTensor<T: Scalar> {
    core: DenseTensor<T>,
    factors: Factors<T>,
}

fn check_factor<T: Scalar>(u: &DMatrix<T>, r: usize, mode: usize) -> Result<()> {
    if u.ncols() != r {
        return Err(mismatch("TuckerTensor", format!("factor {mode} has {} columns, core needs {r}", u.ncols())));
    }
    let defect = orthonormality_defect(u);
    if defect > ORTHONORMALITY_TOL {
        return Err(Error::InvalidArgument(format!("factor {mode} is not orthonormal (defect {defect:e})")));
    }
    Ok(())
}

impl<T: Scalar> TuckerTensor<T> {
    /// Shared-factor Tucker tensor `C x_i U` for all modes.
    pub fn shared(core: DenseTensor<T>, u: DMatrix<T>) -> Result<Self> {
        let r = core.dims().first().copied().unwrap_or(0);
        if core.dims().iter().any(|&ri| ri != r) {
            return Err(mismatch("TuckerTensor::shared", format!("core must be cubic, got {:?}", core.dims())));
        }
        check_factor(&u, r, 0)?;
        Ok(Self { core, factors: Factors::Shared(u) })
    }

    pub fn general(core: DenseTensor<T>, factors: Vec<DMatrix<T>>) -> Result<Self> {
        if factors.len() != core.order() {
            return Err(mismatch("TuckerTensor::general", "one factor per core mode required"));
        }
        for (mode, (u, &r)) in factors.iter().zip(core.dims()).enumerate() {
            check_factor(u, r, mode)?;
        }
        Ok(Self { core, factors: Factors::PerMode(factors) })
    }

    pub fn core(&self) -> &DenseTensor<T> {
        &self.core
    }

    pub fn core_mut(&mut self) -> &mut DenseTensor<T> {
        &mut self.core
    }

    pub fn into_parts(self) -> (DenseTensor<T>, Vec<DMatrix<T>>) {
        let d = self.core.order();
        let factors = match self.factors {
            Factors::Shared(u) => vec![u; d],
            Factors::PerMode(f) => f,
        };
        (self.core, factors)
    }

    pub fn order(&self) -> usize {
        self.core.order()
    }

    pub fn factor(&self, mode: usize) -> &DMatrix<T> {
        match &self.factors {
            Factors::Shared(u) => u,
            Factors::PerMode(f) => &f[mode],
        }
    }

    /// The common basis matrix when all modes share it.
    pub fn shared_factor(&self) -> Option<&DMatrix<T>> {
        match &self.factors {
            Factors::Shared(u) => Some(u),
            Factors::PerMode(_) => None,
        }
    }

    /// Full dimensions `[n_0, ..., n_{d-1}]`.
    pub fn dims(&self) -> Vec<usize> {
        (0..self.order()).map(|m| self.factor(m).nrows()).collect()
    }

    /// Dense tensor `C x_0 U_0 ... x_{d-1} U_{d-1}`.
    pub fn assemble(&self) -> DenseTensor<T> {
        let mut y = self.core.clone();
        for mode in 0..self.order() {
            y = y.mode_product(mode, self.factor(mode)).expect("factor shapes checked at construction");
        }
        y
    }
}

/// Truncated higher-order SVD: mode `i` keeps the leading `ranks[i]` left
/// singular vectors of `Mat_i(A)`.
pub fn hosvd_truncate<T: Scalar>(a: &DenseTensor<T>, ranks: &[usize]) -> Result<TuckerTensor<T>> {
    if ranks.len() != a.order() {
        return Err(mismatch("hosvd_truncate", "one rank per mode required"));
    }
    let mut factors = Vec::with_capacity(a.order());
    for (mode, &r) in ranks.iter().enumerate() {
        let n = a.dims()[mode];
        if r == 0 || r > n {
            return Err(Error::InvalidArgument(format!("rank {r} invalid for mode {mode} of size {n}")));
        }
        factors.push(leading_left_vectors(&a.matricize(mode)?, r));
    }
    let mut core = a.clone();
    for (mode, u) in factors.iter().enumerate() {
        core = core.mode_product(mode, &u.adjoint())?;
    }
    TuckerTensor::general(core, factors)
}

/// Default number of HOOI refinement sweeps in [`sym_hosvd_truncate`].
pub const DEFAULT_HOOI_SWEEPS: usize = 2;

/// Shared-factor truncation of an (anti-)symmetric tensor.
///
/// The basis starts as the leading `r` left singular vectors of `Mat_0(A)`
/// (every matricization has the same column space by symmetry) and is refined
/// by `hooi_sweeps` higher-order orthogonal iterations
/// `U <- leading_r(Mat_0(A x_1 U^H ... x_{d-1} U^H))`. The core `A x_i U^H`
/// is projected to exact parity.
pub fn sym_hosvd_truncate<T: Scalar>(
    a: &DenseTensor<T>,
    r: usize,
    parity: Parity,
    hooi_sweeps: usize,
) -> Result<TuckerTensor<T>> {
    let defect = a.parity_defect(parity)?;
    let norm = a.norm();
    if defect > 1e-8 * norm {
        return Err(Error::ParityMismatch { parity, defect: defect / norm.max(f64::MIN_POSITIVE) });
    }
    let n = a.dims()[0];
    if r == 0 || r > n {
        return Err(Error::InvalidArgument(format!("rank {r} invalid for size {n}")));
    }
    let mut u = leading_left_vectors(&a.matricize(0)?, r);
    for _ in 0..hooi_sweeps {
        let mut b = a.clone();
        let uh = u.adjoint();
        for mode in 1..a.order() {
            b = b.mode_product(mode, &uh)?;
        }
        u = leading_left_vectors(&b.matricize(0)?, r);
    }
    let core = a.multi_mode_product(&u.adjoint())?.symmetrize(parity)?;
    TuckerTensor::shared(core, u)
}

fn leading_left_vectors<T: Scalar>(m: &DMatrix<T>, r: usize) -> DMatrix<T> {
    svd(m).u.columns(0, r).into_owned()
}

/// Random tangent direction at a shared-factor Tucker tensor `A = C x_i U`
/// that keeps the parity:
///
/// ```text
/// B = dC x_i U + sum_l C x_l dU x_{i != l} U,   U^H dU = 0,
/// ```
///
/// with `dC` a Gaussian core projected to `parity` and `dU = (I - U U^H) G`
/// for Gaussian `G`. The result is normalized to unit Frobenius norm.
pub fn sample_tangent<T: Scalar>(a: &TuckerTensor<T>, parity: Parity, rng: &mut SeededRng) -> Result<DenseTensor<T>> {
    let u = a
        .shared_factor()
        .ok_or_else(|| Error::InvalidArgument("tangent sampling needs a shared-factor Tucker tensor".into()))?;
    let (n, r) = u.shape();
    let d = a.order();
    let dc = rng.gaussian_tensor::<T>(&vec![r; d]).symmetrize(parity)?;
    let g = rng.gaussian_matrix::<T>(n, r);
    let du = &g - u * (u.adjoint() * &g);

    let mut b = dc.multi_mode_product(u)?;
    for l in 0..d {
        let mut term = a.core().clone();
        for mode in 0..d {
            let m = if mode == l { &du } else { u };
            term = term.mode_product(mode, m)?;
        }
        b.axpy(T::one(), &term);
    }
    let nrm = b.norm();
    b.scale_mut(T::from_real(1.0 / nrm));
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_outer_product() {
        let core = DenseTensor::from_vec(vec![1, 1, 1], vec![1.0]).unwrap();
        let e = |n: usize, i: usize| {
            let mut m = DMatrix::<f64>::zeros(n, 1);
            m[(i, 0)] = 1.0;
            m
        };
        let t = TuckerTensor::general(core, vec![e(2, 1), e(3, 0), e(2, 1)]).unwrap();
        let y = t.assemble();
        assert_eq!(y.dims(), &[2, 3, 2]);
        assert_eq!(y.get(&[1, 0, 1]), 1.0);
        assert_eq!(y.norm(), 1.0);
    }

    #[test]
    fn identity_factors_assemble_to_core() {
        let mut rng = SeededRng::new(12);
        let core = rng.gaussian_tensor::<f64>(&[3, 3, 3]);
        let t = TuckerTensor::shared(core.clone(), DMatrix::identity(3, 3)).unwrap();
        assert_eq!(t.assemble(), core);
    }

    #[test]
    fn assemble_preserves_norm() {
        let mut rng = SeededRng::new(12);
        let core = rng.gaussian_tensor::<f64>(&[3, 2, 4]);
        let factors = vec![rng.orthonormal(7, 3), rng.orthonormal(5, 2), rng.orthonormal(6, 4)];
        let t = TuckerTensor::general(core.clone(), factors).unwrap();
        assert!((t.assemble().norm() - core.norm()).abs() < 1e-12 * core.norm());
    }

    #[test]
    fn shared_factor_with_parity_core_has_parity() {
        let mut rng = SeededRng::new(19);
        for parity in [Parity::Symmetric, Parity::Anti] {
            let t = rng.tucker_symmetric::<f64>(6, 3, 3, parity);
            let y = t.assemble();
            assert!(y.parity_defect(parity).unwrap() <= 1e-12 * y.norm());
        }
    }

    #[test]
    fn rejects_non_orthonormal_factor() {
        let core = DenseTensor::<f64>::zeros(vec![2, 2]);
        assert!(TuckerTensor::shared(core, DMatrix::from_element(3, 2, 1.0)).is_err());
    }

    #[test]
    fn hosvd_exact_on_tucker_input() {
        let mut rng = SeededRng::new(20);
        let core = rng.gaussian_tensor::<f64>(&[2, 3, 2]);
        let t = TuckerTensor::general(core, vec![rng.orthonormal(5, 2), rng.orthonormal(6, 3), rng.orthonormal(4, 2)]).unwrap();
        let a = t.assemble();
        let h = hosvd_truncate(&a, &[2, 3, 2]).unwrap();
        assert!((&h.assemble() - &a).norm() <= 1e-10 * a.norm());
        let full = hosvd_truncate(&a, &[5, 6, 4]).unwrap();
        assert!((&full.assemble() - &a).norm() <= 1e-12 * a.norm());
    }

    #[test]
    fn sym_hosvd_exact_rank_and_full_rank() {
        let mut rng = SeededRng::new(21);
        for parity in [Parity::Symmetric, Parity::Anti] {
            let t = rng.tucker_symmetric::<f64>(8, 3, 3, parity);
            let a = t.assemble();
            let h = sym_hosvd_truncate(&a, 3, parity, DEFAULT_HOOI_SWEEPS).unwrap();
            assert!((&h.assemble() - &a).norm() <= 1e-10 * a.norm());
            let full = sym_hosvd_truncate(&a, 8, parity, 0).unwrap();
            assert!((&full.assemble() - &a).norm() <= 1e-12 * a.norm());
        }
    }

    #[test]
    fn sym_hosvd_rejects_wrong_parity() {
        let mut rng = SeededRng::new(22);
        let a = rng.gaussian_tensor::<f64>(&[4, 4, 4]);
        assert!(matches!(
            sym_hosvd_truncate(&a, 2, Parity::Symmetric, 0),
            Err(Error::ParityMismatch { .. })
        ));
    }

    #[test]
    fn sym_hosvd_quasi_optimal_against_long_hooi() {
        let mut rng = SeededRng::new(23);
        let a = rng.gaussian_tensor::<f64>(&[20, 20, 20]).symmetrize(Parity::Symmetric).unwrap();
        let err = |t: &TuckerTensor<f64>| (&t.assemble() - &a).norm();
        let ours = err(&sym_hosvd_truncate(&a, 5, Parity::Symmetric, DEFAULT_HOOI_SWEEPS).unwrap());
        let best = err(&sym_hosvd_truncate(&a, 5, Parity::Symmetric, 20).unwrap());
        assert!(ours <= 3f64.sqrt() * best, "{ours} vs {best}");
    }

    #[test]
    fn tangent_sample_keeps_parity_and_is_tangent() {
        let mut rng = SeededRng::new(24);
        let a = rng.tucker_symmetric::<f64>(9, 3, 3, Parity::Symmetric);
        let b = sample_tangent(&a, Parity::Symmetric, &mut rng).unwrap();
        assert!(b.parity_defect(Parity::Symmetric).unwrap() < 1e-13);
        assert!((b.norm() - 1.0).abs() < 1e-14);
        // Moving along a tangent direction leaves the manifold only to second order.
        let dense_a = a.assemble();
        let dist = |eps: f64| {
            let mut c = dense_a.clone();
            c.axpy(eps, &b);
            let t = sym_hosvd_truncate(&c, 3, Parity::Symmetric, 10).unwrap();
            (&t.assemble() - &c).norm()
        };
        let ratio = dist(1e-2) / dist(5e-3);
        assert!((ratio - 4.0).abs() < 0.8, "ratio {ratio}");
    }
}
