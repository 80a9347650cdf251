//! Arnoldi approximation of the action `exp(scale * A) b` of a matrix
//! exponential on a vector.

use nalgebra::{DMatrix, DVector};

use crate::linalg::expm;
use crate::Scalar;

/// Approximates `exp(scale * A) b` from the Krylov space of dimension at most
/// `krylov_dim`, where `apply` computes `v -> A v`.
///
/// Iteration stops early once the standard residual estimate
/// `beta * |scale * h_{m+1,m} * [exp(scale H_m)]_{m,1}|` drops below
/// `tol * ||b||`. An Arnoldi breakdown means the Krylov space is invariant and
/// the returned vector is exact up to round-off.
pub fn arnoldi_apply_expm<T, F>(apply: F, b: &DVector<T>, scale: f64, krylov_dim: usize, tol: f64) -> DVector<T>
where
    T: Scalar,
    F: Fn(&DVector<T>) -> DVector<T>,
{
    let beta = b.norm();
    if beta == 0.0 || scale == 0.0 {
        return b.clone();
    }
    let m = krylov_dim.max(1).min(b.len());
    let mut basis: Vec<DVector<T>> = Vec::with_capacity(m + 1);
    basis.push(b.unscale(beta));
    let mut h = DMatrix::<T>::zeros(m + 1, m);

    for j in 0..m {
        let mut w = apply(&basis[j]);
        let w_norm0 = w.norm();
        // Modified Gram-Schmidt, repeated once for stability.
        for _ in 0..2 {
            for (i, vi) in basis.iter().enumerate() {
                let c = vi.dotc(&w);
                h[(i, j)] += c;
                w.axpy(-c, vi, T::one());
            }
        }
        let hn = w.norm();
        h[(j + 1, j)] = T::from_real(hn);
        let size = j + 1;
        let small = h.view((0, 0), (size, size)).scale(scale);
        let e = expm(&small);
        let breakdown = w_norm0 == 0.0 || hn <= 1e-13 * w_norm0;
        let estimate = beta * (scale * hn).abs() * e[(size - 1, 0)].modulus();
        if breakdown || estimate <= tol * beta || size == m {
            return combine(&basis[..size], &e, beta);
        }
        basis.push(w.unscale(hn));
    }
    unreachable!("loop returns at size == m")
}

fn combine<T: Scalar>(basis: &[DVector<T>], e: &DMatrix<T>, beta: f64) -> DVector<T> {
    let mut out = DVector::<T>::zeros(basis[0].len());
    for (i, vi) in basis.iter().enumerate() {
        out.axpy(e[(i, 0)].scale(beta), vi, T::one());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::SeededRng;
    use num_complex::Complex64;

    #[test]
    fn zero_operator_returns_b() {
        let b = DVector::from_vec(vec![1.0, -2.0, 3.0]);
        let out = arnoldi_apply_expm(|v: &DVector<f64>| v * 0.0, &b, 1.0, 3, 1e-12);
        assert_eq!(out, b);
    }

    #[test]
    fn diagonal_basis_vector() {
        let a = DVector::from_vec(vec![0.3, -1.0, 2.0, 0.7]);
        let mut b = DVector::zeros(4);
        b[2] = 1.0;
        let out = arnoldi_apply_expm(|v: &DVector<f64>| v.component_mul(&a), &b, 0.5, 4, 1e-14);
        assert!((out[2] - (0.5 * 2.0f64).exp()).abs() <= 1e-12);
        assert!(out[0].abs() + out[1].abs() + out[3].abs() <= 1e-14);
    }

    #[test]
    fn random_matches_dense() {
        let mut rng = SeededRng::new(5);
        let a = rng.gaussian_matrix::<f64>(50, 50);
        let b = rng.gaussian_matrix::<f64>(50, 1).column(0).into_owned();
        let out = arnoldi_apply_expm(|v: &DVector<f64>| &a * v, &b, 0.01, 30, 1e-14);
        let dense = expm(&a.scale(0.01)) * &b;
        assert!((out - &dense).norm() <= 1e-8 * dense.norm());
    }

    #[test]
    fn full_dimension_reproduces_dense() {
        let mut rng = SeededRng::new(51);
        let a = rng.gaussian_matrix::<Complex64>(12, 12);
        let b = rng.gaussian_matrix::<Complex64>(12, 1).column(0).into_owned();
        let out = arnoldi_apply_expm(|v: &DVector<Complex64>| &a * v, &b, 0.7, 12, 0.0);
        let dense = expm(&a.scale(0.7)) * &b;
        assert!((out - &dense).norm() <= 1e-10 * dense.norm());
    }
}
