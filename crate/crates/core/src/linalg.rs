//! Dense factorizations: thin QR with a fixed sign convention, one-sided
//! Jacobi SVD, Hermitian eigendecomposition and the matrix exponential.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{mismatch, Result};
use crate::Scalar;

/// Thin QR factors `M = Q R` with `Q` of size `m x r` and `R` of size `r x r`.
#[derive(Clone, Debug)]
pub struct QrFactors<T: Scalar> {
    pub q: DMatrix<T>,
    pub r: DMatrix<T>,
}

/// Thin QR factorization.
///
/// The diagonal of `R` is made real and non-negative so the factors are unique
/// for full column rank input. Rank-deficient input is accepted: `Q` still has
/// orthonormal columns and `R` has (near-)zero diagonal entries.
pub fn qr_thin<T: Scalar>(m: &DMatrix<T>) -> Result<QrFactors<T>> {
    let (rows, cols) = m.shape();
    if rows < cols {
        return Err(mismatch("qr_thin", format!("need rows >= cols, got {rows}x{cols}")));
    }
    let qr = m.clone().qr();
    let mut q = qr.q();
    let mut r = qr.r();
    for j in 0..cols {
        let d = r[(j, j)];
        let modulus = d.modulus();
        if modulus > 0.0 {
            let phase = d.unscale(modulus);
            let conj = phase.conjugate();
            q.column_mut(j).apply(|x| *x *= phase);
            r.row_mut(j).apply(|x| *x *= conj);
            r[(j, j)] = T::from_real(modulus);
        }
    }
    Ok(QrFactors { q, r })
}

/// Singular value decomposition `M = U diag(sigma) V^H` with
/// `k = min(m, n)` columns in `U` and `V` and non-increasing `sigma`.
#[derive(Clone, Debug)]
pub struct SvdFactors<T: Scalar> {
    pub u: DMatrix<T>,
    pub sigma: Vec<f64>,
    pub v: DMatrix<T>,
}

impl<T: Scalar> SvdFactors<T> {
    /// Keeps the leading `r` singular triplets.
    pub fn truncated(&self, r: usize) -> SvdFactors<T> {
        let r = r.min(self.sigma.len());
        SvdFactors {
            u: self.u.columns(0, r).into_owned(),
            sigma: self.sigma[..r].to_vec(),
            v: self.v.columns(0, r).into_owned(),
        }
    }

    pub fn assemble(&self) -> DMatrix<T> {
        let mut us = self.u.clone();
        for (j, s) in self.sigma.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        us * self.v.adjoint()
    }
}

const JACOBI_MAX_SWEEPS: usize = 80;

/// One-sided (Hestenes) Jacobi SVD.
pub fn svd<T: Scalar>(m: &DMatrix<T>) -> SvdFactors<T> {
    let (rows, cols) = m.shape();
    if rows < cols {
        let t = svd(&m.adjoint());
        return SvdFactors { u: t.v, sigma: t.sigma, v: t.u };
    }
    let mut a = m.clone();
    let mut v = DMatrix::<T>::identity(cols, cols);
    let eps = f64::EPSILON;

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let (alpha, beta, gamma) = {
                    let cp = a.column(p);
                    let cq = a.column(q);
                    let alpha = cp.norm_squared();
                    let beta = cq.norm_squared();
                    let gamma = cp.dotc(&cq);
                    (alpha, beta, gamma)
                };
                let g = gamma.modulus();
                if g == 0.0 || g <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let conj_phase = gamma.unscale(g).conjugate();
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut a, p, q, conj_phase, c, s);
                rotate_columns(&mut v, p, q, conj_phase, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = (0..cols).map(|j| a.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));

    let smax = norms.iter().cloned().fold(0.0, f64::max);
    let cutoff = smax * 1e-13;
    let mut u = DMatrix::<T>::zeros(rows, cols);
    let mut vs = DMatrix::<T>::zeros(cols, cols);
    let mut sigma = Vec::with_capacity(cols);
    let mut deficient = Vec::new();
    for (k, &j) in order.iter().enumerate() {
        sigma.push(norms[j]);
        vs.set_column(k, &v.column(j));
        if norms[j] > cutoff && norms[j] > 0.0 {
            u.set_column(k, &a.column(j).unscale(norms[j]));
        } else {
            deficient.push(k);
        }
    }
    if !deficient.is_empty() {
        complete_orthonormal(&mut u, &deficient);
    }
    SvdFactors { u, sigma, v: vs }
}

fn rotate_columns<T: Scalar>(m: &mut DMatrix<T>, p: usize, q: usize, conj_phase: T, c: f64, s: f64) {
    let rows = m.nrows();
    let data = m.as_mut_slice();
    let (left, right) = data.split_at_mut(q * rows);
    let col_p = &mut left[p * rows..(p + 1) * rows];
    let col_q = &mut right[..rows];
    for (xp, xq) in col_p.iter_mut().zip(col_q.iter_mut()) {
        let qt = *xq * conj_phase;
        let np = xp.scale(c) - qt.scale(s);
        let nq = xp.scale(s) + qt.scale(c);
        *xp = np;
        *xq = nq;
    }
}

/// Replaces the listed columns of `u` by unit vectors orthogonal to every
/// other column, using modified Gram-Schmidt against the standard basis.
pub fn complete_orthonormal<T: Scalar>(u: &mut DMatrix<T>, columns: &[usize]) {
    let (rows, cols) = u.shape();
    let mut filled: Vec<bool> = (0..cols).map(|j| !columns.contains(&j)).collect();
    let mut candidate = 0usize;
    for &target in columns {
        loop {
            assert!(candidate < rows, "cannot complete an orthonormal basis");
            let mut w = DVector::<T>::zeros(rows);
            w[candidate] = T::one();
            candidate += 1;
            for _ in 0..2 {
                for j in 0..cols {
                    if filled[j] {
                        let proj = u.column(j).dotc(&w);
                        w.axpy(-proj, &u.column(j), T::one());
                    }
                }
            }
            let nrm = w.norm();
            if nrm > 1e-8 {
                u.set_column(target, &w.unscale(nrm));
                filled[target] = true;
                break;
            }
        }
    }
}

/// Best rank-`r` approximation factors.
pub fn truncate<T: Scalar>(m: &DMatrix<T>, r: usize) -> Result<SvdFactors<T>> {
    let k = m.nrows().min(m.ncols());
    if r > k {
        return Err(mismatch("truncate", format!("rank {r} exceeds min dimension {k}")));
    }
    Ok(svd(m).truncated(r))
}

/// Spectral condition number `sigma_max / sigma_min` of a square matrix.
pub fn condition_number<T: Scalar>(m: &DMatrix<T>) -> f64 {
    let s = svd(m);
    let smin = s.sigma.last().copied().unwrap_or(0.0);
    let smax = s.sigma.first().copied().unwrap_or(0.0);
    if smin == 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    }
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted by
/// decreasing modulus.
pub fn hermitian_eigen<T: Scalar>(m: &DMatrix<T>) -> (Vec<f64>, DMatrix<T>) {
    let eig = SymmetricEigen::new(m.clone());
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .abs()
            .total_cmp(&eig.eigenvalues[i].abs())
            .then(i.cmp(&j))
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::<T>::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// `|| Q^H Q - I ||_F`.
pub fn orthonormality_defect<T: Scalar>(q: &DMatrix<T>) -> f64 {
    let g = q.adjoint() * q;
    (g - DMatrix::<T>::identity(q.ncols(), q.ncols())).norm()
}

/// Frobenius inner product `<a, b> = sum conj(a_ij) b_ij`.
pub fn inner<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> T {
    a.iter().zip(b.iter()).fold(T::zero(), |acc, (x, y)| acc + x.conjugate() * *y)
}

fn one_norm<T: Scalar>(m: &DMatrix<T>) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|x| x.modulus()).sum::<f64>())
        .fold(0.0, f64::max)
}

const PADE_DEGREE: usize = 6;

/// Matrix exponential by scaling and squaring with a diagonal
/// Pade(6, 6) approximant on `||A / 2^s||_1 <= 1/2`.
pub fn expm<T: Scalar>(m: &DMatrix<T>) -> DMatrix<T> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "expm needs a square matrix");
    if n == 0 {
        return m.clone();
    }
    let norm = one_norm(m);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let a = m.scale(0.5f64.powi(squarings));

    let mut coeffs = [1.0f64; PADE_DEGREE + 1];
    for k in 1..=PADE_DEGREE {
        let p = PADE_DEGREE as f64;
        let kf = k as f64;
        coeffs[k] = coeffs[k - 1] * (p - kf + 1.0) / (kf * (2.0 * p - kf + 1.0));
    }
    let eye = DMatrix::<T>::identity(n, n);
    let mut num = eye.scale(coeffs[0]);
    let mut den = eye.scale(coeffs[0]);
    let mut power = eye;
    for (k, c) in coeffs.iter().enumerate().skip(1) {
        power = &power * &a;
        num += power.scale(*c);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        den += power.scale(sign * c);
    }
    let mut e = den.lu().solve(&num).expect("Pade denominator is nonsingular for ||A|| <= 1/2");
    for _ in 0..squarings {
        e = &e * &e;
    }
    e
}
