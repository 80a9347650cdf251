//! Seeded random inputs.
//!
//! All randomness goes through [`SeededRng`], a ChaCha8 stream generator
//! (`rand_chacha`), which yields identical streams on every platform for a
//! given seed. Gaussian samples use `rand_distr::StandardNormal`. Random
//! structured matrices are built from standard Gaussian entries before any
//! orthogonalization or symmetrization.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::qr_thin;
use crate::tensor::DenseTensor;
use crate::tucker::TuckerTensor;
use crate::{Parity, Scalar};

pub struct SeededRng {
    rng: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn inner(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn gaussian<T: Scalar>(&mut self) -> T {
        T::gaussian(&mut self.rng)
    }

    pub fn gaussian_matrix<T: Scalar>(&mut self, rows: usize, cols: usize) -> DMatrix<T> {
        // Column-major fill order is part of the reproducibility contract.
        DMatrix::from_fn(rows, cols, |_, _| T::gaussian(&mut self.rng))
    }

    /// `n x r` matrix with orthonormal columns (Q factor of a Gaussian matrix).
    pub fn orthonormal<T: Scalar>(&mut self, n: usize, r: usize) -> DMatrix<T> {
        let g = self.gaussian_matrix::<T>(n, r);
        qr_thin(&g).expect("n >= r").q
    }

    /// Real skew-symmetric matrix with standard Gaussian upper triangle;
    /// `W + W^T = 0` holds exactly.
    pub fn skew(&mut self, n: usize) -> DMatrix<f64> {
        let mut w = DMatrix::zeros(n, n);
        for j in 0..n {
            for i in 0..j {
                let g: f64 = self.gaussian();
                w[(i, j)] = g;
                w[(j, i)] = -g;
            }
        }
        w
    }

    /// Real symmetric positive semidefinite matrix `G G^T` of rank `k`.
    pub fn spd_lowrank(&mut self, n: usize, k: usize) -> DMatrix<f64> {
        let g = self.gaussian_matrix::<f64>(n, k);
        let m = &g * g.transpose();
        (&m + m.transpose()) * 0.5
    }

    pub fn gaussian_tensor<T: Scalar>(&mut self, dims: &[usize]) -> DenseTensor<T> {
        let len = dims.iter().product();
        let data = (0..len).map(|_| T::gaussian(&mut self.rng)).collect();
        DenseTensor::from_vec(dims.to_vec(), data).expect("length matches dims")
    }

    /// Shared-factor Tucker tensor with an orthonormal `n x r` basis and a
    /// Gaussian core projected to the requested parity, normalized to unit
    /// Frobenius norm.
    pub fn tucker_symmetric<T: Scalar>(
        &mut self,
        n: usize,
        r: usize,
        d: usize,
        parity: Parity,
    ) -> TuckerTensor<T> {
        let u = self.orthonormal::<T>(n, r);
        let raw = self.gaussian_tensor::<T>(&vec![r; d]);
        let mut core = raw.symmetrize(parity).expect("cubic core");
        let nrm = core.norm();
        core.scale_mut(T::from_real(1.0 / nrm));
        TuckerTensor::shared(core, u).expect("consistent shapes")
    }
}
