//! Fourier collocation on `[-pi, pi)` and the multilinear form of the
//! Hamiltonian.

use std::f64::consts::PI;
use std::sync::Arc;

use dlra_core::fft::{apply_multiplier, frequencies, grid};
use dlra_core::symtucker::{MultilinearOperator, TensorRhs};
use dlra_core::Result;
use nalgebra::DMatrix;
use num_complex::Complex64;

/// One-particle operators on the grid `x_j = 2 pi j / K`,
/// `j = -K/2, ..., K/2-1`.
#[derive(Clone, Debug)]
pub struct GridOperators {
    k: usize,
    x: Vec<f64>,
    freqs: Vec<f64>,
    /// `F^{-1} diag(j^2 / 2) F`.
    pub d: Arc<DMatrix<Complex64>>,
    /// `F^{-1} diag(i j) F`.
    pub deriv: Arc<DMatrix<Complex64>>,
    pub vcos: Arc<DMatrix<Complex64>>,
    pub vsin: Arc<DMatrix<Complex64>>,
}

fn multiplier_matrix(symbol: &[Complex64]) -> Result<DMatrix<Complex64>> {
    let k = symbol.len();
    let mut m = DMatrix::zeros(k, k);
    for j in 0..k {
        let mut e = vec![Complex64::new(0.0, 0.0); k];
        e[j] = Complex64::new(1.0, 0.0);
        let col = apply_multiplier(symbol, &e)?;
        m.column_mut(j).copy_from_slice(&col);
    }
    Ok(m)
}

impl GridOperators {
    pub fn new(k: usize) -> Result<Self> {
        let freqs = frequencies(k);
        let x = grid(k);
        let kinetic: Vec<Complex64> = freqs.iter().map(|&j| Complex64::new(0.5 * j * j, 0.0)).collect();
        let ij: Vec<Complex64> = freqs.iter().map(|&j| Complex64::new(0.0, j)).collect();
        let diag = |f: fn(f64) -> f64| {
            Arc::new(DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                k,
                x.iter().map(|&xj| Complex64::new(f(xj), 0.0)),
            )))
        };
        Ok(Self {
            k,
            d: Arc::new(multiplier_matrix(&kinetic)?),
            deriv: Arc::new(multiplier_matrix(&ij)?),
            vcos: diag(f64::cos),
            vsin: diag(f64::sin),
            x,
            freqs,
        })
    }

    pub fn size(&self) -> usize {
        self.k
    }

    pub fn points(&self) -> &[f64] {
        &self.x
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.freqs
    }

    /// Kinetic symbol `j^2/2 - omega j = (j - omega)^2 / 2 - omega^2 / 2`
    /// in storage order.
    pub fn kinetic_symbol(&self, omega: f64) -> Vec<f64> {
        self.freqs.iter().map(|&j| 0.5 * j * j - omega * j).collect()
    }

    /// Quadrature weight `(2 pi / K)^d` of the discrete `L^2` inner product.
    pub fn weight(&self, d: usize) -> f64 {
        (2.0 * PI / self.k as f64).powi(d as i32)
    }
}

/// `omega(t) = A0 exp(-t^2 / tau^2) sin(Omega t)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LaserPulse {
    pub a0: f64,
    pub omega: f64,
    pub tau: f64,
}

impl LaserPulse {
    pub fn new(a0: f64, omega: f64, tau: f64) -> Self {
        Self { a0, omega, tau }
    }

    /// `A0 = 100`, `Omega = 100`, `tau = 0.2 pi`.
    pub fn reference() -> Self {
        Self::new(100.0, 100.0, 0.2 * PI)
    }

    pub fn field(&self, t: f64) -> f64 {
        self.a0 * (-(t * t) / (self.tau * self.tau)).exp() * (self.omega * t).sin()
    }
}

/// Constant part of the Hamiltonian, `(3d - d^2)/2`, plus `d omega^2 / 2`
/// under a field.
pub fn energy_shift(d: usize, omega: f64) -> f64 {
    let d = d as f64;
    0.5 * (3.0 * d - d * d) + 0.5 * d * omega * omega
}

/// Pair interaction `W[Y] = sum_{l<k} Y x_l Vcos x_k Vcos + Y x_l Vsin x_k Vsin`,
/// which samples `sum_{l<k} cos(x_l - x_k)`.
pub fn build_interaction_operator(d: usize, grid: &GridOperators) -> MultilinearOperator<Complex64> {
    let one = Complex64::new(1.0, 0.0);
    let mut w = MultilinearOperator::new(d, grid.size());
    for l in 0..d {
        for k in l + 1..d {
            w.add_term(one, vec![(l, grid.vcos.clone()), (k, grid.vcos.clone())]).expect("grid operators are K x K");
            w.add_term(one, vec![(l, grid.vsin.clone()), (k, grid.vsin.clone())]).expect("grid operators are K x K");
        }
    }
    w
}

/// `H[Y] = shift Y + sum_l (Y x_l D - Y x_l Vcos) + W[Y]`. Under a field
/// `omega` each mode also gets `i omega Y x_l (d/dx)` and the shift gains
/// `d omega^2 / 2`, from expanding `(1/i d/dx - omega)^2 / 2`.
pub fn hamiltonian_operator(d: usize, grid: &GridOperators, omega: Option<f64>) -> MultilinearOperator<Complex64> {
    let field = omega.unwrap_or(0.0);
    let mut h = build_interaction_operator(d, grid).with_shift(Complex64::new(energy_shift(d, field), 0.0));
    for l in 0..d {
        h.add_term(Complex64::new(1.0, 0.0), vec![(l, grid.d.clone())]).expect("grid operators are K x K");
        h.add_term(Complex64::new(-1.0, 0.0), vec![(l, grid.vcos.clone())]).expect("grid operators are K x K");
        if omega.is_some() {
            h.add_term(Complex64::new(0.0, field), vec![(l, grid.deriv.clone())]).expect("grid operators are K x K");
        }
    }
    h
}

/// The Hamiltonian as a parity-preserving tensor right-hand side.
pub fn build_full_hamiltonian_apply(d: usize, grid: &GridOperators, omega: Option<f64>) -> TensorRhs<Complex64> {
    TensorRhs::autonomous(hamiltonian_operator(d, grid, omega)).with_parity()
}
