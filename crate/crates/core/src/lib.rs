//! Dynamical low-rank approximation of time-dependent matrices and Tucker
//! tensors.
//!
//! The crate provides the dense numerical kernels ([`linalg`], [`ode`],
//! [`fft`], [`krylov`], [`random`]), rank-`r` matrix integrators
//! ([`lowrank`]) including the projector-splitting (KSL) scheme and the
//! (skew-)symmetry preserving scheme, dense tensor utilities ([`tensor`],
//! [`tucker`]) and the (anti-)symmetry preserving Tucker integrator
//! ([`symtucker`]).
//!
//! Storage conventions are fixed crate-wide: matrices are `nalgebra`
//! column-major `DMatrix`, tensors are stored with the first index running
//! fastest, and the columns of a mode-`i` matricization enumerate the
//! remaining indices in increasing mode order, earliest mode fastest.

pub mod error;
pub mod fft;
pub mod krylov;
pub mod linalg;
pub mod lowrank;
pub mod ode;
pub mod random;
pub mod scalar;
pub mod symtucker;
pub mod tensor;
pub mod tucker;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Shared (anti-)symmetry label for matrices and tensors.
///
/// For matrices `Anti` means skew-symmetric.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Parity {
    Symmetric,
    Anti,
}

impl Parity {
    /// `+1` for symmetric, `-1` for anti-symmetric.
    pub fn sign(self) -> f64 {
        match self {
            Parity::Symmetric => 1.0,
            Parity::Anti => -1.0,
        }
    }
}

impl std::fmt::Display for Parity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Parity::Symmetric => write!(f, "symmetric"),
            Parity::Anti => write!(f, "anti"),
        }
    }
}
