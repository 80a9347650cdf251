//! One step of the `(d+2)`-way splitting: core shift, the shared single-particle
//! split-step update of the basis, then the interaction through the
//! (anti-)symmetric Tucker integrator.

use std::f64::consts::PI;

use dlra_core::fft::apply_multiplier;
use dlra_core::linalg::qr_thin;
use dlra_core::lowrank::SubstepSolver;
use dlra_core::symtucker::{sym_tucker_step, MultilinearOperator, TensorRhs, TuckerStepOptions};
use dlra_core::tucker::TuckerTensor;
use dlra_core::{Error, Parity, Result};
use log::warn;
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::grid::{build_interaction_operator, energy_shift, hamiltonian_operator, GridOperators, LaserPulse};

/// Relative core parity defect a [`WaveTensor`] may carry.
pub const WAVE_PARITY_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TimeMode {
    /// `Y' = -H[Y]`.
    Imaginary,
    /// `i Y' = H[Y]`.
    Real,
}

impl TimeMode {
    /// `z` in `Y' = z H[Y]`.
    pub fn rate(self) -> Complex64 {
        match self {
            TimeMode::Imaginary => Complex64::new(-1.0, 0.0),
            TimeMode::Real => Complex64::new(0.0, -1.0),
        }
    }
}

/// Frobenius norm of the core that makes the discrete `L^2` norm
/// `(2 pi / K)^{d/2} ||Y||_F` equal to one.
pub fn normalized_core_norm(k: usize, d: usize) -> f64 {
    (k as f64 / (2.0 * PI)).powf(d as f64 / 2.0)
}

/// A shared-factor Tucker tensor over `C^{K x ... x K}` with an
/// (anti-)symmetric core.
#[derive(Clone, Debug)]
pub struct WaveTensor {
    y: TuckerTensor<Complex64>,
    parity: Parity,
}

impl WaveTensor {
    pub fn new(y: TuckerTensor<Complex64>, parity: Parity) -> Result<Self> {
        if y.shared_factor().is_none() {
            return Err(Error::InvalidArgument("wave tensors need a shared factor".into()));
        }
        let defect = y.core().parity_defect(parity)?;
        if defect > WAVE_PARITY_TOL * y.core().norm() {
            return Err(Error::ParityMismatch { parity, defect });
        }
        Ok(Self { y, parity })
    }

    // The unenforced runs let the defect grow on purpose.
    fn unchecked(y: TuckerTensor<Complex64>, parity: Parity) -> Self {
        Self { y, parity }
    }

    pub fn tucker(&self) -> &TuckerTensor<Complex64> {
        &self.y
    }

    pub fn basis(&self) -> &DMatrix<Complex64> {
        self.y.shared_factor().expect("checked at construction")
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn order(&self) -> usize {
        self.y.order()
    }

    pub fn grid_size(&self) -> usize {
        self.basis().nrows()
    }

    pub fn rank(&self) -> usize {
        self.basis().ncols()
    }

    /// `||Y||_F`, which equals `||C||_F`.
    pub fn norm(&self) -> f64 {
        self.y.core().norm()
    }

    /// `||C - symmetrize(C)|| / ||C||`.
    pub fn relative_parity_defect(&self) -> Result<f64> {
        Ok(self.y.core().parity_defect(self.parity)? / self.norm())
    }

    /// Scales the core to the discrete-`L^2` unit norm.
    pub fn normalize(&mut self) {
        let target = normalized_core_norm(self.grid_size(), self.order());
        let scale = target / self.norm();
        self.y.core_mut().scale_mut(Complex64::new(scale, 0.0));
    }
}

/// The 1-D split-step sandwich `e^{-z h/2 Vcos} F^{-1} e^{z h T_omega} F e^{-z h/2 Vcos}`
/// applied to every column of `u`, with `z` the rate of `mode` and
/// `T_omega = diag(j^2/2 - omega j)`. The result is not re-orthonormalized.
pub fn splitstep_basis_update(
    u: &DMatrix<Complex64>,
    grid: &GridOperators,
    h: f64,
    mode: TimeMode,
    omega_mid: f64,
) -> Result<DMatrix<Complex64>> {
    if u.nrows() != grid.size() {
        return Err(Error::InvalidArgument(format!("basis has {} rows, grid has {}", u.nrows(), grid.size())));
    }
    if h == 0.0 {
        return Ok(u.clone());
    }
    let z = mode.rate();
    let potential: Vec<Complex64> = grid.points().iter().map(|&x| (-z * (0.5 * h * x.cos())).exp()).collect();
    let kinetic: Vec<Complex64> = grid.kinetic_symbol(omega_mid).iter().map(|&s| (z * (h * s)).exp()).collect();
    let mut out = u.clone();
    for mut col in out.column_iter_mut() {
        let v: Vec<Complex64> = col.iter().zip(&potential).map(|(a, p)| a * p).collect();
        let w = apply_multiplier(&kinetic, &v)?;
        for ((c, wi), p) in col.iter_mut().zip(w).zip(&potential) {
            *c = wi * p;
        }
    }
    Ok(out)
}

/// The shift factor `exp(z h s)` with `s = (3d - d^2)/2 + d omega^2/2`.
pub fn core_shift_factor(h: f64, d: usize, mode: TimeMode, omega_mid: f64) -> Complex64 {
    (mode.rate() * (h * energy_shift(d, omega_mid))).exp()
}

/// `(2 pi / K)^d <Y, op[Y]>` evaluated on the core through the Galerkin
/// operator, never on the full grid. Returns the real part; an imaginary
/// part above `1e-8 |E|` is logged.
pub fn energy_with(y: &TuckerTensor<Complex64>, op: &MultilinearOperator<Complex64>) -> Result<f64> {
    let u = y
        .shared_factor()
        .ok_or_else(|| Error::InvalidArgument("energy needs a shared factor".into()))?;
    let weight = (2.0 * PI / u.nrows() as f64).powi(y.order() as i32);
    let e = op.projected(u)?.quadratic_form(y.core())? * weight;
    if e.im.abs() > 1e-8 * e.re.abs().max(f64::MIN_POSITIVE) {
        warn!("energy has imaginary residue {:e} (real part {:e})", e.im, e.re);
    }
    Ok(e.re)
}

/// Energy under the field-free Hamiltonian, or the driven one at field
/// strength `omega`.
pub fn energy(wave: &WaveTensor, grid: &GridOperators, omega: Option<f64>) -> Result<f64> {
    energy_with(wave.tucker(), &hamiltonian_operator(wave.order(), grid, omega))
}

/// Diagnostics of one [`Propagator::step`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepReport {
    /// Relative core parity defect before scrubbing.
    pub pre_scrub_defect: f64,
    /// Relative core parity defect of the returned state.
    pub parity_defect: f64,
    /// `||C||_F` before renormalization.
    pub core_norm: f64,
}

/// Fixed data of a propagation run.
#[derive(Clone, Debug)]
pub struct Propagator {
    grid: GridOperators,
    d: usize,
    mode: TimeMode,
    pulse: Option<LaserPulse>,
    solver: SubstepSolver,
    enforce: bool,
    /// `z W` with the rate `z` of the mode.
    interaction: Option<MultilinearOperator<Complex64>>,
}

impl Propagator {
    /// Interaction on, parity enforced, Arnoldi substeps.
    pub fn new(grid: GridOperators, d: usize, mode: TimeMode) -> Self {
        let w = build_interaction_operator(d, &grid).scaled(mode.rate());
        Self {
            grid,
            d,
            mode,
            pulse: None,
            solver: SubstepSolver::exact(),
            enforce: true,
            interaction: Some(w),
        }
    }

    pub fn with_pulse(mut self, pulse: LaserPulse) -> Self {
        self.pulse = Some(pulse);
        self
    }

    pub fn with_solver(mut self, solver: SubstepSolver) -> Self {
        self.solver = solver;
        self
    }

    /// No scrubbing and no parity checks.
    pub fn unenforced(mut self) -> Self {
        self.enforce = false;
        self
    }

    /// Drops the interaction substep (`W = 0`).
    pub fn without_interaction(mut self) -> Self {
        self.interaction = None;
        self
    }

    pub fn grid(&self) -> &GridOperators {
        &self.grid
    }

    pub fn mode(&self) -> TimeMode {
        self.mode
    }

    pub fn enforces_parity(&self) -> bool {
        self.enforce
    }

    fn field(&self, t: f64) -> f64 {
        self.pulse.map_or(0.0, |p| p.field(t))
    }

    /// Advances `wave` from `t` to `t + h`. With `scrub` the new core is
    /// replaced by its exact (anti-)symmetrization; this is ignored for an
    /// unenforced propagator. In imaginary time the core is renormalized.
    pub fn step(&self, wave: &WaveTensor, t: f64, h: f64, scrub: bool) -> Result<(WaveTensor, StepReport)> {
        if wave.order() != self.d || wave.grid_size() != self.grid.size() {
            return Err(Error::InvalidArgument(format!(
                "wave of order {} on {} points, propagator expects {} on {}",
                wave.order(),
                wave.grid_size(),
                self.d,
                self.grid.size()
            )));
        }
        let omega = self.field(t + 0.5 * h);
        let (core, u) = wave.tucker().clone().into_parts();
        let mut core = core;
        core.scale_mut(core_shift_factor(h, self.d, self.mode, omega));

        // All modes share U, so the d single-particle sweeps are one basis
        // update; R goes into the core.
        let moved = splitstep_basis_update(&u[0], &self.grid, h, self.mode, omega)?;
        let qr = qr_thin(&moved)?;
        let core = core.multi_mode_product(&qr.r)?;
        let x0 = TuckerTensor::shared(core, qr.q)?;

        let (y1, pre_scrub_defect) = match &self.interaction {
            Some(w) => {
                let f = TensorRhs::autonomous(w.clone()).with_parity();
                let opts = if self.enforce {
                    TuckerStepOptions { solver: self.solver, scrub, parity_tolerance: Some(WAVE_PARITY_TOL) }
                } else {
                    TuckerStepOptions::unenforced(self.solver)
                };
                let (y1, report) = sym_tucker_step(&x0, &f, t, t + h, wave.parity(), &opts)?;
                (y1, report.parity_defect / report.core_norm)
            }
            None => {
                let defect = x0.core().parity_defect(wave.parity())? / x0.core().norm();
                if self.enforce && scrub {
                    let (c, u) = x0.into_parts();
                    (TuckerTensor::shared(c.symmetrize(wave.parity())?, u.into_iter().next().expect("one factor"))?, defect)
                } else {
                    (x0, defect)
                }
            }
        };
        let core_norm = y1.core().norm();
        if !core_norm.is_finite() || core_norm == 0.0 {
            return Err(Error::NonFinite(format!("core norm {core_norm} at t = {}", t + h)));
        }
        let mut next = WaveTensor::unchecked(y1, wave.parity());
        if self.mode == TimeMode::Imaginary {
            next.normalize();
        }
        let parity_defect = next.relative_parity_defect()?;
        Ok((next, StepReport { pre_scrub_defect, parity_defect, core_norm }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use dlra_core::random::SeededRng;

    #[test]
    fn zero_step_keeps_basis() {
        let g = GridOperators::new(16).unwrap();
        let u: DMatrix<Complex64> = SeededRng::new(60).orthonormal(16, 3);
        for mode in [TimeMode::Imaginary, TimeMode::Real] {
            assert_eq!(splitstep_basis_update(&u, &g, 0.0, mode, 0.0).unwrap(), u);
        }
    }

    #[test]
    fn real_time_sandwich_is_unitary() {
        let g = GridOperators::new(32).unwrap();
        let u: DMatrix<Complex64> = SeededRng::new(61).orthonormal(32, 4);
        let v = splitstep_basis_update(&u, &g, 0.01, TimeMode::Real, 0.0).unwrap();
        for (a, b) in u.column_iter().zip(v.column_iter()) {
            assert!((a.norm() - b.norm()).abs() <= 1e-10);
        }
        assert!((v.adjoint() * &v - DMatrix::identity(4, 4)).norm() <= 1e-12);
    }

    #[test]
    fn shift_factors() {
        assert_eq!(core_shift_factor(0.1, 3, TimeMode::Imaginary, 0.0), Complex64::new(1.0, 0.0));
        assert!((core_shift_factor(0.1, 2, TimeMode::Imaginary, 0.0) - Complex64::new((-0.1f64).exp(), 0.0)).norm() < 1e-15);
        assert!((core_shift_factor(0.1, 2, TimeMode::Real, 0.0).norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn normalization_target() {
        let k = 32;
        let target = normalized_core_norm(k, 3);
        assert!(((2.0 * PI / k as f64).powi(3) * target * target - 1.0).abs() < 1e-12);
    }
}
