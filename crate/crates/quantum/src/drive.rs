//! Imaginary-time ground-state and real-time laser runs.

use std::f64::consts::PI;

use dlra_core::linalg::qr_thin;
use dlra_core::lowrank::SubstepSolver;
use dlra_core::random::SeededRng;
use dlra_core::tensor::DenseTensor;
use dlra_core::tucker::TuckerTensor;
use dlra_core::{Error, Parity, Result};
use log::{debug, warn};
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::grid::{GridOperators, LaserPulse};
use crate::propagate::{energy, Propagator, TimeMode, WaveTensor};

/// Number of steps of size `h` covering `[0, t_final]`; `h` must divide
/// `t_final` to `1e-12` relative.
pub fn step_count(h: f64, t_final: f64) -> Result<usize> {
    if !(h > 0.0 && h.is_finite() && t_final >= 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidArgument(format!("need h > 0 and T >= 0, got h = {h}, T = {t_final}")));
    }
    let n = (t_final / h).round();
    if (n * h - t_final).abs() > 1e-12 * t_final.max(h) {
        return Err(Error::InvalidArgument(format!("h = {h} does not divide T = {t_final}")));
    }
    Ok(n as usize)
}

/// One row of an energy series. Step 0 is the initial state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyRecord {
    pub step: usize,
    pub t: f64,
    pub energy: f64,
    /// `||C||_F` before renormalization (the initial row has the initial norm).
    pub core_norm: f64,
    /// Relative core parity defect after the step.
    pub parity_defect: f64,
    /// Relative core parity defect before scrubbing.
    pub pre_scrub_defect: f64,
}

/// Outcome of a drive. A numerical failure stops the run; the records up
/// to the failure and the last good state are kept.
#[derive(Debug)]
pub struct DriveRun {
    pub records: Vec<EnergyRecord>,
    pub state: WaveTensor,
    pub failure: Option<Error>,
}

impl DriveRun {
    pub fn final_energy(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.energy)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroundStateConfig {
    pub d: usize,
    pub k: usize,
    pub r: usize,
    pub h: f64,
    pub t_final: f64,
    pub seed: u64,
    pub parity: Parity,
    /// Scrub the core and check its parity. Off reproduces the plain
    /// integrator, whose parity is only protected up to round-off.
    pub enforce: bool,
    /// Scrub after every `scrub_every`-th step.
    pub scrub_every: usize,
    pub solver: SubstepSolver,
}

impl GroundStateConfig {
    /// `d = 3`, `K = 32`, `r = 3`, `h = 0.01`, `T = 5`.
    pub fn desk(parity: Parity) -> Self {
        Self {
            d: 3,
            k: 32,
            r: 3,
            h: 0.01,
            t_final: 5.0,
            seed: 1,
            parity,
            enforce: true,
            scrub_every: 1,
            solver: SubstepSolver::exact(),
        }
    }

    /// `d = 3`, `K = 128`, `r = 5`, `h = 0.01`, `T = 40`.
    pub fn paper(parity: Parity) -> Self {
        Self { k: 128, r: 5, t_final: 40.0, ..Self::desk(parity) }
    }

    fn validate(&self) -> Result<usize> {
        if self.d < 2 || self.r == 0 || self.scrub_every == 0 {
            return Err(Error::InvalidArgument("need d >= 2, r >= 1 and scrub_every >= 1".into()));
        }
        if self.r > self.k {
            return Err(Error::InvalidArgument(format!("rank {} exceeds grid size {}", self.r, self.k)));
        }
        step_count(self.h, self.t_final)
    }
}

/// Seeded initial data: `r` Gaussian bumps of width `0.6` at distinct
/// centres, perturbed by `0.05` complex Gaussian noise and orthonormalized,
/// with the core `e_{0,1,...,d-1} + 0.1 G` projected to the parity and
/// normalized. Anti-symmetric data needs `r >= d`; symmetric data with
/// `r < d` starts from `e_{0,...,0}`.
pub fn initial_wave(grid: &GridOperators, d: usize, r: usize, parity: Parity, seed: u64) -> Result<WaveTensor> {
    if parity == Parity::Anti && r < d {
        return Err(Error::InvalidArgument(format!("no anti-symmetric core of order {d} with rank {r}")));
    }
    let k = grid.size();
    let mut rng = SeededRng::new(seed);
    let noise: DMatrix<Complex64> = rng.gaussian_matrix(k, r);
    let bumps = DMatrix::from_fn(k, r, |i, m| {
        let centre = -PI + 2.0 * PI * (m as f64 + 0.5) / r as f64;
        let dx = (grid.points()[i] - centre + PI).rem_euclid(2.0 * PI) - PI;
        Complex64::new((-dx * dx / (2.0 * 0.36)).exp(), 0.0) + noise[(i, m)] * 0.05
    });
    let u = qr_thin(&bumps)?.q;
    let mut core = rng.gaussian_tensor::<Complex64>(&vec![r; d]);
    core.scale_mut(Complex64::new(0.1, 0.0));
    let base: Vec<usize> = if r >= d { (0..d).collect() } else { vec![0; d] };
    let entry = core.get(&base) + 1.0;
    core.set(&base, entry);
    let core: DenseTensor<Complex64> = core.symmetrize(parity)?;
    let mut wave = WaveTensor::new(TuckerTensor::shared(core, u)?, parity)?;
    wave.normalize();
    Ok(wave)
}

fn run(
    prop: &Propagator,
    initial: WaveTensor,
    omega_energy: Option<f64>,
    t0: f64,
    h: f64,
    steps: usize,
    scrub_every: usize,
) -> Result<DriveRun> {
    let e0 = energy(&initial, prop.grid(), omega_energy)?;
    let mut records = vec![EnergyRecord {
        step: 0,
        t: t0,
        energy: e0,
        core_norm: initial.norm(),
        parity_defect: initial.relative_parity_defect()?,
        pre_scrub_defect: initial.relative_parity_defect()?,
    }];
    let mut state = initial;
    for n in 0..steps {
        let t = t0 + n as f64 * h;
        let scrub = (n + 1) % scrub_every == 0;
        let (next, report) = match prop.step(&state, t, h, scrub) {
            Ok(out) => out,
            Err(e) => {
                warn!("step {} at t = {t} failed: {e}", n + 1);
                return Ok(DriveRun { records, state, failure: Some(e) });
            }
        };
        let e = energy(&next, prop.grid(), omega_energy)?;
        if !e.is_finite() {
            warn!("non-finite energy at step {}", n + 1);
            return Ok(DriveRun { records, state, failure: Some(Error::NonFinite(format!("energy at t = {}", t + h))) });
        }
        records.push(EnergyRecord {
            step: n + 1,
            t: t0 + (n + 1) as f64 * h,
            energy: e,
            core_norm: report.core_norm,
            parity_defect: report.parity_defect,
            pre_scrub_defect: report.pre_scrub_defect,
        });
        state = next;
    }
    debug!("drive finished after {steps} steps, energy {}", records.last().map_or(f64::NAN, |r| r.energy));
    Ok(DriveRun { records, state, failure: None })
}

/// Imaginary-time propagation from [`initial_wave`]. Configuration errors
/// are returned as `Err`; numerical failures end the run early and are
/// reported in [`DriveRun::failure`].
pub fn ground_state_drive(cfg: &GroundStateConfig) -> Result<DriveRun> {
    let steps = cfg.validate()?;
    let grid = GridOperators::new(cfg.k)?;
    let initial = initial_wave(&grid, cfg.d, cfg.r, cfg.parity, cfg.seed)?;
    let mut prop = Propagator::new(grid, cfg.d, TimeMode::Imaginary).with_solver(cfg.solver);
    if !cfg.enforce {
        prop = prop.unenforced();
    }
    run(&prop, initial, None, 0.0, cfg.h, steps, cfg.scrub_every)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LaserConfig {
    pub h: f64,
    pub t_final: f64,
    pub pulse: LaserPulse,
    pub solver: SubstepSolver,
}

impl LaserConfig {
    /// `h = 0.005`, `T = 1` and the reference pulse.
    pub fn reference() -> Self {
        Self { h: 0.005, t_final: 1.0, pulse: LaserPulse::reference(), solver: SubstepSolver::exact() }
    }
}

/// Real-time propagation over `[0, T]` from `initial` on its own grid, with
/// the field frozen at each step midpoint. Energies are those of the
/// field-free Hamiltonian.
pub fn laser_drive(cfg: &LaserConfig, initial: &WaveTensor) -> Result<DriveRun> {
    let steps = step_count(cfg.h, cfg.t_final)?;
    let grid = GridOperators::new(initial.grid_size())?;
    let prop = Propagator::new(grid, initial.order(), TimeMode::Real).with_pulse(cfg.pulse).with_solver(cfg.solver);
    run(&prop, initial.clone(), None, 0.0, cfg.h, steps, 1)
}
