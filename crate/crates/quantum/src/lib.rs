//! Fourier-collocation model of `d` interacting particles on a ring and its
//! low-rank propagation by split-step Fourier plus the (anti-)symmetric
//! Tucker integrator.

pub mod drive;
pub mod grid;
pub mod propagate;

pub use drive::{ground_state_drive, initial_wave, laser_drive, DriveRun, EnergyRecord, GroundStateConfig, LaserConfig};
pub use grid::{build_full_hamiltonian_apply, build_interaction_operator, hamiltonian_operator, GridOperators, LaserPulse};
pub use propagate::{energy, Propagator, StepReport, TimeMode, WaveTensor};
