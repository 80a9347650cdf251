//! Ground-state (bosons, fermions with and without parity enforcement) and
//! laser-driven runs.

use dlra_core::Parity;
use dlra_quantum::{ground_state_drive, laser_drive, DriveRun, GroundStateConfig, LaserConfig, LaserPulse};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::table::{Cell, Table};
use crate::Preset;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GroundRun {
    Boson,
    Fermion,
    FermionUnenforced,
}

impl GroundRun {
    pub const ALL: [GroundRun; 3] = [GroundRun::Boson, GroundRun::Fermion, GroundRun::FermionUnenforced];

    pub fn label(self) -> &'static str {
        match self {
            GroundRun::Boson => "boson",
            GroundRun::Fermion => "fermion",
            GroundRun::FermionUnenforced => "fermion_unenforced",
        }
    }

    fn configure(self, base: &GroundStateConfig) -> GroundStateConfig {
        let mut cfg = *base;
        match self {
            GroundRun::Boson => cfg.parity = Parity::Symmetric,
            GroundRun::Fermion => cfg.parity = Parity::Anti,
            GroundRun::FermionUnenforced => {
                cfg.parity = Parity::Anti;
                cfg.enforce = false;
            }
        }
        cfg
    }
}

/// Grid and stepping shared by the three runs; parity and enforcement are
/// set per run.
pub fn ground_preset(preset: Preset) -> GroundStateConfig {
    match preset {
        Preset::Desk => GroundStateConfig::desk(Parity::Anti),
        Preset::Paper => GroundStateConfig::paper(Parity::Anti),
    }
}

pub fn ground_runs(base: &GroundStateConfig) -> Result<Vec<(GroundRun, DriveRun)>> {
    GroundRun::ALL
        .par_iter()
        .map(|&run| Ok((run, ground_state_drive(&run.configure(base))?)))
        .collect()
}

fn push_failure(table: &mut Table, label: &str, run: &DriveRun, width: usize) {
    if let Some(e) = &run.failure {
        let next = run.records.last().map_or(0, |r| r.step + 1);
        let mut row: Vec<Cell> = vec![format!("{label}:failed").into(), next.into()];
        row.resize(width, f64::NAN.into());
        table.push(row);
        let msg = format!("{label}: {e}");
        table.failure = Some(match table.failure.take() {
            Some(prev) => format!("{prev}; {msg}"),
            None => msg,
        });
    }
}

fn ground_config(table: &mut Table, cfg: &GroundStateConfig) {
    table.set("d", cfg.d);
    table.set("K", cfg.k);
    table.set("r", cfg.r);
    table.set("h", cfg.h);
    table.set("T", cfg.t_final);
    table.set("seed", cfg.seed);
    table.set("scrub_every", cfg.scrub_every);
}

pub fn run_ground_state(base: &GroundStateConfig) -> Result<Table> {
    let runs = ground_runs(base)?;
    let header = ["run", "step", "t", "energy", "core_norm", "parity_defect", "pre_scrub_defect"];
    let mut table = Table::new("ground-state", &header);
    ground_config(&mut table, base);
    for (kind, run) in &runs {
        for r in &run.records {
            table.push(vec![
                kind.label().into(),
                r.step.into(),
                r.t.into(),
                r.energy.into(),
                r.core_norm.into(),
                r.parity_defect.into(),
                r.pre_scrub_defect.into(),
            ]);
        }
        push_failure(&mut table, kind.label(), run, header.len());
    }
    Ok(table)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LaserExperiment {
    /// Imaginary-time run producing the fermionic initial state.
    pub ground: GroundStateConfig,
    pub laser: LaserConfig,
}

impl LaserExperiment {
    pub fn preset(preset: Preset) -> Self {
        Self { ground: ground_preset(preset), laser: LaserConfig::reference() }
    }
}

/// The driven run and the same run with `A0 = 0`, both from the fermionic
/// ground state.
pub fn laser_runs(cfg: &LaserExperiment) -> Result<(DriveRun, DriveRun)> {
    let mut ground_cfg = cfg.ground;
    ground_cfg.parity = Parity::Anti;
    ground_cfg.enforce = true;
    let ground = ground_state_drive(&ground_cfg)?;
    if let Some(e) = ground.failure {
        return Err(Error::Numerical(e));
    }
    let undriven = LaserConfig { pulse: LaserPulse { a0: 0.0, ..cfg.laser.pulse }, ..cfg.laser };
    let (driven, free) = rayon::join(|| laser_drive(&cfg.laser, &ground.state), || laser_drive(&undriven, &ground.state));
    Ok((driven?, free?))
}

pub fn run_laser(cfg: &LaserExperiment) -> Result<Table> {
    let (driven, free) = laser_runs(cfg)?;
    let header = ["run", "step", "t", "omega", "energy", "norm"];
    let mut table = Table::new("laser", &header);
    ground_config(&mut table, &cfg.ground);
    table.set("laser_h", cfg.laser.h);
    table.set("laser_T", cfg.laser.t_final);
    table.set("A0", cfg.laser.pulse.a0);
    table.set("Omega", cfg.laser.pulse.omega);
    table.set("tau", cfg.laser.pulse.tau);
    table.set("energy", "field-free");
    for (label, run, pulse) in [
        ("driven", &driven, cfg.laser.pulse),
        ("undriven", &free, LaserPulse { a0: 0.0, ..cfg.laser.pulse }),
    ] {
        for r in &run.records {
            table.push(vec![
                label.into(),
                r.step.into(),
                r.t.into(),
                pulse.field(r.t).into(),
                r.energy.into(),
                r.core_norm.into(),
            ]);
        }
        push_failure(&mut table, label, run, header.len());
    }
    Ok(table)
}
