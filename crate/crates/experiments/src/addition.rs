//! Rank-`r` retraction of `A + B` for a symmetric Tucker tensor `A` and a
//! tangent direction `B`: one step of the symmetric Tucker integrator on
//! `C' = B`, `C(0) = A`, against truncating the full sum.

use std::time::Instant;

use dlra_core::lowrank::SubstepSolver;
use dlra_core::random::SeededRng;
use dlra_core::symtucker::{sym_tucker_step, TensorRhs, TuckerStepOptions};
use dlra_core::tensor::DenseTensor;
use dlra_core::tucker::{sample_tangent, sym_hosvd_truncate, TuckerTensor, DEFAULT_HOOI_SWEEPS};
use dlra_core::Parity;
use rayon::prelude::*;

use crate::error::{config, Result};
use crate::table::{list, Table};
use crate::Preset;

#[derive(Clone, Debug, PartialEq)]
pub struct AdditionConfig {
    pub n: usize,
    pub r: usize,
    pub d: usize,
    pub seed: u64,
    pub parity: Parity,
    /// `||B||_F` values; `A` has unit norm.
    pub norms: Vec<f64>,
    pub hooi_sweeps: usize,
    /// Adds wall-time columns, which makes the output non-reproducible.
    pub timings: bool,
}

impl AdditionConfig {
    pub fn preset(preset: Preset) -> Self {
        let (n, r) = match preset {
            Preset::Desk => (30, 5),
            Preset::Paper => (100, 10),
        };
        Self {
            n,
            r,
            d: 3,
            seed: 1,
            parity: Parity::Symmetric,
            norms: vec![0.0, 1e-1, 5e-2, 1e-2, 5e-3, 1e-3, 5e-4, 1e-4],
            hooi_sweeps: DEFAULT_HOOI_SWEEPS,
            timings: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.d < 2 || self.r == 0 || self.r > self.n {
            return Err(config(format!("need d >= 2 and 1 <= r <= n, got d={} r={} n={}", self.d, self.r, self.n)));
        }
        if self.norms.is_empty() || self.norms.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
            return Err(config("norms must be finite and nonnegative"));
        }
        Ok(())
    }
}

/// Errors of both retractions for one `||B||`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdditionCell {
    pub norm_b: f64,
    pub integrator_error: f64,
    pub retraction_error: f64,
    pub integrator_seconds: f64,
    pub retraction_seconds: f64,
}

fn one_cell(a: &TuckerTensor<f64>, a_dense: &DenseTensor<f64>, b: &DenseTensor<f64>, scale: f64, cfg: &AdditionConfig) -> Result<AdditionCell> {
    let step = b.scaled(scale);
    let mut target = a_dense.clone();
    target.axpy(1.0, &step);

    let clock = Instant::now();
    let (a0, s0) = (a_dense.clone(), step.clone());
    let f = TensorRhs::explicit(
        move |t: f64| {
            let mut y = a0.clone();
            y.axpy(t, &s0);
            y
        },
        move |_t: f64| step.clone(),
    )
    .with_parity();
    let (y1, _) = sym_tucker_step(a, &f, 0.0, 1.0, cfg.parity, &TuckerStepOptions::new(SubstepSolver::exact()))?;
    let integrator_error = (&y1.assemble() - &target).norm();
    let integrator_seconds = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let x = sym_hosvd_truncate(&target, cfg.r, cfg.parity, cfg.hooi_sweeps)?;
    let retraction_error = (&x.assemble() - &target).norm();
    let retraction_seconds = clock.elapsed().as_secs_f64();

    Ok(AdditionCell { norm_b: scale, integrator_error, retraction_error, integrator_seconds, retraction_seconds })
}

pub fn addition_cells(cfg: &AdditionConfig) -> Result<Vec<AdditionCell>> {
    cfg.validate()?;
    let mut rng = SeededRng::new(cfg.seed);
    let a = rng.tucker_symmetric::<f64>(cfg.n, cfg.r, cfg.d, cfg.parity);
    let b = sample_tangent(&a, cfg.parity, &mut rng)?;
    let a_dense = a.assemble();
    cfg.norms.par_iter().map(|&s| one_cell(&a, &a_dense, &b, s, cfg)).collect()
}

pub fn run_addition(cfg: &AdditionConfig) -> Result<Table> {
    let cells = addition_cells(cfg)?;
    let mut header = vec!["norm_b", "integrator_error", "retraction_error"];
    if cfg.timings {
        header.extend(["integrator_seconds", "retraction_seconds"]);
    }
    let mut table = Table::new("tucker-add", &header);
    table.set("n", cfg.n);
    table.set("r", cfg.r);
    table.set("d", cfg.d);
    table.set("seed", cfg.seed);
    table.set("parity", cfg.parity);
    table.set("norm_a", 1.0);
    table.set("norms", list(&cfg.norms));
    table.set("hooi_sweeps", cfg.hooi_sweeps);
    for c in cells {
        let mut row = vec![c.norm_b.into(), c.integrator_error.into(), c.retraction_error.into()];
        if cfg.timings {
            row.extend([c.integrator_seconds.into(), c.retraction_seconds.into()]);
        }
        table.push(row);
    }
    Ok(table)
}
