//! The explicitly given symmetric path `A(t) = e^{tW} e^t D (e^{tW})^T` with
//! `d_j = 2^{-j}`: the symmetric integrator against RK4 on the factored
//! low-rank equations over a rank and step-size sweep.

use dlra_core::linalg::expm;
use dlra_core::lowrank::{factored_rk4, sym_step, LowRankMatrix, MatrixRhs, SubstepSolver, SymLowRankMatrix};
use dlra_core::random::SeededRng;
use dlra_core::Parity;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{config, Result};
use crate::table::{list, Table};
use crate::{step_count, Preset};

#[derive(Clone, Debug, PartialEq)]
pub struct ExplicitConfig {
    pub n: usize,
    pub ranks: Vec<usize>,
    pub steps: Vec<f64>,
    pub t_final: f64,
    pub seed: u64,
}

impl ExplicitConfig {
    /// Both presets use `N = 100`, `T = 1`.
    pub fn preset(_preset: Preset) -> Self {
        Self { n: 100, ranks: vec![4, 8, 16], steps: vec![0.1, 0.05, 0.025, 0.0125], t_final: 1.0, seed: 1 }
    }
}

/// Error threshold above which the factored baseline counts as divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    Symmetric,
    FactoredRk4,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Symmetric => "sym_step",
            Method::FactoredRk4 => "factored_rk4",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExplicitCell {
    pub method: Method,
    pub rank: usize,
    pub h: f64,
    pub steps: usize,
    /// `||Y_N - A(T)||_F`, NaN when the run failed.
    pub error: f64,
    pub diverged: bool,
}

/// `A(t)` and `A'(t) = W A + A W^T + A`.
#[derive(Clone)]
pub struct ExplicitPath {
    w: DMatrix<f64>,
    d: DMatrix<f64>,
}

impl ExplicitPath {
    pub fn new(n: usize, seed: u64) -> Self {
        let w = SeededRng::new(seed).skew(n);
        let d = DMatrix::from_diagonal(&DVector::from_fn(n, |j, _| 0.5f64.powi(j as i32 + 1)));
        Self { w, d }
    }

    pub fn at(&self, t: f64) -> DMatrix<f64> {
        let e = expm(&(&self.w * t));
        &e * &self.d * e.transpose() * t.exp()
    }

    pub fn derivative(&self, t: f64) -> DMatrix<f64> {
        let a = self.at(t);
        &self.w * &a + &a * self.w.transpose() + a
    }

    pub fn rhs(&self) -> MatrixRhs<f64> {
        let (p, q) = (self.clone(), self.clone());
        MatrixRhs::explicit(move |t| p.at(t), move |t| q.derivative(t)).with_parity()
    }

    /// Best rank-`r` approximation of `A(0) = D`.
    pub fn initial(&self, r: usize) -> (DMatrix<f64>, DMatrix<f64>) {
        let n = self.d.nrows();
        (DMatrix::identity(n, r), self.d.view((0, 0), (r, r)).into_owned())
    }
}

fn run_cell(path: &ExplicitPath, method: Method, rank: usize, h: f64, t_final: f64, exact: &DMatrix<f64>) -> Result<ExplicitCell> {
    let steps = step_count(h, t_final)?;
    let f = path.rhs();
    let (u0, s0) = path.initial(rank);
    let y = match method {
        Method::Symmetric => {
            let mut y = SymLowRankMatrix::new(u0, s0, Parity::Symmetric)?;
            let mut failed = false;
            for k in 0..steps {
                match sym_step(&y, &f, k as f64 * h, (k + 1) as f64 * h, SubstepSolver::exact()) {
                    Ok(next) => y = next,
                    Err(e) => {
                        log::warn!("sym_step rank {rank} h {h} failed at step {k}: {e}");
                        failed = true;
                        break;
                    }
                }
            }
            if failed {
                None
            } else {
                Some(y.assemble())
            }
        }
        Method::FactoredRk4 => {
            let y0 = LowRankMatrix::new(u0.clone(), s0, u0)?;
            factored_rk4(&y0, &f, 0.0, t_final, steps).ok()
        }
    };
    let error = y.map_or(f64::NAN, |y| (y - exact).norm());
    let diverged = !(error <= DIVERGENCE_THRESHOLD);
    Ok(ExplicitCell { method, rank, h, steps, error, diverged })
}

pub fn explicit_cells(cfg: &ExplicitConfig) -> Result<Vec<ExplicitCell>> {
    if cfg.ranks.is_empty() || cfg.steps.is_empty() || cfg.ranks.iter().any(|&r| r == 0 || r > cfg.n) {
        return Err(config(format!("ranks must lie in 1..={}", cfg.n)));
    }
    for &h in &cfg.steps {
        step_count(h, cfg.t_final)?;
    }
    let path = ExplicitPath::new(cfg.n, cfg.seed);
    let exact = path.at(cfg.t_final);
    let mut jobs = Vec::new();
    for method in [Method::Symmetric, Method::FactoredRk4] {
        for &rank in &cfg.ranks {
            for &h in &cfg.steps {
                jobs.push((method, rank, h));
            }
        }
    }
    jobs.par_iter().map(|&(m, r, h)| run_cell(&path, m, r, h, cfg.t_final, &exact)).collect()
}

pub fn run_explicit(cfg: &ExplicitConfig) -> Result<Table> {
    let cells = explicit_cells(cfg)?;
    let mut table = Table::new("matrix-explicit", &["method", "rank", "h", "steps", "error", "diverged"]);
    table.set("n", cfg.n);
    table.set("ranks", list(&cfg.ranks));
    table.set("h", list(&cfg.steps));
    table.set("T", cfg.t_final);
    table.set("seed", cfg.seed);
    table.set("divergence_threshold", DIVERGENCE_THRESHOLD);
    for c in cells {
        table.push(vec![
            c.method.label().into(),
            c.rank.into(),
            c.h.into(),
            c.steps.into(),
            c.error.into(),
            c.diverged.into(),
        ]);
    }
    Ok(table)
}
