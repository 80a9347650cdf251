//! `X' = A X + X A^T + Q` with the 2-D discrete Laplacian `A`, a rank-5
//! positive semidefinite `Q` and `X(0) = u u^T`.

use dlra_core::lowrank::{matrix_parity_defect, sym_step, MatrixRhs, SubstepSolver, SymLowRankMatrix};
use dlra_core::ode::{rk45_adaptive, OdeProblem};
use dlra_core::random::SeededRng;
use dlra_core::Parity;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{config, Result};
use crate::table::{list, Table};
use crate::{step_count, Preset};

#[derive(Clone, Debug, PartialEq)]
pub struct LyapunovConfig {
    /// Side of the 2-D grid; `N = blocks^2`.
    pub blocks: usize,
    pub ranks: Vec<usize>,
    pub steps: Vec<f64>,
    pub t_final: f64,
    pub seed: u64,
    pub q_rank: usize,
    pub rtol: f64,
    pub atol: f64,
    /// Number of reference singular values reported.
    pub singular_values: usize,
}

impl LyapunovConfig {
    /// Both presets use `N = 100`, `T = 0.1`.
    pub fn preset(_preset: Preset) -> Self {
        Self {
            blocks: 10,
            ranks: vec![2, 4, 6, 8, 10, 12],
            steps: vec![0.01, 0.005, 0.0025, 0.00125],
            t_final: 0.1,
            seed: 1,
            q_rank: 5,
            rtol: 1e-10,
            atol: 1e-14,
            singular_values: 12,
        }
    }

    pub fn size(&self) -> usize {
        self.blocks * self.blocks
    }
}

/// `tridiag(-1, 2, -1) (x) I + I (x) tridiag(-1, 2, -1)`.
pub fn laplacian_2d(m: usize) -> DMatrix<f64> {
    let t = DMatrix::from_fn(m, m, |i, j| match i.abs_diff(j) {
        0 => 2.0,
        1 => -1.0,
        _ => 0.0,
    });
    let id = DMatrix::identity(m, m);
    t.kronecker(&id) + id.kronecker(&t)
}

/// The problem data for one seed.
pub struct LyapunovProblem {
    pub a: DMatrix<f64>,
    pub q: DMatrix<f64>,
    /// Random orthonormal `N x N`; `X(0) = u_1 u_1^T`.
    pub u0: DMatrix<f64>,
}

impl LyapunovProblem {
    pub fn new(cfg: &LyapunovConfig) -> Self {
        let n = cfg.size();
        let mut rng = SeededRng::new(cfg.seed);
        let u0 = rng.orthonormal::<f64>(n, n);
        let q = rng.spd_lowrank(n, cfg.q_rank);
        Self { a: laplacian_2d(cfg.blocks), q, u0 }
    }

    pub fn initial_dense(&self) -> DMatrix<f64> {
        let u = self.u0.column(0);
        &u * u.transpose()
    }

    pub fn rhs(&self) -> MatrixRhs<f64> {
        let a = self.a.clone();
        MatrixRhs::affine(move |x: &DMatrix<f64>| &a * x + x * a.transpose(), Some(self.q.clone())).with_parity()
    }

    /// Dense solution at `t_final` by adaptive Dormand-Prince.
    pub fn reference(&self, t_final: f64, rtol: f64, atol: f64) -> Result<DMatrix<f64>> {
        let n = self.a.nrows();
        let rhs = |_t: f64, x: &DVector<f64>| {
            let xm = DMatrix::from_column_slice(n, n, x.as_slice());
            let dx = &self.a * &xm + &xm * self.a.transpose() + &self.q;
            DVector::from_column_slice(dx.as_slice())
        };
        let x0 = DVector::from_column_slice(self.initial_dense().as_slice());
        let x1 = rk45_adaptive(&OdeProblem::new(rhs, 0.0, t_final, x0), rtol, atol)?;
        Ok(DMatrix::from_column_slice(n, n, x1.as_slice()))
    }

    /// `U0[:, :r] diag(1, 0, ..., 0) U0[:, :r]^T`, exactly `X(0)`.
    pub fn initial(&self, r: usize) -> Result<SymLowRankMatrix<f64>> {
        let mut s = DMatrix::zeros(r, r);
        s[(0, 0)] = 1.0;
        Ok(SymLowRankMatrix::new(self.u0.columns(0, r).into_owned(), s, Parity::Symmetric)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LyapunovCell {
    pub rank: usize,
    pub h: f64,
    pub error: f64,
    /// Largest `||Y_n - Y_n^T||_F` over all iterates.
    pub max_parity_defect: f64,
}

pub struct LyapunovResult {
    pub singular_values: Vec<f64>,
    pub cells: Vec<LyapunovCell>,
}

fn run_cell(problem: &LyapunovProblem, f: &MatrixRhs<f64>, rank: usize, h: f64, t_final: f64, reference: &DMatrix<f64>) -> Result<LyapunovCell> {
    let steps = step_count(h, t_final)?;
    let mut y = problem.initial(rank)?;
    let mut max_parity_defect: f64 = 0.0;
    for k in 0..steps {
        y = sym_step(&y, f, k as f64 * h, (k + 1) as f64 * h, SubstepSolver::exact())?;
        max_parity_defect = max_parity_defect.max(matrix_parity_defect(&y.assemble(), Parity::Symmetric));
    }
    Ok(LyapunovCell { rank, h, error: (y.assemble() - reference).norm(), max_parity_defect })
}

pub fn lyapunov_cells(cfg: &LyapunovConfig) -> Result<LyapunovResult> {
    let n = cfg.size();
    if cfg.ranks.is_empty() || cfg.steps.is_empty() || cfg.ranks.iter().any(|&r| r == 0 || r > n) {
        return Err(config(format!("ranks must lie in 1..={n}")));
    }
    for &h in &cfg.steps {
        step_count(h, cfg.t_final)?;
    }
    let problem = LyapunovProblem::new(cfg);
    let reference = problem.reference(cfg.t_final, cfg.rtol, cfg.atol)?;
    let mut sigma: Vec<f64> = reference.singular_values().iter().copied().collect();
    sigma.sort_by(|a, b| b.total_cmp(a));
    sigma.truncate(cfg.singular_values);
    let f = problem.rhs();
    let jobs: Vec<(usize, f64)> = cfg.ranks.iter().flat_map(|&r| cfg.steps.iter().map(move |&h| (r, h))).collect();
    let cells = jobs
        .par_iter()
        .map(|&(r, h)| run_cell(&problem, &f, r, h, cfg.t_final, &reference))
        .collect::<Result<Vec<_>>>()?;
    Ok(LyapunovResult { singular_values: sigma, cells })
}

pub fn run_lyapunov(cfg: &LyapunovConfig) -> Result<Table> {
    let result = lyapunov_cells(cfg)?;
    let mut table = Table::new("lyapunov", &["series", "rank", "h", "index", "value", "max_parity_defect"]);
    table.set("N", cfg.size());
    table.set("ranks", list(&cfg.ranks));
    table.set("h", list(&cfg.steps));
    table.set("T", cfg.t_final);
    table.set("seed", cfg.seed);
    table.set("q_rank", cfg.q_rank);
    table.set("reference_rtol", cfg.rtol);
    table.set("reference_atol", cfg.atol);
    for (i, s) in result.singular_values.iter().enumerate() {
        table.push(vec!["singular_value".into(), 0usize.into(), f64::NAN.into(), (i + 1).into(), (*s).into(), f64::NAN.into()]);
    }
    for c in &result.cells {
        table.push(vec!["error".into(), c.rank.into(), c.h.into(), 0usize.into(), c.error.into(), c.max_parity_defect.into()]);
    }
    Ok(table)
}
