//! Dense-oracle checks behind the `selftest` command.

use std::f64::consts::PI;

use dlra_core::fft::{fft, frequencies, grid};
use dlra_core::krylov::arnoldi_apply_expm;
use dlra_core::linalg::{expm, orthonormality_defect, qr_thin};
use dlra_core::lowrank::{sym_step, tangent_project, LowRankMatrix, MatrixRhs, SubstepSolver, SymLowRankMatrix};
use dlra_core::random::SeededRng;
use dlra_core::symtucker::{
    cstep_rhs, kstep_rhs, prepare_kstep, sym_tucker_step, KStepOperator, MultilinearOperator, TensorRhs, TuckerStepOptions,
};
use dlra_core::tensor::DenseTensor;
use dlra_core::tucker::TuckerTensor;
use dlra_core::Parity;
use dlra_quantum::propagate::energy_with;
use dlra_quantum::{build_full_hamiltonian_apply, build_interaction_operator, hamiltonian_operator, GridOperators};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::sync::Arc;

use crate::error::Result;
use crate::table::Table;

/// Tolerance of the structured-vs-dense contractions.
pub const STRUCTURED_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    /// Relative deviation from the oracle.
    pub measured: f64,
    pub tolerance: f64,
}

impl Check {
    fn new(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self { name: name.into(), measured, tolerance }
    }

    pub fn passed(&self) -> bool {
        self.measured <= self.tolerance
    }
}

fn rel_mat(got: &DMatrix<Complex64>, want: &DMatrix<Complex64>) -> f64 {
    (got - want).norm() / want.norm()
}

fn rel_ten(got: &DenseTensor<Complex64>, want: &DenseTensor<Complex64>) -> f64 {
    (got - want).norm() / want.norm()
}

const CASES: [(usize, usize, usize, u64); 2] = [(2, 16, 4, 18), (3, 8, 3, 73)];

/// kstep_rhs, cstep_rhs, energy and the interaction apply against dense
/// computation on the full grid.
pub fn structured_checks() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for (d, k, r, seed) in CASES {
        let tag = format!("d{d}_K{k}_r{r}");
        let mut rng = SeededRng::new(seed);
        let grid = GridOperators::new(k)?;
        let dims = vec![k; d];

        let op = hamiltonian_operator(d, &grid, Some(0.7));
        let f = TensorRhs::autonomous(op.clone()).with_parity();
        let y = rng.tucker_symmetric::<Complex64>(k, r, d, Parity::Anti);
        let (mut state, s0) = prepare_kstep(&y)?;
        // V0 from the dense unfolding Mat_0(Y0) = U0 S0 V0^T.
        let u0 = y.shared_factor().expect("shared factor");
        let s_inv = s0.clone().try_inverse().expect("invertible S0");
        let v0 = (s_inv * u0.adjoint() * y.assemble().matricize(0)?).transpose();
        state.k = rng.gaussian_matrix(k, r);
        let yk = DenseTensor::tensorize(&(&state.k * v0.transpose()), 0, &dims)?;
        let want = op.apply_dense(&yk)?.matricize(0)? * v0.map(|z| z.conj());
        out.push(Check::new(format!("kstep_rhs_{tag}"), rel_mat(&kstep_rhs(&state, &f, 0.0)?, &want), STRUCTURED_TOL));
        let structured = KStepOperator::new(&state, &op)?.apply(&state.k);
        out.push(Check::new(format!("kstep_operator_{tag}"), rel_mat(&structured, &want), STRUCTURED_TOL));

        let field_free = hamiltonian_operator(d, &grid, None);
        let full_rhs = build_full_hamiltonian_apply(d, &grid, None);
        let u1: DMatrix<Complex64> = rng.orthonormal(k, r);
        let c = rng.gaussian_tensor::<Complex64>(&vec![r; d]).symmetrize(Parity::Anti)?;
        let want = field_free.apply_dense(&c.multi_mode_product(&u1)?)?.multi_mode_product(&u1.adjoint())?;
        out.push(Check::new(format!("cstep_rhs_{tag}"), rel_ten(&cstep_rhs(&c, &u1, &full_rhs, 0.0)?, &want), STRUCTURED_TOL));

        // W is multiplication by sum_{l<m} cos(x_l - x_m).
        let w = build_interaction_operator(d, &grid);
        let x = grid.points();
        let dense = y.assemble();
        let pointwise = DenseTensor::from_fn(dims.clone(), |i| {
            let mut s = 0.0;
            for l in 0..d {
                for m in l + 1..d {
                    s += (x[i[l]] - x[i[m]]).cos();
                }
            }
            dense.get(i) * s
        });
        out.push(Check::new(format!("interaction_apply_{tag}"), rel_ten(&w.apply_dense(&dense)?, &pointwise), STRUCTURED_TOL));
        let galerkin = w.projected(u0)?.apply_dense(y.core())?;
        let want = pointwise.multi_mode_product(&u0.adjoint())?;
        out.push(Check::new(format!("interaction_galerkin_{tag}"), rel_ten(&galerkin, &want), STRUCTURED_TOL));

        for (label, omega) in [("energy", None), ("energy_driven", Some(2.5))] {
            let op = hamiltonian_operator(d, &grid, omega);
            let want = (2.0 * PI / k as f64).powi(d as i32) * dense.inner(&op.apply_dense(&dense)?).re;
            let got = energy_with(&y, &op)?;
            out.push(Check::new(format!("{label}_{tag}"), (got - want).abs() / want.abs(), STRUCTURED_TOL));
        }
    }
    Ok(out)
}

/// Factorizations, transforms and the integrators against dense references.
pub fn kernel_checks() -> Result<Vec<Check>> {
    let mut rng = SeededRng::new(5);
    let mut out = Vec::new();

    let a: DMatrix<f64> = rng.gaussian_matrix(60, 8);
    let qr = qr_thin(&a)?;
    out.push(Check::new("qr_orthonormality", orthonormality_defect(&qr.q), 1e-12));
    out.push(Check::new("qr_reconstruction", (&qr.q * &qr.r - &a).norm() / a.norm(), 1e-12));

    let k = 32;
    let v: Vec<Complex64> = (0..k).map(|_| Complex64::new(rng.gaussian(), rng.gaussian())).collect();
    let (xs, ks) = (grid(k), frequencies(k));
    let naive: Vec<Complex64> = ks
        .iter()
        .map(|&w| v.iter().zip(&xs).map(|(vj, &xj)| vj * Complex64::from_polar(1.0, -w * xj)).sum())
        .collect();
    let got = fft(&v)?;
    let err: f64 = got.iter().zip(&naive).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    let nrm: f64 = naive.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    out.push(Check::new("fft_vs_dft", err / nrm, 1e-12));

    let g: DMatrix<f64> = rng.gaussian_matrix(40, 40);
    let m = (&g + g.transpose()) * 0.1;
    let b: DVector<f64> = DVector::from_fn(40, |_, _| rng.gaussian());
    let got = arnoldi_apply_expm(|x: &DVector<f64>| &m * x, &b, 0.5, 40, 1e-13);
    let want = expm(&(&m * 0.5)) * &b;
    out.push(Check::new("arnoldi_vs_expm", (&got - &want).norm() / want.norm(), 1e-10));

    let y = LowRankMatrix::new(rng.orthonormal(20, 3), rng.gaussian_matrix(3, 3), rng.orthonormal(15, 3))?;
    let z: DMatrix<f64> = rng.gaussian_matrix(20, 15);
    let pz = tangent_project(&y, &z)?;
    out.push(Check::new("tangent_projection_idempotent", (tangent_project(&y, &pz)? - &pz).norm() / pz.norm(), 1e-12));

    // d = 2 shared-factor Tucker is the symmetric matrix integrator.
    let n = 9;
    let g: DMatrix<f64> = rng.gaussian_matrix(n, n) * 0.5;
    let sym = Arc::new(&g + g.transpose());
    let g: DMatrix<f64> = rng.gaussian_matrix(3, 3);
    let s0 = &g + g.transpose();
    let u0: DMatrix<f64> = rng.orthonormal(n, 3);
    let y_mat = SymLowRankMatrix::new(u0.clone(), s0.clone(), Parity::Symmetric)?;
    let y_ten = TuckerTensor::shared(DenseTensor::tensorize(&s0, 0, &[3, 3])?, u0)?;
    let mut op = MultilinearOperator::new(2, n);
    op.add_term(1.0, vec![(0, sym.clone())])?;
    op.add_term(1.0, vec![(1, sym.clone())])?;
    let f_ten = TensorRhs::autonomous(op).with_parity();
    let f_mat = MatrixRhs::affine(move |y: &DMatrix<f64>| sym.as_ref() * y + y * sym.as_ref(), None).with_parity();
    let m1 = sym_step(&y_mat, &f_mat, 0.0, 0.1, SubstepSolver::exact())?.assemble();
    let opts = TuckerStepOptions::new(SubstepSolver::exact());
    let t1 = sym_tucker_step(&y_ten, &f_ten, 0.0, 0.1, Parity::Symmetric, &opts)?.0.assemble().matricize(0)?;
    out.push(Check::new("tucker_d2_vs_sym_step", (&t1 - &m1).norm() / m1.norm(), 1e-11));

    // Structured substep right-hand sides against a black-box dense apply.
    let grid8 = GridOperators::new(8)?;
    let op = hamiltonian_operator(3, &grid8, Some(0.3));
    let y = rng.tucker_symmetric::<Complex64>(8, 3, 3, Parity::Anti);
    let structured = TensorRhs::autonomous(op.clone());
    let dense_op = op.clone();
    let black_box = TensorRhs::black_box(move |_t, y: &DenseTensor<Complex64>| dense_op.apply_dense(y).expect("matching shape"));
    let (state, _) = prepare_kstep(&y)?;
    let (a, b) = (kstep_rhs(&state, &structured, 0.0)?, kstep_rhs(&state, &black_box, 0.0)?);
    out.push(Check::new("kstep_structured_vs_black_box", rel_mat(&a, &b), 1e-11));
    let u1 = rng.orthonormal::<Complex64>(8, 3);
    let (a, b) = (cstep_rhs(y.core(), &u1, &structured, 0.0)?, cstep_rhs(y.core(), &u1, &black_box, 0.0)?);
    out.push(Check::new("cstep_structured_vs_black_box", rel_ten(&a, &b), 1e-11));
    Ok(out)
}

pub fn selftest_checks() -> Result<Vec<Check>> {
    let mut out = kernel_checks()?;
    out.extend(structured_checks()?);
    Ok(out)
}

/// One row per check; `failure` is set when any check misses its tolerance.
pub fn run_selftest() -> Result<Table> {
    let checks = selftest_checks()?;
    let mut table = Table::new("selftest", &["check", "measured", "tolerance", "pass"]);
    table.set("structured_tolerance", STRUCTURED_TOL);
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed()).map(|c| c.name.as_str()).collect();
    if !failed.is_empty() {
        table.failure = Some(format!("failed checks: {}", failed.join(" ")));
    }
    for c in &checks {
        table.push(vec![c.name.as_str().into(), c.measured.into(), c.tolerance.into(), c.passed().into()]);
    }
    Ok(table)
}
