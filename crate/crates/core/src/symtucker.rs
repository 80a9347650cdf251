//! The (anti-)symmetry preserving Tucker integrator for shared-factor Tucker
//! tensors `Y = C x_i U`.
//!
//! With `Mat_0(C0)^T = Q0 S0^T` and the implicit `V0 = (U0 x ... x U0) Q0`,
//! one step is
//!
//! ```text
//! K' = Mat_0(F(t, Ten_0(K V0^T))) conj(V0),   K(t0) = U0 S0;   K(t1) = U1 R
//! C' = F(t, C x_i U1) x_i U1^H,               C(t0) = C0 x_i (U1^H U0)
//! ```
//!
//! `V0` is never formed. With `G = Ten_0(Q0^T)` (an `r x ... x r` tensor),
//!
//! ```text
//! Ten_0(K V0^T)          = G x_0 K x_{i>=1} U0
//! Mat_0(Z) conj(V0)      = Mat_0(Z x_{i>=1} U0^H) conj(Q0)
//! ```
//!
//! so for a term `Y x_l M_l` of a [`MultilinearOperator`] the K-step map is
//! `K -> (M_0 K) P` with the `r x r` matrix
//! `P = Mat_0(G x_{i>=1} (U0^H M_i U0)) conj(Q0)`.

use std::collections::HashMap;
use std::sync::Arc;

use log::warn;
use nalgebra::{DMatrix, DVector};

use crate::error::{mismatch, Error, Result};
use crate::krylov::arnoldi_apply_expm;
use crate::linalg::{qr_thin, svd};
use crate::lowrank::{SubstepSolver, PARITY_VIOLATION_TOL};
use crate::ode::{rk4, rk45_adaptive, OdeProblem};
use crate::tensor::DenseTensor;
use crate::tucker::TuckerTensor;
use crate::{Parity, Scalar};

/// One product term `coeff * Y x_{l in modes} M_l`.
#[derive(Clone, Debug)]
pub struct Term<T: Scalar> {
    pub coeff: T,
    /// `(mode, matrix)` pairs with distinct modes, sorted by mode.
    pub factors: Vec<(usize, Arc<DMatrix<T>>)>,
}

/// Linear tensor map `Y -> shift * Y + sum_terms coeff * Y x_l M_l` on
/// tensors of order `d` with all dimensions `n`.
#[derive(Clone, Debug)]
pub struct MultilinearOperator<T: Scalar> {
    order: usize,
    size: usize,
    terms: Vec<Term<T>>,
    shift: T,
}

impl<T: Scalar> MultilinearOperator<T> {
    /// The zero operator.
    pub fn new(order: usize, size: usize) -> Self {
        Self { order, size, terms: Vec::new(), shift: T::zero() }
    }

    pub fn identity(order: usize, size: usize) -> Self {
        Self::new(order, size).with_shift(T::one())
    }

    pub fn with_shift(mut self, shift: T) -> Self {
        self.shift = shift;
        self
    }

    pub fn add_term(&mut self, coeff: T, mut factors: Vec<(usize, Arc<DMatrix<T>>)>) -> Result<()> {
        factors.sort_by_key(|(mode, _)| *mode);
        for (i, (mode, m)) in factors.iter().enumerate() {
            if *mode >= self.order || (i > 0 && factors[i - 1].0 == *mode) {
                return Err(Error::InvalidArgument(format!("invalid or repeated mode {mode}")));
            }
            if m.shape() != (self.size, self.size) {
                return Err(mismatch("MultilinearOperator::add_term", format!("matrix {:?}, expected square {}", m.shape(), self.size)));
            }
        }
        self.terms.push(Term { coeff, factors });
        Ok(())
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn terms(&self) -> &[Term<T>] {
        &self.terms
    }

    pub fn shift(&self) -> T {
        self.shift
    }

    /// `alpha * self`.
    pub fn scaled(&self, alpha: T) -> Self {
        let terms = self.terms.iter().map(|t| Term { coeff: t.coeff * alpha, factors: t.factors.clone() }).collect();
        Self { order: self.order, size: self.size, terms, shift: self.shift * alpha }
    }

    /// The Galerkin operator `Z -> self(Z x_i U) x_i U^H` on `r x ... x r`
    /// tensors: every `M` becomes `U^H M U`. Matrices shared between terms
    /// are projected once.
    pub fn projected(&self, u: &DMatrix<T>) -> Result<Self> {
        if u.nrows() != self.size {
            return Err(mismatch("MultilinearOperator::projected", format!("basis has {} rows, operator size {}", u.nrows(), self.size)));
        }
        let uh = u.adjoint();
        let mut cache: HashMap<*const DMatrix<T>, Arc<DMatrix<T>>> = HashMap::new();
        let terms = self
            .terms
            .iter()
            .map(|t| Term {
                coeff: t.coeff,
                factors: t
                    .factors
                    .iter()
                    .map(|(mode, m)| {
                        let p = cache.entry(Arc::as_ptr(m)).or_insert_with(|| Arc::new(&uh * m.as_ref() * u)).clone();
                        (*mode, p)
                    })
                    .collect(),
            })
            .collect();
        Ok(Self { order: self.order, size: u.ncols(), terms, shift: self.shift })
    }

    fn check_input(&self, y: &DenseTensor<T>) -> Result<()> {
        if y.order() != self.order || y.dims().iter().any(|&n| n != self.size) {
            return Err(mismatch("MultilinearOperator", format!("tensor {:?}, operator {}^{}", y.dims(), self.size, self.order)));
        }
        Ok(())
    }

    pub fn apply_dense(&self, y: &DenseTensor<T>) -> Result<DenseTensor<T>> {
        self.check_input(y)?;
        let mut out = y.scaled(self.shift);
        for term in &self.terms {
            let mut z = y.clone();
            for (mode, m) in &term.factors {
                z = z.mode_product(*mode, m)?;
            }
            out.axpy(term.coeff, &z);
        }
        Ok(out)
    }

    /// `<Y, self(Y)>`, conjugate-linear in the first slot.
    pub fn quadratic_form(&self, y: &DenseTensor<T>) -> Result<T> {
        Ok(y.inner(&self.apply_dense(y)?))
    }
}

/// A linear map on flat vectors, as consumed by [`linear_substep_solver`].
pub trait LinearMap<T: Scalar> {
    fn apply_flat(&self, x: &DVector<T>) -> DVector<T>;
}

impl<T: Scalar> LinearMap<T> for MultilinearOperator<T> {
    fn apply_flat(&self, x: &DVector<T>) -> DVector<T> {
        let y = DenseTensor::from_vec(vec![self.size; self.order], x.as_slice().to_vec()).expect("flat length matches operator");
        DVector::from_vec(self.apply_dense(&y).expect("dimensions checked").into_vec())
    }
}

/// `exp(h * op) y0` by the Arnoldi exponential action.
pub fn linear_substep_solver<T: Scalar>(op: &(impl LinearMap<T> + ?Sized), y0: &DVector<T>, h: f64, krylov_dim: usize, tol: f64) -> DVector<T> {
    arnoldi_apply_expm(|v| op.apply_flat(v), y0, h, krylov_dim, tol)
}

type DenseFn<T> = Arc<dyn Fn(f64, &DenseTensor<T>) -> DenseTensor<T> + Send + Sync>;
type OpFn<T> = Arc<dyn Fn(f64) -> MultilinearOperator<T> + Send + Sync>;
type TensorPath<T> = Arc<dyn Fn(f64) -> DenseTensor<T> + Send + Sync>;

#[derive(Clone)]
enum TensorRhsKind<T: Scalar> {
    BlackBox(DenseFn<T>),
    Structured { op_at: OpFn<T>, autonomous: bool },
    Explicit { path: TensorPath<T>, derivative: TensorPath<T> },
}

/// Right-hand side `F(t, Y)` of a tensor ODE.
#[derive(Clone)]
pub struct TensorRhs<T: Scalar> {
    kind: TensorRhsKind<T>,
    preserves_parity: bool,
}

impl<T: Scalar> TensorRhs<T> {
    /// Dense callback; only usable at small sizes and with Runge-Kutta
    /// substeps.
    pub fn black_box(f: impl Fn(f64, &DenseTensor<T>) -> DenseTensor<T> + Send + Sync + 'static) -> Self {
        Self { kind: TensorRhsKind::BlackBox(Arc::new(f)), preserves_parity: false }
    }

    /// Time-dependent multilinear operator `F(t, Y) = H(t)[Y]`.
    pub fn structured(op_at: impl Fn(f64) -> MultilinearOperator<T> + Send + Sync + 'static) -> Self {
        Self { kind: TensorRhsKind::Structured { op_at: Arc::new(op_at), autonomous: false }, preserves_parity: false }
    }

    /// Constant multilinear operator; exact substeps use Arnoldi.
    pub fn autonomous(op: MultilinearOperator<T>) -> Self {
        let op = Arc::new(op);
        Self {
            kind: TensorRhsKind::Structured { op_at: Arc::new(move |_t| op.as_ref().clone()), autonomous: true },
            preserves_parity: false,
        }
    }

    /// `F(t, Y) = A'(t)`; exact substeps use the increments of `A`.
    pub fn explicit(
        path: impl Fn(f64) -> DenseTensor<T> + Send + Sync + 'static,
        derivative: impl Fn(f64) -> DenseTensor<T> + Send + Sync + 'static,
    ) -> Self {
        Self {
            kind: TensorRhsKind::Explicit { path: Arc::new(path), derivative: Arc::new(derivative) },
            preserves_parity: false,
        }
    }

    /// Declares that `F` maps (anti-)symmetric tensors to (anti-)symmetric
    /// tensors.
    pub fn with_parity(mut self) -> Self {
        self.preserves_parity = true;
        self
    }

    pub fn preserves_parity(&self) -> bool {
        self.preserves_parity
    }

    /// Dense evaluation, for small-scale cross-checks.
    pub fn eval_dense(&self, t: f64, y: &DenseTensor<T>) -> Result<DenseTensor<T>> {
        match &self.kind {
            TensorRhsKind::BlackBox(f) => Ok(f(t, y)),
            TensorRhsKind::Structured { op_at, .. } => op_at(t).apply_dense(y),
            TensorRhsKind::Explicit { derivative, .. } => Ok(derivative(t)),
        }
    }
}

/// Data of the K-substep: `K`, the implicit `V0 = (x U0) Q0`, and
/// `G = Ten_0(Q0^T)`.
#[derive(Clone, Debug)]
pub struct KStepState<T: Scalar> {
    pub k: DMatrix<T>,
    q0: DMatrix<T>,
    u0: DMatrix<T>,
    g: DenseTensor<T>,
}

impl<T: Scalar> KStepState<T> {
    pub fn q0(&self) -> &DMatrix<T> {
        &self.q0
    }

    pub fn u0(&self) -> &DMatrix<T> {
        &self.u0
    }

    pub fn order(&self) -> usize {
        self.g.order()
    }

    /// `Ten_0(K V0^T) = G x_0 K x_{i>=1} U0`.
    pub fn embed(&self, k: &DMatrix<T>) -> Result<DenseTensor<T>> {
        let mut y = self.g.mode_product(0, k)?;
        for mode in 1..self.order() {
            y = y.mode_product(mode, &self.u0)?;
        }
        Ok(y)
    }

    /// `Mat_0(Z) conj(V0) = Mat_0(Z x_{i>=1} U0^H) conj(Q0)`.
    pub fn project(&self, z: &DenseTensor<T>) -> Result<DMatrix<T>> {
        let u0h = self.u0.adjoint();
        let mut w = z.clone();
        for mode in 1..self.order() {
            w = w.mode_product(mode, &u0h)?;
        }
        Ok(w.matricize(0)? * self.q0.map(|x| x.conjugate()))
    }

    /// Dense `V0 = (U0 x ... x U0) Q0`, for tests only.
    pub fn v0_dense(&self) -> DMatrix<T> {
        let mut kron = DMatrix::<T>::identity(1, 1);
        for _ in 1..self.order() {
            kron = self.u0.kronecker(&kron);
        }
        kron * &self.q0
    }
}

/// Splits `Mat_0(C0)^T = Q0 S0^T` and returns the K-step state with
/// `K(t0) = U0 S0`, together with `S0`.
pub fn prepare_kstep<T: Scalar>(y0: &TuckerTensor<T>) -> Result<(KStepState<T>, DMatrix<T>)> {
    let u0 = y0
        .shared_factor()
        .ok_or_else(|| Error::InvalidArgument("the symmetric Tucker integrator needs a shared factor".into()))?
        .clone();
    let d = y0.order();
    if d < 2 {
        return Err(Error::InvalidArgument("tensor order must be at least 2".into()));
    }
    let core = y0.core();
    let r = u0.ncols();
    let qr = qr_thin(&core.matricize(0)?.transpose())?;
    let s0 = qr.r.transpose();
    let sigma = svd(&s0).sigma;
    if sigma[r - 1] < 1e-12 * sigma[0] {
        warn!("core matricization is nearly rank deficient: sigma_min / sigma_max = {:e}", sigma[r - 1] / sigma[0]);
    }
    let g = DenseTensor::tensorize(&qr.q.transpose(), 0, &vec![r; d])?;
    let k = &u0 * &s0;
    Ok((KStepState { k, q0: qr.q, u0, g }, s0))
}

/// The K-step as a linear map `K -> sum coeff (M_0 K) P_term + shift K`.
#[derive(Clone, Debug)]
pub struct KStepOperator<T: Scalar> {
    terms: Vec<(T, Option<Arc<DMatrix<T>>>, DMatrix<T>)>,
    shift: T,
    n: usize,
    r: usize,
}

impl<T: Scalar> KStepOperator<T> {
    pub fn new(state: &KStepState<T>, op: &MultilinearOperator<T>) -> Result<Self> {
        let (n, r) = state.u0.shape();
        if op.order() != state.order() || op.size() != n {
            return Err(mismatch("KStepOperator::new", "operator and state dimensions differ"));
        }
        let projected = op.projected(&state.u0)?;
        let q0_conj = state.q0.map(|x| x.conjugate());
        let mut terms = Vec::with_capacity(op.terms().len());
        for (term, pterm) in op.terms().iter().zip(projected.terms()) {
            let mut m0 = None;
            let mut w = state.g.clone();
            for ((mode, m), (_, b)) in term.factors.iter().zip(&pterm.factors) {
                if *mode == 0 {
                    m0 = Some(m.clone());
                } else {
                    w = w.mode_product(*mode, b)?;
                }
            }
            terms.push((term.coeff, m0, w.matricize(0)? * &q0_conj));
        }
        Ok(Self { terms, shift: op.shift(), n, r })
    }

    pub fn apply(&self, k: &DMatrix<T>) -> DMatrix<T> {
        let mut out = k * self.shift;
        for (coeff, m0, p) in &self.terms {
            let mk = match m0 {
                Some(m) => m.as_ref() * k,
                None => k.clone(),
            };
            out += mk * p * *coeff;
        }
        out
    }
}

impl<T: Scalar> LinearMap<T> for KStepOperator<T> {
    fn apply_flat(&self, x: &DVector<T>) -> DVector<T> {
        let k = DMatrix::from_column_slice(self.n, self.r, x.as_slice());
        DVector::from_column_slice(self.apply(&k).as_slice())
    }
}

/// `K'(t) = Mat_0(F(t, Ten_0(K V0^T))) conj(V0)` at the state's current `K`.
pub fn kstep_rhs<T: Scalar>(state: &KStepState<T>, f: &TensorRhs<T>, t: f64) -> Result<DMatrix<T>> {
    kstep_derivative(state, f, t, &state.k)
}

fn kstep_derivative<T: Scalar>(state: &KStepState<T>, f: &TensorRhs<T>, t: f64, k: &DMatrix<T>) -> Result<DMatrix<T>> {
    match &f.kind {
        TensorRhsKind::BlackBox(g) => state.project(&g(t, &state.embed(k)?)),
        TensorRhsKind::Structured { op_at, .. } => Ok(KStepOperator::new(state, &op_at(t))?.apply(k)),
        TensorRhsKind::Explicit { derivative, .. } => state.project(&derivative(t)),
    }
}

/// `C'(t) = F(t, C x_i U1) x_i U1^H`.
pub fn cstep_rhs<T: Scalar>(c: &DenseTensor<T>, u1: &DMatrix<T>, f: &TensorRhs<T>, t: f64) -> Result<DenseTensor<T>> {
    match &f.kind {
        TensorRhsKind::BlackBox(g) => g(t, &c.multi_mode_product(u1)?).multi_mode_product(&u1.adjoint()),
        TensorRhsKind::Structured { op_at, .. } => op_at(t).projected(u1)?.apply_dense(c),
        TensorRhsKind::Explicit { derivative, .. } => derivative(t).multi_mode_product(&u1.adjoint()),
    }
}

enum ExactForm<'a, T: Scalar> {
    Linear(&'a dyn LinearMap<T>),
    Increment(DVector<T>),
}

fn integrate<T: Scalar>(
    solver: SubstepSolver,
    x0: DVector<T>,
    t0: f64,
    t1: f64,
    rhs: &dyn Fn(f64, &DVector<T>) -> Result<DVector<T>>,
    exact: Option<ExactForm<'_, T>>,
) -> Result<DVector<T>> {
    if t0 == t1 {
        return Ok(x0);
    }
    match solver {
        SubstepSolver::Exact { krylov_dim, tol } => match exact {
            Some(ExactForm::Linear(op)) => Ok(linear_substep_solver(op, &x0, t1 - t0, krylov_dim.min(x0.len()), tol)),
            Some(ExactForm::Increment(dx)) => Ok(x0 + dx),
            None => Err(Error::SubstepUnsupported {
                solver: "exact",
                reason: "only explicit paths and autonomous multilinear operators have closed-form substeps",
            }),
        },
        SubstepSolver::Rk4 { .. } | SubstepSolver::Adaptive { .. } => {
            // The ODE drivers take infallible closures; the first failure is
            // kept and reported after integration.
            let failure = std::cell::RefCell::new(None);
            let f = |t: f64, x: &DVector<T>| match rhs(t, x) {
                Ok(v) => v,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    DVector::from_element(x.len(), T::from_real(f64::NAN))
                }
            };
            let prob = OdeProblem::new(f, t0, t1, x0);
            let out = match solver {
                SubstepSolver::Rk4 { inner_steps } => rk4(&prob, inner_steps),
                SubstepSolver::Adaptive { rtol, atol } => rk45_adaptive(&prob, rtol, atol),
                SubstepSolver::Exact { .. } => unreachable!(),
            };
            if let Some(e) = failure.into_inner() {
                return Err(e);
            }
            out
        }
    }
}

fn flat<T: Scalar>(m: &DMatrix<T>) -> DVector<T> {
    DVector::from_column_slice(m.as_slice())
}

fn solve_kstep<T: Scalar>(state: &KStepState<T>, f: &TensorRhs<T>, t0: f64, t1: f64, solver: SubstepSolver) -> Result<DMatrix<T>> {
    let (n, r) = state.u0.shape();
    let unflat = |x: &DVector<T>| DMatrix::from_column_slice(n, r, x.as_slice());
    let rhs = |t: f64, x: &DVector<T>| kstep_derivative(state, f, t, &unflat(x)).map(|m| flat(&m));
    let x0 = flat(&state.k);
    let out = match (&f.kind, solver) {
        (TensorRhsKind::Structured { op_at, autonomous: true }, SubstepSolver::Exact { .. }) => {
            let op = KStepOperator::new(state, &op_at(t0))?;
            integrate(solver, x0, t0, t1, &rhs, Some(ExactForm::Linear(&op)))?
        }
        (TensorRhsKind::Explicit { path, .. }, SubstepSolver::Exact { .. }) => {
            let dx = flat(&state.project(&(&path(t1) - &path(t0)))?);
            integrate(solver, x0, t0, t1, &rhs, Some(ExactForm::Increment(dx)))?
        }
        _ => integrate(solver, x0, t0, t1, &rhs, None)?,
    };
    Ok(unflat(&out))
}

fn solve_cstep<T: Scalar>(
    c0: DenseTensor<T>,
    u1: &DMatrix<T>,
    f: &TensorRhs<T>,
    t0: f64,
    t1: f64,
    solver: SubstepSolver,
) -> Result<DenseTensor<T>> {
    let dims = c0.dims().to_vec();
    let unflat = |x: &DVector<T>| DenseTensor::from_vec(dims.clone(), x.as_slice().to_vec());
    let rhs = |t: f64, x: &DVector<T>| cstep_rhs(&unflat(x)?, u1, f, t).map(|c| DVector::from_vec(c.into_vec()));
    let x0 = DVector::from_vec(c0.into_vec());
    let out = match (&f.kind, solver) {
        (TensorRhsKind::Structured { op_at, autonomous: true }, SubstepSolver::Exact { .. }) => {
            let op = op_at(t0).projected(u1)?;
            integrate(solver, x0, t0, t1, &rhs, Some(ExactForm::Linear(&op)))?
        }
        (TensorRhsKind::Explicit { path, .. }, SubstepSolver::Exact { .. }) => {
            let dx = (&path(t1) - &path(t0)).multi_mode_product(&u1.adjoint())?;
            integrate(solver, x0, t0, t1, &rhs, Some(ExactForm::Increment(DVector::from_vec(dx.into_vec()))))?
        }
        _ => integrate(solver, x0, t0, t1, &rhs, None)?,
    };
    unflat(&out)
}

/// Options of [`sym_tucker_step`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TuckerStepOptions {
    pub solver: SubstepSolver,
    /// Replace the new core by its exact (anti-)symmetrization.
    pub scrub: bool,
    /// Relative pre-scrub defect of the new core above which the step fails
    /// with [`Error::ParityViolation`]; `None` disables the check and also
    /// the parity check of the input core.
    pub parity_tolerance: Option<f64>,
}

impl TuckerStepOptions {
    pub fn new(solver: SubstepSolver) -> Self {
        Self { solver, scrub: true, parity_tolerance: Some(PARITY_VIOLATION_TOL) }
    }

    /// No scrubbing and no parity checks.
    pub fn unenforced(solver: SubstepSolver) -> Self {
        Self { solver, scrub: false, parity_tolerance: None }
    }
}

/// Diagnostics of one [`sym_tucker_step`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TuckerStepReport {
    /// `||C1 - symmetrize(C1)||_F` before scrubbing.
    pub parity_defect: f64,
    /// `||C1||_F`.
    pub core_norm: f64,
}

/// One step of the (anti-)symmetry preserving Tucker integrator from `t0` to
/// `t1`. The K-step runs with the implicit `V0`; `R` of the QR of `K(t1)` is
/// discarded; the C-step starts from `C0 x_i (U1^H U0)`.
pub fn sym_tucker_step<T: Scalar>(
    y0: &TuckerTensor<T>,
    f: &TensorRhs<T>,
    t0: f64,
    t1: f64,
    parity: Parity,
    opts: &TuckerStepOptions,
) -> Result<(TuckerTensor<T>, TuckerStepReport)> {
    if !f.preserves_parity() {
        return Err(Error::InvalidArgument("sym_tucker_step needs a parity-preserving right-hand side".into()));
    }
    if let Some(tol) = opts.parity_tolerance {
        let defect = y0.core().parity_defect(parity)?;
        if defect > tol * y0.core().norm() {
            return Err(Error::ParityMismatch { parity, defect });
        }
    }
    let (state, _s0) = prepare_kstep(y0)?;
    let k1 = solve_kstep(&state, f, t0, t1, opts.solver)?;
    let u1 = qr_thin(&k1)?.q;
    let overlap = u1.adjoint() * &state.u0;
    let c_init = y0.core().multi_mode_product(&overlap)?;
    let c1 = solve_cstep(c_init, &u1, f, t0, t1, opts.solver)?;
    let core_norm = c1.norm();
    if !core_norm.is_finite() {
        return Err(Error::NonFinite(format!("C-step at t = {t1}")));
    }
    let parity_defect = c1.parity_defect(parity)?;
    if let Some(tol) = opts.parity_tolerance {
        if parity_defect > tol * core_norm {
            return Err(Error::ParityViolation { defect: parity_defect, tolerance: tol * core_norm });
        }
    }
    let c1 = if opts.scrub { c1.symmetrize(parity)? } else { c1 };
    Ok((TuckerTensor::shared(c1, u1)?, TuckerStepReport { parity_defect, core_norm }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::expm;
    use crate::lowrank::{sym_step, MatrixRhs, SymLowRankMatrix};
    use crate::random::SeededRng;
    use num_complex::Complex64;

    fn random_operator<T: Scalar>(rng: &mut SeededRng, d: usize, n: usize, hermitian: bool) -> MultilinearOperator<T> {
        let mut m = || {
            let g = rng.gaussian_matrix::<T>(n, n);
            Arc::new(if hermitian { (&g + g.adjoint()) * T::from_real(0.5) } else { g })
        };
        let (a, b, c) = (m(), m(), m());
        let mut op = MultilinearOperator::new(d, n).with_shift(T::from_real(0.7));
        for l in 0..d {
            op.add_term(T::from_real(0.3), vec![(l, a.clone())]).unwrap();
        }
        for l in 0..d {
            for k in l + 1..d {
                op.add_term(T::from_real(-0.2), vec![(l, b.clone()), (k, b.clone())]).unwrap();
                op.add_term(T::from_real(0.1), vec![(l, c.clone()), (k, c.clone())]).unwrap();
            }
        }
        op
    }

    fn diff<T: Scalar>(a: &DenseTensor<T>, b: &DenseTensor<T>) -> f64 {
        (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn operator_rejects_bad_terms() {
        let mut op = MultilinearOperator::<f64>::new(3, 4);
        let m = Arc::new(DMatrix::identity(4, 4));
        assert!(op.add_term(1.0, vec![(3, m.clone())]).is_err());
        assert!(op.add_term(1.0, vec![(1, m.clone()), (1, m.clone())]).is_err());
        assert!(op.add_term(1.0, vec![(0, Arc::new(DMatrix::identity(3, 3)))]).is_err());
        assert!(op.add_term(1.0, vec![(2, m.clone()), (0, m)]).is_ok());
        assert_eq!(op.terms()[0].factors[0].0, 0);
    }

    #[test]
    fn projected_operator_is_galerkin() {
        let mut rng = SeededRng::new(30);
        let op = random_operator::<f64>(&mut rng, 3, 6, false);
        let u: DMatrix<f64> = rng.orthonormal(6, 2);
        let c = rng.gaussian_tensor::<f64>(&[2, 2, 2]);
        let dense = op.apply_dense(&c.multi_mode_product(&u).unwrap()).unwrap().multi_mode_product(&u.transpose()).unwrap();
        let small = op.projected(&u).unwrap().apply_dense(&c).unwrap();
        assert!(diff(&small, &dense) < 1e-13);
    }

    #[test]
    fn prepare_kstep_matrix_case() {
        let mut rng = SeededRng::new(31);
        let g: DMatrix<f64> = rng.gaussian_matrix(3, 3);
        let c = DenseTensor::tensorize(&(&g + g.transpose()), 0, &[3, 3]).unwrap();
        let u: DMatrix<f64> = rng.orthonormal(7, 3);
        let y = TuckerTensor::shared(c, u.clone()).unwrap();
        let (state, s0) = prepare_kstep(&y).unwrap();
        let rebuilt = &u * &s0 * state.v0_dense().transpose();
        assert!((rebuilt - y.assemble().matricize(0).unwrap()).norm() < 1e-13);
    }

    #[test]
    fn prepare_kstep_identity_core() {
        let c = DenseTensor::from_fn(vec![2, 2, 2], |i| if i[0] == i[1] && i[1] == i[2] { 1.0 } else { 0.0 });
        let y = TuckerTensor::shared(c, DMatrix::<f64>::identity(2, 2)).unwrap();
        let (state, _) = prepare_kstep(&y).unwrap();
        for col in state.q0().column_iter() {
            assert_eq!(col.iter().filter(|x| x.abs() > 1e-15).count(), 1);
        }
        assert!(diff(&state.embed(&state.k).unwrap(), &y.assemble()) < 1e-12);
    }

    #[test]
    fn implicit_v0_matches_kronecker() {
        let mut rng = SeededRng::new(14);
        for parity in [Parity::Symmetric, Parity::Anti] {
            let y = rng.tucker_symmetric::<f64>(20, 4, 3, parity);
            let (state, s0) = prepare_kstep(&y).unwrap();
            let dense = y.assemble();
            let kron = DenseTensor::tensorize(&(state.u0() * &s0 * state.v0_dense().transpose()), 0, &[20, 20, 20]).unwrap();
            assert!(diff(&kron, &dense) < 1e-11);
            assert!(diff(&state.embed(&state.k).unwrap(), &dense) < 1e-11);
            // Projection with the implicit V0 equals Mat_0(Z) conj(V0).
            let z = rng.gaussian_tensor::<f64>(&[20, 20, 20]);
            let p = state.project(&z).unwrap();
            assert!((&p - z.matricize(0).unwrap() * state.v0_dense()).norm() < 1e-11 * p.norm());
        }
    }

    #[test]
    fn kstep_rhs_zero_and_identity() {
        let mut rng = SeededRng::new(32);
        let y = rng.tucker_symmetric::<f64>(8, 3, 3, Parity::Anti);
        let (state, _) = prepare_kstep(&y).unwrap();
        let zero = TensorRhs::autonomous(MultilinearOperator::new(3, 8));
        assert_eq!(kstep_rhs(&state, &zero, 0.0).unwrap().norm(), 0.0);
        let id = TensorRhs::autonomous(MultilinearOperator::identity(3, 8));
        assert!((kstep_rhs(&state, &id, 0.0).unwrap() - &state.k).norm() < 1e-14 * state.k.norm());
        let dense_id = TensorRhs::black_box(|_t, y: &DenseTensor<f64>| y.clone());
        assert!((kstep_rhs(&state, &dense_id, 0.0).unwrap() - &state.k).norm() < 1e-13 * state.k.norm());
    }

    fn structured_vs_black_box<T: Scalar>(seed: u64) {
        let mut rng = SeededRng::new(seed);
        let y = rng.tucker_symmetric::<T>(8, 3, 3, Parity::Symmetric);
        let op = random_operator::<T>(&mut rng, 3, 8, false);
        let structured = TensorRhs::autonomous(op.clone());
        let dense = TensorRhs::black_box(move |_t, y: &DenseTensor<T>| op.apply_dense(y).unwrap());
        let (state, _) = prepare_kstep(&y).unwrap();
        let a = kstep_rhs(&state, &structured, 0.0).unwrap();
        let b = kstep_rhs(&state, &dense, 0.0).unwrap();
        assert!((&a - &b).norm() <= 1e-11 * b.norm());

        let u1 = rng.orthonormal::<T>(8, 3);
        let a = cstep_rhs(y.core(), &u1, &structured, 0.0).unwrap();
        let b = cstep_rhs(y.core(), &u1, &dense, 0.0).unwrap();
        assert!(diff(&a, &b) <= 1e-11);
    }

    #[test]
    fn structured_matches_black_box_real() {
        structured_vs_black_box::<f64>(15);
        structured_vs_black_box::<f64>(16);
    }

    #[test]
    fn structured_matches_black_box_complex() {
        structured_vs_black_box::<Complex64>(15);
    }

    #[test]
    fn cstep_identity_and_parity() {
        let mut rng = SeededRng::new(33);
        let y = rng.tucker_symmetric::<f64>(8, 3, 3, Parity::Anti);
        let u1: DMatrix<f64> = rng.orthonormal(8, 3);
        let id = TensorRhs::autonomous(MultilinearOperator::identity(3, 8));
        assert!(diff(&cstep_rhs(y.core(), &u1, &id, 0.0).unwrap(), y.core()) < 1e-14);
        let sym_op = {
            // Same matrices in every mode preserve parity.
            let m = Arc::new(rng.gaussian_matrix::<f64>(8, 8));
            let mut op = MultilinearOperator::new(3, 8);
            for l in 0..3 {
                op.add_term(1.0, vec![(l, m.clone())]).unwrap();
            }
            op
        };
        let c = cstep_rhs(y.core(), &u1, &TensorRhs::autonomous(sym_op), 0.0).unwrap();
        assert!(c.parity_defect(Parity::Anti).unwrap() <= 1e-12 * c.norm());
    }

    #[test]
    fn linear_solver_cases() {
        let op = MultilinearOperator::<f64>::new(2, 3);
        let y0 = DVector::from_fn(9, |i, _| i as f64);
        assert_eq!(linear_substep_solver(&op, &y0, 0.5, 9, 1e-14), y0);

        let diag = Arc::new(DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -2.0, 0.5])));
        let mut op = MultilinearOperator::<f64>::new(2, 3);
        op.add_term(1.0, vec![(0, diag.clone())]).unwrap();
        op.add_term(1.0, vec![(1, diag.clone())]).unwrap();
        let out = linear_substep_solver(&op, &y0, 0.3, 9, 1e-15);
        for j in 0..3 {
            for i in 0..3 {
                let want = y0[i + 3 * j] * (0.3 * (diag[(i, i)] + diag[(j, j)])).exp();
                assert!((out[i + 3 * j] - want).abs() <= 1e-12 * want.abs().max(1.0));
            }
        }
    }

    #[test]
    fn linear_solver_kstep_matches_dense() {
        let mut rng = SeededRng::new(17);
        let (n, r) = (8, 3);
        let a = Arc::new(rng.gaussian_matrix::<f64>(n, n));
        let b = Arc::new(rng.gaussian_matrix::<f64>(n, n));
        let mut op = MultilinearOperator::new(3, n);
        op.add_term(0.5, vec![(0, a.clone()), (2, b.clone())]).unwrap();
        op.add_term(-0.4, vec![(1, b), (2, a)]).unwrap();
        let y = rng.tucker_symmetric::<f64>(n, r, 3, Parity::Symmetric);
        let (state, _) = prepare_kstep(&y).unwrap();
        let kop = KStepOperator::new(&state, &op).unwrap();
        let dense = DMatrix::from_fn(n * r, n * r, |i, j| {
            let mut e = DVector::zeros(n * r);
            e[j] = 1.0;
            kop.apply_flat(&e)[i]
        });
        let y0 = flat(&state.k);
        let want = expm(&(&dense * 0.2)) * &y0;
        let got = linear_substep_solver(&kop, &y0, 0.2, 40, 1e-14);
        assert!((got - &want).norm() <= 1e-8 * want.norm());
    }

    #[test]
    fn zero_rhs_keeps_tensor() {
        let mut rng = SeededRng::new(34);
        let y = rng.tucker_symmetric::<f64>(10, 3, 3, Parity::Anti);
        let f = TensorRhs::autonomous(MultilinearOperator::new(3, 10)).with_parity();
        for solver in [SubstepSolver::exact(), SubstepSolver::rk4()] {
            let (y1, _) = sym_tucker_step(&y, &f, 0.0, 0.1, Parity::Anti, &TuckerStepOptions::new(solver)).unwrap();
            assert!(diff(&y1.assemble(), &y.assemble()) <= 1e-11);
        }
    }

    #[test]
    fn requires_parity_flag_and_shared_factor() {
        let mut rng = SeededRng::new(35);
        let y = rng.tucker_symmetric::<f64>(6, 2, 3, Parity::Symmetric);
        let f = TensorRhs::autonomous(MultilinearOperator::new(3, 6));
        let opts = TuckerStepOptions::new(SubstepSolver::exact());
        assert!(sym_tucker_step(&y, &f, 0.0, 0.1, Parity::Symmetric, &opts).is_err());
        let f = f.with_parity();
        assert!(matches!(
            sym_tucker_step(&y, &f, 0.0, 0.1, Parity::Anti, &opts),
            Err(Error::ParityMismatch { .. })
        ));
        let black = TensorRhs::black_box(|_t, y: &DenseTensor<f64>| y.clone()).with_parity();
        assert!(matches!(
            sym_tucker_step(&y, &black, 0.0, 0.1, Parity::Symmetric, &opts),
            Err(Error::SubstepUnsupported { .. })
        ));
    }

    #[test]
    fn matrix_case_reproduces_symmetric_matrix_integrator() {
        let mut rng = SeededRng::new(36);
        let n = 9;
        let a: DMatrix<f64> = rng.gaussian_matrix(n, n) * 0.5;
        let a = Arc::new(&a + a.transpose());
        let g: DMatrix<f64> = rng.gaussian_matrix(3, 3);
        let s0 = &g + g.transpose();
        let u0: DMatrix<f64> = rng.orthonormal(n, 3);
        let y_mat = SymLowRankMatrix::new(u0.clone(), s0.clone(), Parity::Symmetric).unwrap();
        let y_ten = TuckerTensor::shared(DenseTensor::tensorize(&s0, 0, &[3, 3]).unwrap(), u0).unwrap();

        let mut op = MultilinearOperator::new(2, n);
        op.add_term(1.0, vec![(0, a.clone())]).unwrap();
        op.add_term(1.0, vec![(1, a.clone())]).unwrap();
        let f_ten = TensorRhs::autonomous(op).with_parity();
        let a2 = a.clone();
        let f_mat = MatrixRhs::affine(move |y: &DMatrix<f64>| a2.as_ref() * y + y * a2.as_ref(), None).with_parity();

        for solver in [SubstepSolver::rk4(), SubstepSolver::exact()] {
            let m1 = sym_step(&y_mat, &f_mat, 0.0, 0.1, solver).unwrap().assemble();
            let (t1, _) = sym_tucker_step(&y_ten, &f_ten, 0.0, 0.1, Parity::Symmetric, &TuckerStepOptions::new(solver)).unwrap();
            let t1 = t1.assemble().matricize(0).unwrap();
            assert!((&t1 - &m1).norm() <= 1e-11 * m1.norm(), "{solver:?}");
        }
    }

    // A(t) = C(t) x_i U(t) with U(t) = exp(t W) U0 and C(t) = C0 + t C1.
    fn tucker_path(seed: u64, n: usize, r: usize, d: usize, parity: Parity) -> TensorRhs<f64> {
        let mut rng = SeededRng::new(seed);
        let w = rng.skew(n) * 0.5;
        let u0: DMatrix<f64> = rng.orthonormal(n, r);
        let c0 = rng.gaussian_tensor::<f64>(&vec![r; d]).symmetrize(parity).unwrap();
        let c1 = rng.gaussian_tensor::<f64>(&vec![r; d]).symmetrize(parity).unwrap();
        let (w2, u2, c02, c12) = (w.clone(), u0.clone(), c0.clone(), c1.clone());
        let path = move |t: f64| {
            let mut c = c02.clone();
            c.axpy(t, &c12);
            c.multi_mode_product(&(expm(&(&w2 * t)) * &u2)).unwrap()
        };
        let derivative = move |t: f64| {
            let u = expm(&(&w * t)) * &u0;
            let wu = &w * &u;
            let mut c = c0.clone();
            c.axpy(t, &c1);
            let mut out = c1.multi_mode_product(&u).unwrap();
            for l in 0..d {
                let mut term = c.clone();
                for mode in 0..d {
                    term = term.mode_product(mode, if mode == l { &wu } else { &u }).unwrap();
                }
                out.axpy(1.0, &term);
            }
            out
        };
        TensorRhs::explicit(path, derivative).with_parity()
    }

    #[test]
    fn exact_on_rank_r_path() {
        for parity in [Parity::Symmetric, Parity::Anti] {
            let f = tucker_path(37, 10, 3, 3, parity);
            let a0 = f_path(&f, 0.0);
            let y0 = crate::tucker::sym_hosvd_truncate(&a0, 3, parity, 0).unwrap();
            let (y1, _) = sym_tucker_step(&y0, &f, 0.0, 0.1, parity, &TuckerStepOptions::new(SubstepSolver::exact())).unwrap();
            let target = f_path(&f, 0.1);
            assert!(diff(&y1.assemble(), &target) <= 1e-10, "{parity}");
        }
    }

    fn f_path(f: &TensorRhs<f64>, t: f64) -> DenseTensor<f64> {
        match &f.kind {
            TensorRhsKind::Explicit { path, .. } => path(t),
            _ => unreachable!(),
        }
    }
}
