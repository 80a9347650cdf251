//! Rank-`r` matrices `Y = U S V^H`, the tangent-space projection, the
//! projector-splitting (KSL) integrator and the (skew-)symmetry preserving
//! integrator for `Y = U S U^H`.
//!
//! For complex scalars "symmetric" and "skew" mean Hermitian and
//! skew-Hermitian; every transpose below is a conjugate transpose.
//!
//! Every substep of both integrators is a small linear-in-the-unknown ODE
//! of the form `x' = P(F(t, E(x)))`, where `E` embeds the unknown factor into a
//! full matrix and `P` projects back. [`SubstepSolver`] decides how these are
//! integrated; see [`MatrixRhs`] for which right-hand sides admit exact
//! solves.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{mismatch, Error, Result};
use crate::krylov::arnoldi_apply_expm;
use crate::linalg::{condition_number, hermitian_eigen, orthonormality_defect, qr_thin, svd};
use crate::ode::{rk4, rk45_adaptive, OdeProblem};
use crate::{Parity, Scalar};

const ORTHONORMALITY_TOL: f64 = 1e-10;
const PARITY_INPUT_TOL: f64 = 1e-12;
/// Pre-scrub parity defect of `S_1`, relative to `||S_1||`, above which
/// [`sym_step`] reports a parity-violating right-hand side.
pub const PARITY_VIOLATION_TOL: f64 = 1e-6;
/// Condition number of `S` above which [`dlra_factor_rhs`] refuses to invert.
pub const MAX_FACTOR_CONDITION: f64 = 1e14;

fn check_orthonormal<T: Scalar>(m: &DMatrix<T>, name: &str) -> Result<()> {
    let defect = orthonormality_defect(m);
    if defect > ORTHONORMALITY_TOL {
        return Err(Error::InvalidArgument(format!("{name} is not orthonormal (defect {defect:e})")));
    }
    Ok(())
}

/// General rank-`r` matrix `Y = U S V^H` with orthonormal `U` (m x r) and
/// `V` (n x r).
#[derive(Clone, Debug)]
pub struct LowRankMatrix<T: Scalar> {
    u: DMatrix<T>,
    s: DMatrix<T>,
    v: DMatrix<T>,
}

impl<T: Scalar> LowRankMatrix<T> {
    pub fn new(u: DMatrix<T>, s: DMatrix<T>, v: DMatrix<T>) -> Result<Self> {
        let r = s.nrows();
        if s.ncols() != r || u.ncols() != r || v.ncols() != r {
            return Err(mismatch(
                "LowRankMatrix::new",
                format!("U {:?}, S {:?}, V {:?}", u.shape(), s.shape(), v.shape()),
            ));
        }
        check_orthonormal(&u, "U")?;
        check_orthonormal(&v, "V")?;
        Ok(Self { u, s, v })
    }

    /// Best rank-`r` approximation of a dense matrix by truncated SVD.
    pub fn from_dense(a: &DMatrix<T>, r: usize) -> Result<Self> {
        let f = crate::linalg::truncate(a, r)?;
        let s = DMatrix::from_diagonal(&DVector::from_iterator(r, f.sigma.iter().map(|&x| T::from_real(x))));
        Self::new(f.u, s, f.v)
    }

    pub fn u(&self) -> &DMatrix<T> {
        &self.u
    }

    pub fn s(&self) -> &DMatrix<T> {
        &self.s
    }

    pub fn v(&self) -> &DMatrix<T> {
        &self.v
    }

    pub fn rank(&self) -> usize {
        self.s.nrows()
    }

    pub fn assemble(&self) -> DMatrix<T> {
        &self.u * &self.s * self.v.adjoint()
    }
}

/// (Skew-)symmetric rank-`r` matrix `Y = U S U^H` with `S = +-S^H`.
#[derive(Clone, Debug)]
pub struct SymLowRankMatrix<T: Scalar> {
    u: DMatrix<T>,
    s: DMatrix<T>,
    parity: Parity,
}

/// Exact projection of a square matrix onto the given parity,
/// `(S + S^H) / 2` or `(S - S^H) / 2`.
pub fn scrub_parity<T: Scalar>(s: &DMatrix<T>, parity: Parity) -> DMatrix<T> {
    let sh = s.adjoint();
    let half = T::from_real(0.5);
    match parity {
        Parity::Symmetric => (s + sh) * half,
        Parity::Anti => (s - sh) * half,
    }
}

/// `||S -+ S^H||_F`: zero exactly when `S` has the parity.
pub fn matrix_parity_defect<T: Scalar>(s: &DMatrix<T>, parity: Parity) -> f64 {
    match parity {
        Parity::Symmetric => (s - s.adjoint()).norm(),
        Parity::Anti => (s + s.adjoint()).norm(),
    }
}

impl<T: Scalar> SymLowRankMatrix<T> {
    /// Validates the factors; `S` must have the parity to `1e-12 ||S||` and is
    /// stored exactly scrubbed. A real skew-symmetric matrix has even rank, so
    /// odd `r` is rejected for `Parity::Anti` with real scalars.
    pub fn new(u: DMatrix<T>, s: DMatrix<T>, parity: Parity) -> Result<Self> {
        let r = s.nrows();
        if s.ncols() != r || u.ncols() != r {
            return Err(mismatch("SymLowRankMatrix::new", format!("U {:?}, S {:?}", u.shape(), s.shape())));
        }
        if parity == Parity::Anti && !T::IS_COMPLEX && r % 2 == 1 {
            return Err(Error::InvalidArgument(format!("real skew-symmetric rank must be even, got {r}")));
        }
        check_orthonormal(&u, "U")?;
        let defect = matrix_parity_defect(&s, parity);
        if defect > PARITY_INPUT_TOL * s.norm() {
            return Err(Error::ParityMismatch { parity, defect });
        }
        let s = scrub_parity(&s, parity);
        Ok(Self { u, s, parity })
    }

    pub fn u(&self) -> &DMatrix<T> {
        &self.u
    }

    pub fn s(&self) -> &DMatrix<T> {
        &self.s
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn rank(&self) -> usize {
        self.s.nrows()
    }

    /// Dense `U S U^H`, scrubbed so that the parity holds bit-exactly.
    pub fn assemble(&self) -> DMatrix<T> {
        scrub_parity(&(&self.u * &self.s * self.u.adjoint()), self.parity)
    }

    /// The same matrix viewed as a general `U S U^H` low-rank matrix.
    pub fn to_general(&self) -> LowRankMatrix<T> {
        LowRankMatrix { u: self.u.clone(), s: self.s.clone(), v: self.u.clone() }
    }
}

type MatFn<T> = Arc<dyn Fn(f64, &DMatrix<T>) -> DMatrix<T> + Send + Sync>;
type PathFn<T> = Arc<dyn Fn(f64) -> DMatrix<T> + Send + Sync>;
type LinFn<T> = Arc<dyn Fn(&DMatrix<T>) -> DMatrix<T> + Send + Sync>;

#[derive(Clone)]
enum RhsKind<T: Scalar> {
    General(MatFn<T>),
    /// `F(t, Y) = A'(t)` with the path `A(t)` known.
    Explicit { path: PathFn<T>, derivative: PathFn<T> },
    /// Autonomous `F(Y) = L(Y) + B`.
    Affine { linear: LinFn<T>, forcing: Option<DMatrix<T>> },
}

/// Right-hand side `F(t, Y)` of a matrix ODE.
#[derive(Clone)]
pub struct MatrixRhs<T: Scalar> {
    kind: RhsKind<T>,
    preserves_parity: bool,
}

impl<T: Scalar> MatrixRhs<T> {
    /// Black-box right-hand side. Only Runge-Kutta substeps are available.
    pub fn general(f: impl Fn(f64, &DMatrix<T>) -> DMatrix<T> + Send + Sync + 'static) -> Self {
        Self { kind: RhsKind::General(Arc::new(f)), preserves_parity: false }
    }

    /// `F(t, Y) = A'(t)`, independent of `Y`. Exact substeps integrate the
    /// increments `A(t1) - A(t0)` directly.
    pub fn explicit(
        path: impl Fn(f64) -> DMatrix<T> + Send + Sync + 'static,
        derivative: impl Fn(f64) -> DMatrix<T> + Send + Sync + 'static,
    ) -> Self {
        Self { kind: RhsKind::Explicit { path: Arc::new(path), derivative: Arc::new(derivative) }, preserves_parity: false }
    }

    /// Autonomous affine `F(Y) = L(Y) + B`; exact substeps use the Arnoldi
    /// exponential action.
    pub fn affine(linear: impl Fn(&DMatrix<T>) -> DMatrix<T> + Send + Sync + 'static, forcing: Option<DMatrix<T>>) -> Self {
        Self { kind: RhsKind::Affine { linear: Arc::new(linear), forcing }, preserves_parity: false }
    }

    /// Declares that `F` maps (skew-)symmetric matrices to (skew-)symmetric
    /// matrices.
    pub fn with_parity(mut self) -> Self {
        self.preserves_parity = true;
        self
    }

    pub fn preserves_parity(&self) -> bool {
        self.preserves_parity
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.kind, RhsKind::Affine { forcing: None, .. })
    }

    pub fn eval(&self, t: f64, y: &DMatrix<T>) -> DMatrix<T> {
        match &self.kind {
            RhsKind::General(f) => f(t, y),
            RhsKind::Explicit { derivative, .. } => derivative(t),
            RhsKind::Affine { linear, forcing } => {
                let mut out = linear(y);
                if let Some(b) = forcing {
                    out += b;
                }
                out
            }
        }
    }
}

/// How the substep ODEs are integrated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SubstepSolver {
    /// Classical RK4 with `inner_steps` equal steps per substep.
    Rk4 { inner_steps: usize },
    /// Adaptive Dormand-Prince 5(4).
    Adaptive { rtol: f64, atol: f64 },
    /// Exact integration: increments for explicit paths, Arnoldi exponential
    /// action for affine right-hand sides. Fails for black-box ones.
    Exact { krylov_dim: usize, tol: f64 },
}

impl SubstepSolver {
    pub const fn rk4() -> Self {
        SubstepSolver::Rk4 { inner_steps: 1 }
    }

    pub const fn exact() -> Self {
        SubstepSolver::Exact { krylov_dim: 30, tol: 1e-13 }
    }
}

fn to_vec<T: Scalar>(m: &DMatrix<T>) -> DVector<T> {
    DVector::from_column_slice(m.as_slice())
}

fn to_mat<T: Scalar>(v: &DVector<T>, rows: usize, cols: usize) -> DMatrix<T> {
    DMatrix::from_column_slice(rows, cols, &v.as_slice()[..rows * cols])
}

/// Integrates `x' = P(F(t, E(x)))` from `x(t0) = x0` to `t1`.
fn solve_substep<T, E, P>(
    f: &MatrixRhs<T>,
    solver: SubstepSolver,
    x0: &DMatrix<T>,
    t0: f64,
    t1: f64,
    embed: E,
    project: P,
) -> Result<DMatrix<T>>
where
    T: Scalar,
    E: Fn(&DMatrix<T>) -> DMatrix<T>,
    P: Fn(&DMatrix<T>) -> DMatrix<T>,
{
    if t1 == t0 {
        return Ok(x0.clone());
    }
    let (rows, cols) = x0.shape();
    match solver {
        SubstepSolver::Exact { krylov_dim, tol } => match &f.kind {
            RhsKind::Explicit { path, .. } => Ok(x0 + project(&(path(t1) - path(t0)))),
            RhsKind::Affine { linear, forcing } => {
                let n = rows * cols;
                let c = forcing.as_ref().map(|b| to_vec(&project(b)));
                let apply = |v: &DVector<T>| {
                    let x = to_mat(v, rows, cols);
                    let mut out = DVector::<T>::zeros(v.len());
                    out.rows_mut(0, n).copy_from(&to_vec(&project(&linear(&embed(&x)))));
                    if let Some(c) = &c {
                        let tau = v[n];
                        out.rows_mut(0, n).axpy(tau, c, T::one());
                    }
                    out
                };
                // A constant forcing is absorbed by the augmented state [x; 1].
                let mut b = DVector::<T>::zeros(n + usize::from(c.is_some()));
                b.rows_mut(0, n).copy_from(&to_vec(x0));
                if c.is_some() {
                    b[n] = T::one();
                }
                let dim = krylov_dim.min(b.len());
                let y = arnoldi_apply_expm(apply, &b, t1 - t0, dim, tol);
                Ok(to_mat(&y, rows, cols))
            }
            RhsKind::General(_) => Err(Error::SubstepUnsupported {
                solver: "exact",
                reason: "black-box right-hand sides have no closed-form substep",
            }),
        },
        SubstepSolver::Rk4 { .. } | SubstepSolver::Adaptive { .. } => {
            let rhs = |t: f64, v: &DVector<T>| to_vec(&project(&f.eval(t, &embed(&to_mat(v, rows, cols)))));
            let prob = OdeProblem::new(rhs, t0, t1, to_vec(x0));
            let y = match solver {
                SubstepSolver::Rk4 { inner_steps } => rk4(&prob, inner_steps)?,
                SubstepSolver::Adaptive { rtol, atol } => rk45_adaptive(&prob, rtol, atol)?,
                SubstepSolver::Exact { .. } => unreachable!(),
            };
            Ok(to_mat(&y, rows, cols))
        }
    }
}

/// Orthogonal projection onto the tangent space at `Y = U S V^H`,
/// `P(Z) = Z V V^H - U U^H Z V V^H + U U^H Z`.
pub fn tangent_project<T: Scalar>(y: &LowRankMatrix<T>, z: &DMatrix<T>) -> Result<DMatrix<T>> {
    if z.nrows() != y.u.nrows() || z.ncols() != y.v.nrows() {
        return Err(mismatch("tangent_project", format!("Z {:?} vs Y {}x{}", z.shape(), y.u.nrows(), y.v.nrows())));
    }
    let zv = z * &y.v;
    let uhz = y.u.adjoint() * z;
    let uhzv = &uhz * &y.v;
    Ok(&zv * y.v.adjoint() - &y.u * uhzv * y.v.adjoint() + &y.u * uhz)
}

fn k_step<T: Scalar>(
    f: &MatrixRhs<T>,
    solver: SubstepSolver,
    k0: &DMatrix<T>,
    v0: &DMatrix<T>,
    t0: f64,
    t1: f64,
) -> Result<DMatrix<T>> {
    let v0h = v0.adjoint();
    solve_substep(f, solver, k0, t0, t1, |k| k * &v0h, |z| z * v0)
}

fn s_step<T: Scalar>(
    f: &MatrixRhs<T>,
    solver: SubstepSolver,
    s0: &DMatrix<T>,
    u1: &DMatrix<T>,
    v0: &DMatrix<T>,
    t0: f64,
    t1: f64,
) -> Result<DMatrix<T>> {
    let u1h = u1.adjoint();
    let v0h = v0.adjoint();
    solve_substep(f, solver, s0, t0, t1, |s| u1 * s * &v0h, |z| -(&u1h * z * v0))
}

fn l_step<T: Scalar>(
    f: &MatrixRhs<T>,
    solver: SubstepSolver,
    l0: &DMatrix<T>,
    u1: &DMatrix<T>,
    t0: f64,
    t1: f64,
) -> Result<DMatrix<T>> {
    solve_substep(f, solver, l0, t0, t1, |l| u1 * l.adjoint(), |z| z.adjoint() * u1)
}

/// One projector-splitting step from `t0` to `t1` with substeps K, S, L.
///
/// ```text
/// K' = F(t, K V0^H) V0,          K(t0) = U0 S0;   K(t1) = U1 S^
/// S' = -U1^H F(t, U1 S V0^H) V0, S(t0) = S^;      S~ = S(t1)
/// L' = F(t, U1 L^H)^H U1,        L(t0) = V0 S~^H; L(t1) = V1 S1^H
/// ```
pub fn ksl_step<T: Scalar>(
    y0: &LowRankMatrix<T>,
    f: &MatrixRhs<T>,
    t0: f64,
    t1: f64,
    solver: SubstepSolver,
) -> Result<LowRankMatrix<T>> {
    let k1 = k_step(f, solver, &(&y0.u * &y0.s), &y0.v, t0, t1)?;
    let qr = qr_thin(&k1)?;
    let (u1, s_hat) = (qr.q, qr.r);
    let s_tilde = s_step(f, solver, &s_hat, &u1, &y0.v, t0, t1)?;
    let l1 = l_step(f, solver, &(&y0.v * s_tilde.adjoint()), &u1, t0, t1)?;
    let qr = qr_thin(&l1)?;
    Ok(LowRankMatrix { u: u1, s: qr.r.adjoint(), v: qr.q })
}

/// The same substeps in reverse order: L, S, K.
fn lsk_step<T: Scalar>(
    y0: &LowRankMatrix<T>,
    f: &MatrixRhs<T>,
    t0: f64,
    t1: f64,
    solver: SubstepSolver,
) -> Result<LowRankMatrix<T>> {
    let l1 = l_step(f, solver, &(&y0.v * y0.s.adjoint()), &y0.u, t0, t1)?;
    let qr = qr_thin(&l1)?;
    let (v1, s_hat) = (qr.q, qr.r.adjoint());
    let s_tilde = s_step(f, solver, &s_hat, &y0.u, &v1, t0, t1)?;
    let k1 = k_step(f, solver, &(&y0.u * s_tilde), &v1, t0, t1)?;
    let qr = qr_thin(&k1)?;
    Ok(LowRankMatrix { u: qr.q, s: qr.r, v: v1 })
}

/// Symmetric (Strang) composition: K, S, L over the first half step, then L,
/// S, K over the second.
pub fn ksl_strang_step<T: Scalar>(
    y0: &LowRankMatrix<T>,
    f: &MatrixRhs<T>,
    t0: f64,
    t1: f64,
    solver: SubstepSolver,
) -> Result<LowRankMatrix<T>> {
    let tm = 0.5 * (t0 + t1);
    let half = ksl_step(y0, f, t0, tm, solver)?;
    lsk_step(&half, f, tm, t1, solver)
}

/// Diagnostics of one [`sym_step`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymStepReport {
    /// `||S1 -+ S1^H||_F` before scrubbing.
    pub parity_defect: f64,
    /// Condition number of `K(t1)`; large values mean the new basis was
    /// completed from a rank-deficient `K`.
    pub k_condition: f64,
}

/// One step of the (skew-)symmetry preserving integrator:
///
/// ```text
/// K' = F(t, K U0^H) U0,            K(t0) = U0 S0;   K(t1) = U1 R
/// S' = U1^H F(t, U1 S U1^H) U1,    S(t0) = M S0 M^H with M = U1^H U0
/// ```
///
/// `R` is discarded and `S1` is scrubbed to exact parity. `F` must declare
/// [`MatrixRhs::with_parity`].
pub fn sym_step<T: Scalar>(
    y0: &SymLowRankMatrix<T>,
    f: &MatrixRhs<T>,
    t0: f64,
    t1: f64,
    solver: SubstepSolver,
) -> Result<SymLowRankMatrix<T>> {
    sym_step_with_report(y0, f, t0, t1, solver).map(|(y, _)| y)
}

pub fn sym_step_with_report<T: Scalar>(
    y0: &SymLowRankMatrix<T>,
    f: &MatrixRhs<T>,
    t0: f64,
    t1: f64,
    solver: SubstepSolver,
) -> Result<(SymLowRankMatrix<T>, SymStepReport)> {
    if !f.preserves_parity() {
        return Err(Error::InvalidArgument("sym_step needs a parity-preserving right-hand side".into()));
    }
    let u0 = &y0.u;
    let k1 = k_step(f, solver, &(u0 * &y0.s), u0, t0, t1)?;
    let k_condition = condition_number(&k1);
    let u1 = qr_thin(&k1)?.q;
    let m = u1.adjoint() * u0;
    let s_init = &m * &y0.s * m.adjoint();
    let u1h = u1.adjoint();
    let s1 = solve_substep(f, solver, &s_init, t0, t1, |s| &u1 * s * &u1h, |z| &u1h * z * &u1)?;
    if s1.iter().any(|x| !x.modulus().is_finite()) {
        return Err(Error::NonFinite(format!("S-step at t = {t1}")));
    }
    let parity_defect = matrix_parity_defect(&s1, y0.parity);
    if parity_defect > PARITY_VIOLATION_TOL * s1.norm() {
        return Err(Error::ParityViolation { defect: parity_defect, tolerance: PARITY_VIOLATION_TOL * s1.norm() });
    }
    let s1 = scrub_parity(&s1, y0.parity);
    Ok((SymLowRankMatrix { u: u1, s: s1, parity: y0.parity }, SymStepReport { parity_defect, k_condition }))
}

/// Time derivatives of the factors in the classical factored formulation of
/// dynamical low-rank approximation.
#[derive(Clone, Debug)]
pub struct FactorDerivatives<T: Scalar> {
    pub du: DMatrix<T>,
    pub ds: DMatrix<T>,
    pub dv: DMatrix<T>,
    /// Condition number of `S`.
    pub condition: f64,
}

/// ```text
/// S' = U^H F V
/// U' = (I - U U^H) F V S^{-1}
/// V' = (I - V V^H) F^H U S^{-H}
/// ```
///
/// Fails with [`Error::NearSingular`] when `cond(S) > 1e14`.
pub fn dlra_factor_rhs<T: Scalar>(y: &LowRankMatrix<T>, f: &MatrixRhs<T>, t: f64) -> Result<FactorDerivatives<T>> {
    let condition = condition_number(&y.s);
    if !(condition <= MAX_FACTOR_CONDITION) {
        return Err(Error::NearSingular { cond: condition });
    }
    let (du, ds, dv) = factor_derivatives(&y.u, &y.s, &y.v, &f.eval(t, &y.assemble()));
    Ok(FactorDerivatives { du, ds, dv, condition })
}

// No conditioning check: the baseline is supposed to show what happens.
fn factor_derivatives<T: Scalar>(
    u: &DMatrix<T>,
    s: &DMatrix<T>,
    v: &DMatrix<T>,
    fy: &DMatrix<T>,
) -> (DMatrix<T>, DMatrix<T>, DMatrix<T>) {
    let fv = fy * v;
    let fhu = fy.adjoint() * u;
    let ds = u.adjoint() * &fv;
    let s_inv = s.clone().try_inverse().unwrap_or_else(|| DMatrix::from_element(s.nrows(), s.ncols(), T::from_real(f64::NAN)));
    let du = (&fv - u * (u.adjoint() * &fv)) * &s_inv;
    let dv = (&fhu - v * (v.adjoint() * &fhu)) * s_inv.adjoint();
    (du, ds, dv)
}

/// Classical RK4 with `nsteps` steps applied to the factored system of
/// [`dlra_factor_rhs`]; returns the assembled `U S V^H` at `t1`. Divergence
/// shows up as huge or non-finite entries, not as an error.
pub fn factored_rk4<T: Scalar>(
    y0: &LowRankMatrix<T>,
    f: &MatrixRhs<T>,
    t0: f64,
    t1: f64,
    nsteps: usize,
) -> Result<DMatrix<T>> {
    let (m, n, r) = (y0.u.nrows(), y0.v.nrows(), y0.rank());
    let split = |x: &DVector<T>| {
        let s = x.as_slice();
        (
            DMatrix::from_column_slice(m, r, &s[..m * r]),
            DMatrix::from_column_slice(r, r, &s[m * r..m * r + r * r]),
            DMatrix::from_column_slice(n, r, &s[m * r + r * r..]),
        )
    };
    let pack = |a: &DMatrix<T>, b: &DMatrix<T>, c: &DMatrix<T>| {
        DVector::from_iterator(a.len() + b.len() + c.len(), a.iter().chain(b.iter()).chain(c.iter()).copied())
    };
    let rhs = |t: f64, x: &DVector<T>| {
        let (u, s, v) = split(x);
        let fy = f.eval(t, &(&u * &s * v.adjoint()));
        let (du, ds, dv) = factor_derivatives(&u, &s, &v, &fy);
        pack(&du, &ds, &dv)
    };
    let prob = OdeProblem::new(rhs, t0, t1, pack(&y0.u, &y0.s, &y0.v));
    let (u, s, v) = split(&rk4(&prob, nsteps)?);
    Ok(u * s * v.adjoint())
}

/// Best rank-`r` approximation `U S U^H` of a (skew-)symmetric matrix.
///
/// The parity is detected from `A` (tolerance `1e-10 ||A||`). Symmetric
/// input keeps the `r` eigenpairs of largest modulus; skew input keeps the
/// leading `r` left singular vectors, which span an invariant subspace when
/// `r` does not split a pair, and takes `S = U^H A U`.
pub fn truncate_to_sym_lowrank<T: Scalar>(a: &DMatrix<T>, r: usize) -> Result<SymLowRankMatrix<T>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(mismatch("truncate_to_sym_lowrank", "matrix must be square"));
    }
    if r == 0 || r > n {
        return Err(Error::InvalidArgument(format!("rank {r} invalid for size {n}")));
    }
    let tol = 1e-10 * a.norm();
    let parity = if matrix_parity_defect(a, Parity::Symmetric) <= tol {
        Parity::Symmetric
    } else if matrix_parity_defect(a, Parity::Anti) <= tol {
        Parity::Anti
    } else {
        return Err(Error::InvalidArgument("input is neither symmetric nor skew-symmetric".into()));
    };
    let u = match parity {
        Parity::Symmetric => hermitian_eigen(a).1.columns(0, r).into_owned(),
        Parity::Anti => svd(a).u.columns(0, r).into_owned(),
    };
    let s = scrub_parity(&(u.adjoint() * a * &u), parity);
    SymLowRankMatrix::new(u, s, parity)
}
