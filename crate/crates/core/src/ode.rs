//! Explicit Runge-Kutta integrators on flat state vectors.

use nalgebra::DVector;

use crate::error::{mismatch, Error, Result};
use crate::Scalar;

/// Initial value problem `y' = rhs(t, y)`, `y(t0) = y0`, integrated to `t1`.
pub struct OdeProblem<T: Scalar, F> {
    pub rhs: F,
    pub t0: f64,
    pub t1: f64,
    pub y0: DVector<T>,
}

impl<T, F> OdeProblem<T, F>
where
    T: Scalar,
    F: Fn(f64, &DVector<T>) -> DVector<T>,
{
    pub fn new(rhs: F, t0: f64, t1: f64, y0: DVector<T>) -> Self {
        Self { rhs, t0, t1, y0 }
    }

    fn eval(&self, t: f64, y: &DVector<T>) -> Result<DVector<T>> {
        let out = (self.rhs)(t, y);
        if out.len() != y.len() {
            return Err(mismatch("ode rhs", format!("output length {} != state length {}", out.len(), y.len())));
        }
        Ok(out)
    }
}

/// Classical fourth-order Runge-Kutta with `nsteps` equal steps.
pub fn rk4<T, F>(prob: &OdeProblem<T, F>, nsteps: usize) -> Result<DVector<T>>
where
    T: Scalar,
    F: Fn(f64, &DVector<T>) -> DVector<T>,
{
    if nsteps == 0 {
        return Err(Error::InvalidArgument("rk4 needs at least one step".into()));
    }
    let h = (prob.t1 - prob.t0) / nsteps as f64;
    let half = T::from_real(0.5 * h);
    let full = T::from_real(h);
    let sixth = T::from_real(h / 6.0);
    let two = T::from_real(2.0);
    let mut y = prob.y0.clone();
    for n in 0..nsteps {
        let t = prob.t0 + n as f64 * h;
        let k1 = prob.eval(t, &y)?;
        let k2 = prob.eval(t + 0.5 * h, &(&y + &k1 * half))?;
        let k3 = prob.eval(t + 0.5 * h, &(&y + &k2 * half))?;
        let k4 = prob.eval(t + h, &(&y + &k3 * full))?;
        y += (k1 + k2 * two + k3 * two + k4) * sixth;
    }
    Ok(y)
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Adaptive embedded Dormand-Prince 5(4) integration with standard step
/// control on the mixed error norm `atol + rtol * |y|` (RMS over components).
///
/// Fails with [`Error::StepSizeUnderflow`] when the step drops below
/// `1e-14 * |t1 - t0|`.
pub fn rk45_adaptive<T, F>(prob: &OdeProblem<T, F>, rtol: f64, atol: f64) -> Result<DVector<T>>
where
    T: Scalar,
    F: Fn(f64, &DVector<T>) -> DVector<T>,
{
    if !(rtol > 0.0 && atol > 0.0) {
        return Err(Error::InvalidArgument("rk45 tolerances must be positive".into()));
    }
    let span = prob.t1 - prob.t0;
    if span == 0.0 {
        return Ok(prob.y0.clone());
    }
    let dir = span.signum();
    let hmin = 1e-14 * span.abs();
    let n = prob.y0.len().max(1) as f64;
    let err_norm = |e: &DVector<T>, y: &DVector<T>, ynew: &DVector<T>| -> f64 {
        let s: f64 = e
            .iter()
            .zip(y.iter().zip(ynew.iter()))
            .map(|(ei, (yi, zi))| {
                let sc = atol + rtol * yi.modulus().max(zi.modulus());
                (ei.modulus() / sc).powi(2)
            })
            .sum();
        (s / n).sqrt()
    };

    let mut t = prob.t0;
    let mut y = prob.y0.clone();
    let mut k1 = prob.eval(t, &y)?;

    // Starting step heuristic (Hairer, Norsett, Wanner).
    let mut h = {
        let sc = |v: &DVector<T>| -> f64 {
            let s: f64 = v
                .iter()
                .zip(y.iter())
                .map(|(vi, yi)| (vi.modulus() / (atol + rtol * yi.modulus())).powi(2))
                .sum();
            (s / n).sqrt()
        };
        let d0 = sc(&y);
        let d1 = sc(&k1);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h0.min(span.abs())
    };

    let mut rejected_last = false;
    while dir * (prob.t1 - t) > 0.0 {
        if h < hmin {
            return Err(Error::StepSizeUnderflow { t, h });
        }
        let remaining = (prob.t1 - t).abs();
        let last = h >= remaining;
        if last {
            h = remaining;
        }
        let hs = dir * h;
        let mut ks: Vec<DVector<T>> = Vec::with_capacity(7);
        ks.push(k1.clone());
        for stage in 1..7 {
            let mut arg = y.clone();
            for (j, kj) in ks.iter().enumerate() {
                let a = A[stage][j];
                if a != 0.0 {
                    arg.axpy(T::from_real(hs * a), kj, T::one());
                }
            }
            ks.push(prob.eval(t + C[stage] * hs, &arg)?);
        }
        let mut ynew = y.clone();
        for (j, kj) in ks.iter().enumerate().take(6) {
            let b = A[6][j];
            if b != 0.0 {
                ynew.axpy(T::from_real(hs * b), kj, T::one());
            }
        }
        let mut err = DVector::<T>::zeros(y.len());
        for (j, kj) in ks.iter().enumerate() {
            if E[j] != 0.0 {
                err.axpy(T::from_real(hs * E[j]), kj, T::one());
            }
        }
        let en = err_norm(&err, &y, &ynew);
        if !en.is_finite() {
            return Err(Error::NonFinite(format!("rk45 error estimate at t = {t}")));
        }
        if en <= 1.0 {
            t = if last { prob.t1 } else { t + hs };
            y = ynew;
            k1 = ks.pop().expect("seven stages");
            let mut fac = if en == 0.0 { 5.0 } else { 0.9 * en.powf(-0.2) };
            fac = fac.clamp(0.2, 5.0);
            if rejected_last {
                fac = fac.min(1.0);
            }
            h *= fac;
            rejected_last = false;
        } else {
            h *= (0.9 * en.powf(-0.2)).max(0.2);
            rejected_last = true;
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn zero_rhs_is_exact() {
        let y0 = DVector::from_vec(vec![1.5, -2.0]);
        let prob = OdeProblem::new(|_t, y: &DVector<f64>| DVector::zeros(y.len()), 0.0, 3.0, y0.clone());
        assert_eq!(rk4(&prob, 7).unwrap(), y0);
        assert_eq!(rk45_adaptive(&prob, 1e-8, 1e-12).unwrap(), y0);
    }

    #[test]
    fn rk4_exponential() {
        let prob = OdeProblem::new(|_t, y: &DVector<f64>| y.clone(), 0.0, 1.0, DVector::from_element(1, 1.0));
        let y = rk4(&prob, 100).unwrap();
        assert!((y[0] - std::f64::consts::E).abs() < 1e-8);
    }

    #[test]
    fn rk4_fourth_order() {
        let prob = |n| {
            let p = OdeProblem::new(|t: f64, y: &DVector<f64>| y * t.cos(), 0.0, 2.0, DVector::from_element(1, 1.0));
            (rk4(&p, n).unwrap()[0] - 2f64.sin().exp()).abs()
        };
        let ratio = prob(20) / prob(40);
        assert!((ratio.log2() - 4.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn rk4_stiff_diverges() {
        let prob = OdeProblem::new(|_t, y: &DVector<f64>| y * -1e6, 0.0, 0.05, DVector::from_element(1, 1.0));
        let y = rk4(&prob, 5).unwrap();
        assert!(!(y[0].abs() <= 1.0), "RK4 outside its stability region must blow up, got {}", y[0]);
    }

    #[test]
    fn adaptive_meets_tolerance() {
        let prob = OdeProblem::new(
            |_t, y: &DVector<f64>| DVector::from_vec(vec![y[1], -y[0]]),
            0.0,
            10.0,
            DVector::from_vec(vec![1.0, 0.0]),
        );
        let y = rk45_adaptive(&prob, 1e-10, 1e-14).unwrap();
        assert!((y[0] - 10f64.cos()).abs() < 1e-8);
        assert!((y[1] + 10f64.sin()).abs() < 1e-8);
    }

    #[test]
    fn adaptive_backward_and_complex() {
        let i = Complex64::new(0.0, 1.0);
        let prob = OdeProblem::new(
            move |_t, y: &DVector<Complex64>| y * i,
            1.0,
            0.0,
            DVector::from_element(1, Complex64::new(1.0, 0.0)),
        );
        let y = rk45_adaptive(&prob, 1e-10, 1e-14).unwrap();
        assert!((y[0] - (-i).exp()).norm() < 1e-8);
    }

    #[test]
    fn adaptive_underflow_is_reported() {
        // Finite-time blow-up at t = 1.
        let prob = OdeProblem::new(
            |_t, y: &DVector<f64>| y.map(|v| v * v),
            0.0,
            2.0,
            DVector::from_element(1, 1.0),
        );
        let err = rk45_adaptive(&prob, 1e-8, 1e-12).unwrap_err();
        assert!(matches!(err, Error::StepSizeUnderflow { .. } | Error::NonFinite(_)), "{err}");
    }

    #[test]
    fn rhs_length_checked() {
        let prob = OdeProblem::new(|_t, _y: &DVector<f64>| DVector::zeros(3), 0.0, 1.0, DVector::zeros(2));
        assert!(rk4(&prob, 1).is_err());
    }
}
