//! Discrete Fourier transform on the centred periodic grid.
//!
//! Grid points are `x_j = 2*pi*j/K` for `j = -K/2, ..., K/2-1`, stored at
//! array position `p = j + K/2`. Frequencies `k = -K/2, ..., K/2-1` are stored
//! the same way (position `k + K/2`). The forward transform is unnormalized,
//!
//! ```text
//! fft(v)[k] = sum_j v_j exp(-i k x_j),
//! ```
//!
//! and the inverse carries the `1/K` factor, so `||fft(v)||^2 = K ||v||^2`.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

fn check_len(k: usize) -> Result<()> {
    if k == 0 || !k.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(k));
    }
    Ok(())
}

/// Frequencies `-K/2 .. K/2-1` in storage order.
pub fn frequencies(k: usize) -> Vec<f64> {
    let half = (k / 2) as i64;
    (0..k as i64).map(|p| (p - half) as f64).collect()
}

/// Grid points `2*pi*j/K` in storage order.
pub fn grid(k: usize) -> Vec<f64> {
    frequencies(k)
        .into_iter()
        .map(|j| 2.0 * std::f64::consts::PI * j / k as f64)
        .collect()
}

// exp(-i k x_j) = (-1)^k exp(-2 pi i k p / K) with p = j + K/2, so the centred
// transform is a standard DFT followed by a sign flip and a half-length shift.
fn alternating(k: i64) -> f64 {
    if k.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

pub fn fft(v: &[Complex64]) -> Result<Vec<Complex64>> {
    let len = v.len();
    check_len(len)?;
    let mut buf = v.to_vec();
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    let half = (len / 2) as i64;
    Ok((0..len as i64)
        .map(|q| {
            let k = q - half;
            buf[k.rem_euclid(len as i64) as usize] * alternating(k)
        })
        .collect())
}

pub fn ifft(c: &[Complex64]) -> Result<Vec<Complex64>> {
    let len = c.len();
    check_len(len)?;
    let half = (len / 2) as i64;
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    for (q, ck) in c.iter().enumerate() {
        let k = q as i64 - half;
        buf[k.rem_euclid(len as i64) as usize] = *ck * alternating(k);
    }
    FftPlanner::new().plan_fft_inverse(len).process(&mut buf);
    let scale = 1.0 / len as f64;
    Ok(buf.into_iter().map(|x| x * scale).collect())
}

/// Applies the Fourier multiplier `F^{-1} diag(symbol) F` to `v`.
pub fn apply_multiplier(symbol: &[Complex64], v: &[Complex64]) -> Result<Vec<Complex64>> {
    if symbol.len() != v.len() {
        return Err(crate::error::mismatch("apply_multiplier", "symbol and vector lengths differ"));
    }
    let mut c = fft(v)?;
    for (ck, s) in c.iter_mut().zip(symbol) {
        *ck *= *s;
    }
    ifft(&c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::SeededRng;

    fn norm(v: &[Complex64]) -> f64 {
        v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    #[test]
    fn constant_is_zero_frequency() {
        let v = vec![Complex64::new(1.0, 0.0); 8];
        let c = fft(&v).unwrap();
        for (q, ck) in c.iter().enumerate() {
            let want = if q == 4 { 8.0 } else { 0.0 };
            assert!((ck - Complex64::new(want, 0.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn pure_mode_has_single_coefficient() {
        let k = 16;
        let v: Vec<Complex64> = grid(k).iter().map(|&x| Complex64::new(0.0, x).exp()).collect();
        let c = fft(&v).unwrap();
        for (q, ck) in c.iter().enumerate() {
            let freq = q as i64 - 8;
            let want = if freq == 1 { 16.0 } else { 0.0 };
            assert!((ck - Complex64::new(want, 0.0)).norm() < 1e-12, "q={q} {ck}");
        }
    }

    #[test]
    fn round_trip_and_parseval() {
        let mut rng = SeededRng::new(4);
        let v: Vec<Complex64> = (0..128).map(|_| rng.gaussian()).collect();
        let c = fft(&v).unwrap();
        let back = ifft(&c).unwrap();
        let diff: Vec<Complex64> = back.iter().zip(&v).map(|(a, b)| a - b).collect();
        assert!(norm(&diff) <= 1e-13 * norm(&v));
        let ratio = norm(&c).powi(2) / (128.0 * norm(&v).powi(2));
        assert!((ratio - 1.0).abs() < 1e-13);
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(matches!(fft(&[Complex64::new(0.0, 0.0); 6]), Err(Error::NotPowerOfTwo(6))));
        assert!(ifft(&[]).is_err());
    }

    #[test]
    fn multiplier_differentiates_modes() {
        // F^{-1} diag(i k) F differentiates exp(2 i x).
        let k = 32;
        let x = grid(k);
        let v: Vec<Complex64> = x.iter().map(|&xj| Complex64::new(0.0, 2.0 * xj).exp()).collect();
        let sym: Vec<Complex64> = frequencies(k).iter().map(|&f| Complex64::new(0.0, f)).collect();
        let dv = apply_multiplier(&sym, &v).unwrap();
        for (a, b) in dv.iter().zip(&v) {
            assert!((a - b * Complex64::new(0.0, 2.0)).norm() < 1e-12);
        }
    }
}
