//! Thin wrappers around rustfft with the sign/normalization conventions used
//! throughout the crate: forward is an unnormalized sum, inverse carries 1/N,
//! and frequency bin `j` maps to `k = 2*pi/L * j` with `j` in
//! `{0, 1, .., N/2-1, -N/2, .., -1}` (standard FFT order).

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

pub struct FftPair {
    pub len: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl FftPair {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(len);
        let inv = planner.plan_fft_inverse(len);
        Self { len, fwd, inv }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.len);
        self.fwd.process(data);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.len);
        self.inv.process(data);
        let scale = 1.0 / self.len as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }
}

/// Angular frequencies `2*pi/length * j` in FFT bin order.
pub fn frequencies(n: usize, length: f64) -> Vec<f64> {
    let base = 2.0 * std::f64::consts::PI / length;
    (0..n)
        .map(|i| {
            let j = if i <= (n - 1) / 2 {
                i as isize
            } else {
                i as isize - n as isize
            };
            base * j as f64
        })
        .collect()
}

/// Spectral derivative of a periodic sample vector (length `period`).
pub fn spectral_derivative(values: &[f64], period: f64) -> Vec<f64> {
    let n = values.len();
    let pair = FftPair::new(n);
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    pair.forward(&mut buf);
    let ks = frequencies(n, period);
    for (v, &k) in buf.iter_mut().zip(&ks) {
        *v *= Complex64::new(0.0, k);
    }
    // For even n the Nyquist bin of a real signal has no well-defined odd part.
    if n % 2 == 0 {
        buf[n / 2] = Complex64::new(0.0, 0.0);
    }
    pair.inverse(&mut buf);
    buf.iter().map(|v| v.re).collect()
}

/// Spectral derivative of a complex sample vector on a periodic interval.
pub fn spectral_derivative_c(values: &[Complex64], period: f64) -> Vec<Complex64> {
    let n = values.len();
    let pair = FftPair::new(n);
    let mut buf = values.to_vec();
    pair.forward(&mut buf);
    let ks = frequencies(n, period);
    for (v, &k) in buf.iter_mut().zip(&ks) {
        *v *= Complex64::new(0.0, k);
    }
    pair.inverse(&mut buf);
    buf
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_identity() {
        let n = 64;
        let pair = FftPair::new(n);
        let orig: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut buf = orig.clone();
        pair.forward(&mut buf);
        pair.inverse(&mut buf);
        for (a, b) in orig.iter().zip(&buf) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn derivative_of_sine() {
        let n = 128;
        let l = 2.0 * std::f64::consts::PI;
        let xs: Vec<f64> = (0..n).map(|i| l * i as f64 / n as f64).collect();
        let vals: Vec<f64> = xs.iter().map(|&x| (3.0 * x).sin()).collect();
        let d = spectral_derivative(&vals, l);
        for (x, dv) in xs.iter().zip(&d) {
            assert!((dv - 3.0 * (3.0 * x).cos()).abs() < 1e-10);
        }
    }

    #[test]
    fn frequency_order_matches_fft_bins() {
        let ks = frequencies(8, 2.0 * std::f64::consts::PI);
        assert_eq!(ks, vec![0.0, 1.0, 2.0, 3.0, -4.0, -3.0, -2.0, -1.0]);
    }
}
