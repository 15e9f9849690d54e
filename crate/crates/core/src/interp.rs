//! Cubic Lagrange interpolation on uniform grids (periodic or clamped) plus a
//! separable bicubic for 2D fields. Fourth-order accurate for smooth data.

use num_complex::Complex64;

pub trait Lerp: Copy + std::ops::Add<Output = Self> + std::ops::Mul<f64, Output = Self> {
    fn zero() -> Self;
}

impl Lerp for f64 {
    fn zero() -> Self {
        0.0
    }
}

impl Lerp for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
}

/// Weights of the 4-point Lagrange cubic for a query at fraction `t` past the
/// second stencil node (`t` in `[0, 1]` for interpolation).
#[inline]
pub fn cubic_weights(t: f64) -> [f64; 4] {
    let t1 = t - 1.0;
    let t2 = t - 2.0;
    let tp = t + 1.0;
    [
        -t * t1 * t2 / 6.0,
        tp * t1 * t2 / 2.0,
        -tp * t * t2 / 2.0,
        tp * t * t1 / 6.0,
    ]
}

#[inline]
fn wrap(i: isize, n: usize) -> usize {
    (i.rem_euclid(n as isize)) as usize
}

/// Cubic interpolation on a periodic uniform grid starting at `x0` with step `dx`.
pub fn cubic_periodic<T: Lerp>(values: &[T], x0: f64, dx: f64, x: f64) -> T {
    let n = values.len();
    let u = (x - x0) / dx;
    let i1 = u.floor() as isize;
    let t = u - i1 as f64;
    let w = cubic_weights(t);
    let mut acc = T::zero();
    for (off, &wk) in (-1..=2).zip(w.iter()) {
        acc = acc + values[wrap(i1 + off, n)] * wk;
    }
    acc
}

/// Cubic interpolation on a non-periodic uniform grid; the stencil is shifted
/// inward near the boundary. Queries must lie inside `[x0, x0 + (n-1) dx]`
/// up to roundoff (callers validate ranges).
pub fn cubic_clamped<T: Lerp>(values: &[T], x0: f64, dx: f64, x: f64) -> T {
    let n = values.len();
    assert!(n >= 4, "cubic interpolation needs at least 4 samples");
    let u = (x - x0) / dx;
    let mut i1 = u.floor() as isize;
    if i1 < 1 {
        i1 = 1;
    }
    if i1 > n as isize - 3 {
        i1 = n as isize - 3;
    }
    let t = u - i1 as f64;
    let w = cubic_weights(t);
    let mut acc = T::zero();
    for (off, &wk) in (-1..=2).zip(w.iter()) {
        acc = acc + values[(i1 + off) as usize] * wk;
    }
    acc
}

/// Bicubic interpolation of a row-major `(n2, n1)` complex field on a doubly
/// periodic box `[0,l1) x [0,l2)` with the first axis (`x1`) contiguous.
pub fn bicubic_periodic_2d(
    values: &[Complex64],
    n1: usize,
    n2: usize,
    l1: f64,
    l2: f64,
    x1: f64,
    x2: f64,
) -> Complex64 {
    let dx1 = l1 / n1 as f64;
    let dx2 = l2 / n2 as f64;
    let u = x1 / dx1;
    let v = x2 / dx2;
    let i1 = u.floor() as isize;
    let j1 = v.floor() as isize;
    let wu = cubic_weights(u - i1 as f64);
    let wv = cubic_weights(v - j1 as f64);
    let mut acc = Complex64::new(0.0, 0.0);
    for (oj, &wj) in (-1..=2).zip(wv.iter()) {
        let row = wrap(j1 + oj, n2) * n1;
        let mut row_acc = Complex64::new(0.0, 0.0);
        for (oi, &wi) in (-1..=2).zip(wu.iter()) {
            row_acc += values[row + wrap(i1 + oi, n1)] * wi;
        }
        acc += row_acc * wj;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_cubics_exactly() {
        let f = |x: f64| 2.0 - x + 3.0 * x * x - 0.5 * x * x * x;
        let vals: Vec<f64> = (0..20).map(|i| f(i as f64 * 0.25)).collect();
        for q in [0.31, 1.7, 3.99, 4.501] {
            let got = cubic_clamped(&vals, 0.0, 0.25, q);
            assert!((got - f(q)).abs() < 1e-12, "q={q}: {got} vs {}", f(q));
        }
    }

    #[test]
    fn periodic_interp_of_trig() {
        let n = 64;
        let l = 2.0 * std::f64::consts::PI;
        let vals: Vec<f64> = (0..n).map(|i| (l * i as f64 / n as f64).sin()).collect();
        // fourth-order: (dx)^4 * |f''''| ~ 1e-6 at this resolution
        for q in [0.123, 2.87, 5.55, 6.2] {
            let got = cubic_periodic(&vals, 0.0, l / n as f64, q);
            assert!((got - q.sin()).abs() < 5e-6);
        }
    }

    #[test]
    fn bicubic_matches_plane_wave() {
        let (n1, n2) = (32, 32);
        let (l1, l2) = (4.0, 4.0);
        let mut vals = vec![Complex64::new(0.0, 0.0); n1 * n2];
        let k = 2.0 * std::f64::consts::PI / l1;
        for j in 0..n2 {
            for i in 0..n1 {
                let x1 = l1 * i as f64 / n1 as f64;
                let x2 = l2 * j as f64 / n2 as f64;
                vals[j * n1 + i] = (Complex64::i() * k * (x1 + 0.5 * x2)).exp();
            }
        }
        let (q1, q2) = (1.23, 2.91);
        let exact = (Complex64::i() * k * (q1 + 0.5 * q2)).exp();
        let got = bicubic_periodic_2d(&vals, n1, n2, l1, l2, q1, q2);
        assert!((got - exact).norm() < 1e-4);
    }
}
