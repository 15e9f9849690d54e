//! The unitary reduction between Cartesian spinor fields near the interface
//! and normal-coordinate fields: U = U_theta V_Phi with
//! `V_Phi u(s,y) = sqrt(1 - y kappa) u(Phi(s,y))` and U_theta the constant-
//! in-y rotation matrix built from alpha = pi/4 + theta(s)/2. Includes the
//! sqrt(eps) dilation (an exact grid relabeling, hence exactly unitary) and
//! a discrete interface Hamiltonian
//! `H^E = m(Phi) sigma_1 - eps D_y sigma_2 + eps/(1-y kappa) D_s sigma_3
//!        - i eps y kappa' / (2 (1-y kappa)^2) sigma_3`
//! used to validate the intertwining U H = H^E U.

use crate::chart::InterfaceChart;
use crate::error::{CoreError, Result};
use crate::fft::{frequencies, FftPair};
use crate::interp::{bicubic_periodic_2d, cubic_weights};
use crate::mass::MassModel;
use crate::solver::{nyquist_fraction, SpinorField};
use crate::tubular::TubularMap;
use num_complex::Complex64;

#[derive(Debug, Clone, Copy)]
pub struct NormalGrid {
    pub s0: f64,
    pub ds: f64,
    pub n_s: usize,
    /// half-extent of the (symmetric) y grid
    pub y_max: f64,
    pub n_y: usize,
    /// period in s when the chart wraps the box
    pub s_period: Option<f64>,
}

impl NormalGrid {
    pub fn dy(&self) -> f64 {
        2.0 * self.y_max / self.n_y as f64
    }

    pub fn y(&self, j: usize) -> f64 {
        -self.y_max + (j as f64 + 0.5) * self.dy()
    }

    pub fn s(&self, i: usize) -> f64 {
        self.s0 + i as f64 * self.ds
    }

    pub fn len(&self) -> usize {
        self.n_s * self.n_y
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i_s: usize, i_y: usize) -> usize {
        i_s * self.n_y + i_y
    }
}

#[derive(Debug, Clone)]
pub struct NormalField {
    pub grid: NormalGrid,
    /// values[i_s * n_y + i_y]
    pub values: Vec<[Complex64; 2]>,
    pub eps: f64,
    /// y in units of sqrt(eps) after rescaling
    pub rescaled: bool,
    pub t: f64,
}

impl NormalField {
    pub fn zeros(grid: NormalGrid, eps: f64) -> Self {
        Self {
            grid,
            values: vec![[Complex64::new(0.0, 0.0); 2]; grid.len()],
            eps,
            rescaled: false,
            t: 0.0,
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.values
            .iter()
            .map(|v| v[0].norm_sqr() + v[1].norm_sqr())
            .sum::<f64>()
            * self.grid.ds
            * self.grid.dy()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }
}

/// C^2 cutoff: 1 for |y| <= hw/2, 0 for |y| >= hw (quintic smoothstep).
pub fn tube_cutoff(y: f64, halfwidth: f64) -> f64 {
    let a = y.abs();
    if a <= halfwidth / 2.0 {
        1.0
    } else if a >= halfwidth {
        0.0
    } else {
        let t = (a - halfwidth / 2.0) / (halfwidth / 2.0);
        1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
    }
}

#[inline]
fn u_theta_matrix(theta: f64) -> [[Complex64; 2]; 2] {
    let alpha = std::f64::consts::FRAC_PI_4 + theta / 2.0;
    let ep = Complex64::new(0.0, alpha).exp() / std::f64::consts::SQRT_2;
    let em = Complex64::new(0.0, -alpha).exp() / std::f64::consts::SQRT_2;
    [[ep, -em], [ep, em]]
}

#[inline]
fn mat_apply(m: &[[Complex64; 2]; 2], v: [Complex64; 2]) -> [Complex64; 2] {
    [
        m[0][0] * v[0] + m[0][1] * v[1],
        m[1][0] * v[0] + m[1][1] * v[1],
    ]
}

#[inline]
fn mat_adjoint_apply(m: &[[Complex64; 2]; 2], v: [Complex64; 2]) -> [Complex64; 2] {
    [
        m[0][0].conj() * v[0] + m[1][0].conj() * v[1],
        m[0][1].conj() * v[0] + m[1][1].conj() * v[1],
    ]
}

/// Default normal grid over one chart period: the s step matches the finer of
/// chart resolution and the Cartesian grid, n a power of two.
pub fn default_normal_grid(map: &TubularMap, n_s: usize, n_y: usize) -> Result<NormalGrid> {
    let chart = map.chart;
    let (s0, span, period) = match chart.period {
        Some(p) => (chart.s0, p, Some(p)),
        None => (chart.s0, chart.s_max() - chart.s_min(), None),
    };
    if n_s < 4 || n_y < 4 {
        return Err(CoreError::Config("normal grid too small".into()));
    }
    Ok(NormalGrid {
        s0,
        ds: span / n_s as f64,
        n_s,
        y_max: map.halfwidth(),
        n_y,
        s_period: period,
    })
}

/// U chi psi: cutoff in the normal distance, pull back through Phi by bicubic
/// interpolation, multiply by sqrt(1 - y kappa) and rotate by U_theta(s).
pub fn to_normal(
    field: &SpinorField,
    map: &TubularMap,
    grid: NormalGrid,
) -> Result<NormalField> {
    if nyquist_fraction(field) > 1e-8 {
        return Err(CoreError::Resolution(
            "field is not resolved on its Cartesian grid".into(),
        ));
    }
    let chart = map.chart;
    let g = field.grid;
    let comp1: Vec<Complex64> = field.values.iter().map(|v| v[0]).collect();
    let comp2: Vec<Complex64> = field.values.iter().map(|v| v[1]).collect();
    let hw = map.halfwidth();
    let mut out = NormalField::zeros(grid, field.eps);
    out.t = field.t;
    for i_s in 0..grid.n_s {
        let s = grid.s(i_s);
        let theta = chart.theta_at(s);
        let kappa = chart.kappa_at(s);
        let gam = chart.gamma_at(s);
        let nu = [theta.cos(), theta.sin()];
        let u_mat = u_theta_matrix(theta);
        for i_y in 0..grid.n_y {
            let y = grid.y(i_y);
            let chi = tube_cutoff(y, hw);
            if chi == 0.0 {
                continue;
            }
            let x = [gam[0] + y * nu[0], gam[1] + y * nu[1]];
            let v = [
                bicubic_periodic_2d(&comp1, g.n1, g.n2, g.l1, g.l2, x[0], x[1]),
                bicubic_periodic_2d(&comp2, g.n1, g.n2, g.l1, g.l2, x[0], x[1]),
            ];
            let jac = (1.0 - y * kappa).sqrt();
            let scaled = [v[0] * (chi * jac), v[1] * (chi * jac)];
            out.values[grid.idx(i_s, i_y)] = mat_apply(&u_mat, scaled);
        }
    }
    Ok(out)
}

/// Cached tube coordinates of every Cartesian grid point (None outside).
///
/// Adjacent grid points have adjacent chart coordinates, so each row seeds
/// Newton from its left neighbor and falls back to a full chart scan only
/// when re-entering the tube.
pub struct TubeCoords {
    pub coords: Vec<Option<(f64, f64)>>,
}

impl TubeCoords {
    pub fn build(map: &TubularMap, grid: crate::solver::Grid2D) -> Self {
        let chart = map.chart;
        let hw = map.halfwidth();
        let mut coords = vec![None; grid.len()];
        for i2 in 0..grid.n2 {
            let mut last: Option<f64> = None;
            for i1 in 0..grid.n1 {
                let x = grid.point(i1, i2);
                let entry = match last {
                    Some(s_seed) => newton_invert(chart, x, s_seed, hw)
                        .or_else(|| scan_invert(chart, x, hw)),
                    None => scan_invert(chart, x, hw),
                };
                last = entry.map(|(s, _)| s);
                coords[grid.idx(i1, i2)] = entry;
            }
        }
        Self { coords }
    }
}

/// Full-scan seed: nearest chart sample under box translations, then Newton.
fn scan_invert(chart: &InterfaceChart, x: [f64; 2], hw: f64) -> Option<(f64, f64)> {
    let mut best = (f64::INFINITY, 0usize);
    for (k, g) in chart.gamma.iter().enumerate() {
        let rep = crate::tubular::nearest_representative(x, *g, chart.box_l);
        let d2 = (rep[0] - g[0]).powi(2) + (rep[1] - g[1]).powi(2);
        if d2 < best.0 {
            best = (d2, k);
        }
    }
    if best.0 > hw * hw * 1.21 {
        return None;
    }
    newton_invert(chart, x, chart.s0 + best.1 as f64 * chart.ds, hw)
}

fn newton_invert(chart: &InterfaceChart, x: [f64; 2], s_seed: f64, hw: f64) -> Option<(f64, f64)> {
    let mut s = s_seed;
    // work with the box representative of x nearest the seed point
    let rep = crate::tubular::nearest_representative(x, chart.gamma_at(s), chart.box_l);
    for _ in 0..50 {
        let g = chart.gamma_at(s);
        let t = chart.tangent_at(s);
        let nu = chart.nu_at(s);
        let dx = [rep[0] - g[0], rep[1] - g[1]];
        let f = dx[0] * t[0] + dx[1] * t[1];
        let fp = -1.0 + chart.kappa_at(s) * (dx[0] * nu[0] + dx[1] * nu[1]);
        let step = f / fp;
        s -= step;
        if !chart.contains_s(s) {
            return None;
        }
        if f.abs() < 1e-12 && step.abs() < 1e-10 {
            let g = chart.gamma_at(s);
            let nu = chart.nu_at(s);
            let y = (rep[0] - g[0]) * nu[0] + (rep[1] - g[1]) * nu[1];
            let on_axis = ((rep[0] - g[0]) * t[0] + (rep[1] - g[1]) * t[1]).abs();
            if y.abs() < hw && on_axis < 1e-8 {
                return Some((chart.wrap_s(s), y));
            }
            return None;
        }
    }
    None
}

/// Sample a normal field at arbitrary (s, y) by separable cubic interpolation
/// (periodic in s when the chart wraps; zero beyond the y grid).
pub fn sample_normal(nf: &NormalField, s: f64, y: f64) -> [Complex64; 2] {
    let g = nf.grid;
    if y.abs() > g.y_max - 0.5 * g.dy() {
        return [Complex64::new(0.0, 0.0); 2];
    }
    let v = (y + g.y_max) / g.dy() - 0.5;
    let j1 = v.floor() as isize;
    let wy = cubic_weights(v - j1 as f64);
    let u = (s - g.s0) / g.ds;
    let periodic = g.s_period.is_some();
    let mut i1 = u.floor() as isize;
    if !periodic {
        i1 = i1.clamp(1, (g.n_s as isize - 3).max(1));
    }
    let ws = cubic_weights(u - i1 as f64);
    let n_s = g.n_s as isize;
    let mut acc = [Complex64::new(0.0, 0.0); 2];
    for (oj, &wj) in (-1..=2).zip(wy.iter()) {
        let j = (j1 + oj).clamp(0, g.n_y as isize - 1) as usize;
        let mut row_acc = [Complex64::new(0.0, 0.0); 2];
        for (oi, &wi) in (-1..=2).zip(ws.iter()) {
            let idx = i1 + oi;
            let i = if periodic {
                idx.rem_euclid(n_s) as usize
            } else {
                idx.clamp(0, n_s - 1) as usize
            };
            let val = &nf.values[g.idx(i, j)];
            row_acc[0] += val[0] * wi;
            row_acc[1] += val[1] * wi;
        }
        acc[0] += row_acc[0] * wj;
        acc[1] += row_acc[1] * wj;
    }
    acc
}

/// Inverse of `to_normal` on tube-supported fields: zero outside the tube,
/// `U_theta^dagger` then division by the Jacobian factor inside.
pub fn from_normal(
    nf: &NormalField,
    map: &TubularMap,
    grid: crate::solver::Grid2D,
    coords: &TubeCoords,
) -> Result<SpinorField> {
    if nf.rescaled {
        return Err(CoreError::Config(
            "from_normal expects an unrescaled field".into(),
        ));
    }
    let chart = map.chart;
    let mut out = SpinorField::zeros(grid, nf.eps);
    out.t = nf.t;
    for (i, entry) in coords.coords.iter().enumerate() {
        if let Some((s, y)) = entry {
            let phi = sample_normal(nf, *s, *y);
            let theta = chart.theta_at(*s);
            let kappa = chart.kappa_at(*s);
            let jac = (1.0 - y * kappa).sqrt();
            let u_mat = u_theta_matrix(theta);
            let v = mat_adjoint_apply(&u_mat, phi);
            out.values[i] = [v[0] / jac, v[1] / jac];
        }
    }
    let _ = map;
    Ok(out)
}

/// sqrt(eps) dilation: relabel y_j -> y_j / sqrt(eps) and scale amplitudes by
/// eps^(1/4). A pure relabeling, so the discrete norm is preserved exactly.
pub fn rescale(nf: &NormalField) -> Result<NormalField> {
    if nf.rescaled {
        return Err(CoreError::Config("field already rescaled".into()));
    }
    let root = nf.eps.sqrt();
    let mut grid = nf.grid;
    grid.y_max /= root;
    let amp = nf.eps.powf(0.25);
    Ok(NormalField {
        grid,
        values: nf
            .values
            .iter()
            .map(|v| [v[0] * amp, v[1] * amp])
            .collect(),
        eps: nf.eps,
        rescaled: true,
        t: nf.t,
    })
}

pub fn unrescale(nf: &NormalField) -> Result<NormalField> {
    if !nf.rescaled {
        return Err(CoreError::Config("field is not rescaled".into()));
    }
    let root = nf.eps.sqrt();
    let mut grid = nf.grid;
    grid.y_max *= root;
    let amp = nf.eps.powf(-0.25);
    Ok(NormalField {
        grid,
        values: nf
            .values
            .iter()
            .map(|v| [v[0] * amp, v[1] * amp])
            .collect(),
        eps: nf.eps,
        rescaled: false,
        t: nf.t,
    })
}

/// Discrete H^E (validation only): spectral d_s on the periodic chart,
/// zero-padded spectral d_y, exact m(Phi(s,y)) from the model.
pub fn apply_h_edge(
    nf: &NormalField,
    chart: &InterfaceChart,
    model: &MassModel,
    eps: f64,
) -> Result<NormalField> {
    if nf.rescaled {
        return Err(CoreError::Config("apply_h_edge expects unrescaled".into()));
    }
    let g = nf.grid;
    if g.s_period.is_none() {
        return Err(CoreError::Config(
            "H^E needs a periodic chart for spectral s-derivatives".into(),
        ));
    }
    let mut out = NormalField::zeros(g, nf.eps);
    out.t = nf.t;

    // spectral d_s (periodic), per y index and component
    let s_fft = FftPair::new(g.n_s);
    let ks = frequencies(g.n_s, g.s_period.unwrap());
    let mut ds1 = vec![Complex64::new(0.0, 0.0); g.len()];
    let mut ds2 = vec![Complex64::new(0.0, 0.0); g.len()];
    let mut buf = vec![Complex64::new(0.0, 0.0); g.n_s];
    for i_y in 0..g.n_y {
        for c in 0..2 {
            for i_s in 0..g.n_s {
                buf[i_s] = nf.values[g.idx(i_s, i_y)][c];
            }
            s_fft.forward(&mut buf);
            for (v, &k) in buf.iter_mut().zip(&ks) {
                *v *= Complex64::new(0.0, k);
            }
            s_fft.inverse(&mut buf);
            for i_s in 0..g.n_s {
                let dst = if c == 0 { &mut ds1 } else { &mut ds2 };
                dst[g.idx(i_s, i_y)] = buf[i_s];
            }
        }
    }

    // zero-padded spectral d_y, per s row and component
    let npad = 2 * g.n_y;
    let y_fft = FftPair::new(npad);
    let ky = frequencies(npad, g.dy() * npad as f64);
    let mut dy1 = vec![Complex64::new(0.0, 0.0); g.len()];
    let mut dy2 = vec![Complex64::new(0.0, 0.0); g.len()];
    let mut pbuf = vec![Complex64::new(0.0, 0.0); npad];
    for i_s in 0..g.n_s {
        for c in 0..2 {
            for v in pbuf.iter_mut() {
                *v = Complex64::new(0.0, 0.0);
            }
            for i_y in 0..g.n_y {
                pbuf[i_y] = nf.values[g.idx(i_s, i_y)][c];
            }
            y_fft.forward(&mut pbuf);
            for (v, &k) in pbuf.iter_mut().zip(&ky) {
                *v *= Complex64::new(0.0, k);
            }
            y_fft.inverse(&mut pbuf);
            for i_y in 0..g.n_y {
                let dst = if c == 0 { &mut dy1 } else { &mut dy2 };
                dst[g.idx(i_s, i_y)] = pbuf[i_y];
            }
        }
    }

    let mi = Complex64::new(0.0, -1.0); // D = -i d
    for i_s in 0..g.n_s {
        let s = g.s(i_s);
        let kappa = chart.kappa_at(s);
        let kappa_p = chart.kappa_prime_at(s);
        let gam = chart.gamma_at(s);
        let nu = chart.nu_at(s);
        for i_y in 0..g.n_y {
            let y = g.y(i_y);
            let idx = g.idx(i_s, i_y);
            let m = model.m([gam[0] + y * nu[0], gam[1] + y * nu[1]]);
            let jac = 1.0 - y * kappa;
            let v = nf.values[idx];
            let d_s = [mi * ds1[idx], mi * ds2[idx]];
            let d_y = [mi * dy1[idx], mi * dy2[idx]];
            // m sigma_1 v
            let t1 = [m * v[1], m * v[0]];
            // -eps D_y sigma_2 v ; sigma_2 w = (-i w_2, i w_1)
            let t2 = [
                -eps * Complex64::new(0.0, -1.0) * d_y[1],
                -eps * Complex64::new(0.0, 1.0) * d_y[0],
            ];
            // eps/(1 - y kappa) D_s sigma_3 v
            let t3 = [eps / jac * d_s[0], -(eps / jac) * d_s[1]];
            // -i eps y kappa' / (2 jac^2) sigma_3 v
            let cterm = Complex64::new(0.0, -eps * y * kappa_p / (2.0 * jac * jac));
            let t4 = [cterm * v[0], -cterm * v[1]];
            out.values[idx] = [
                t1[0] + t2[0] + t3[0] + t4[0],
                t1[1] + t2[1] + t3[1] + t4[1],
            ];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::trace_periodic_interface;
    use crate::solver::{apply_hamiltonian, Grid2D};

    const TAU: f64 = 2.0 * std::f64::consts::PI;

    fn straight_setup() -> (MassModel, InterfaceChart) {
        let model = MassModel::linear_periodic(8.0, 8.0);
        let chart = trace_periodic_interface(&model, [0.0, 0.0], 2e-3, 2.0).unwrap();
        (model, chart)
    }

    fn smooth_tube_field(
        grid: Grid2D,
        eps: f64,
        map: &TubularMap,
        width_s: f64,
        width_y: f64,
    ) -> SpinorField {
        // a smooth bump in normal coordinates pushed to Cartesian by hand
        let chart = map.chart;
        let mut f = SpinorField::zeros(grid, eps);
        for i2 in 0..grid.n2 {
            for i1 in 0..grid.n1 {
                let x = grid.point(i1, i2);
                // straight/sinusoidal charts both start near (0,0); take the
                // wrapped displacement field of a bump centered at s=1.0
                let c = chart.gamma_at(1.0);
                let d = grid.wrap_disp([x[0] - c[0], x[1] - c[1]]);
                let env = (-(d[0] * d[0]) / (2.0 * width_s * width_s)
                    - (d[1] * d[1]) / (2.0 * width_y * width_y))
                    .exp();
                f.values[grid.idx(i1, i2)] = [
                    Complex64::new(env, 0.0),
                    Complex64::new(0.0, 0.5 * env),
                ];
            }
        }
        f
    }

    #[test]
    fn constant_field_maps_by_u_theta() {
        // straight line (kappa = 0, theta = pi/2): U(1,0) = chi (i/sqrt2)(1,1)
        let (model, chart) = straight_setup();
        let _ = model;
        let map = TubularMap::new(&chart, 1.0).unwrap();
        let grid = Grid2D::new(8.0, 8.0, 64, 64).unwrap();
        let mut f = SpinorField::zeros(grid, 0.25);
        for v in f.values.iter_mut() {
            v[0] = Complex64::new(1.0, 0.0);
        }
        let ngrid = default_normal_grid(&map, 64, 64).unwrap();
        let nf = to_normal(&f, &map, ngrid).unwrap();
        let expect = Complex64::i() / 2.0_f64.sqrt();
        for i_s in [0usize, 17, 40] {
            for (i_y, _) in (0..ngrid.n_y).enumerate() {
                let y = ngrid.y(i_y);
                let chi = tube_cutoff(y, map.halfwidth());
                let v = nf.values[ngrid.idx(i_s, i_y)];
                assert!((v[0] - expect * chi).norm() < 1e-9);
                assert!((v[1] - expect * chi).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn norm_preserved_on_cutoff_support() {
        // kappa = 0 chart: V_Phi factor is 1, to_normal isometric on fields
        // supported where chi = 1
        let (_, chart) = straight_setup();
        let map = TubularMap::new(&chart, 1.0).unwrap();
        let grid = Grid2D::new(8.0, 8.0, 512, 512).unwrap();
        let f = smooth_tube_field(grid, 0.25, &map, 0.5, 0.25);
        let ngrid = default_normal_grid(&map, 256, 192).unwrap();
        let nf = to_normal(&f, &map, ngrid).unwrap();
        let rel = (nf.norm_sq() - f.norm_sq()).abs() / f.norm_sq();
        assert!(rel < 1e-6, "norm mismatch {rel:.2e}");
    }

    #[test]
    fn roundtrip_and_unitarity_on_sinusoidal() {
        // to_normal . from_normal = identity on fields supported where the
        // cutoff is 1, starting from an analytic profile in (s, y)
        let model = MassModel::sinusoidal_interface(0.5, TAU / 8.0, 8.0, 8.0).unwrap();
        let chart = trace_periodic_interface(&model, [0.0, 0.0], 2e-3, 10.0).unwrap();
        let map = TubularMap::new(&chart, 1.0).unwrap();
        let grid = Grid2D::new(8.0, 8.0, 1024, 1024).unwrap();
        let ngrid = default_normal_grid(&map, 512, 384).unwrap();
        let mut phi = NormalField::zeros(ngrid, 0.25);
        let profile = |s: f64, y: f64| -> f64 {
            let ds = chart.wrapped_s_distance(s, 2.0);
            (-(ds * ds) / (2.0 * 0.5 * 0.5) - (y * y) / (2.0 * 0.15 * 0.15)).exp()
        };
        for i_s in 0..ngrid.n_s {
            for i_y in 0..ngrid.n_y {
                let env = profile(ngrid.s(i_s), ngrid.y(i_y));
                phi.values[ngrid.idx(i_s, i_y)] =
                    [Complex64::new(env, 0.0), Complex64::new(0.0, 0.5 * env)];
            }
        }
        let coords = TubeCoords::build(&map, grid);
        let psi = from_normal(&phi, &map, grid, &coords).unwrap();
        // unitarity: from_normal inverts the Jacobian weight, so norms agree
        let rel_norm = (psi.norm_sq() - phi.norm_sq()).abs() / phi.norm_sq();
        assert!(rel_norm < 1e-6, "norm mismatch {rel_norm:.2e}");
        let back = to_normal(&psi, &map, ngrid).unwrap();
        let mut err = 0.0;
        for (a, b) in back.values.iter().zip(&phi.values) {
            err += (a[0] - b[0]).norm_sqr() + (a[1] - b[1]).norm_sqr();
        }
        let rel = (err * ngrid.ds * ngrid.dy()).sqrt() / phi.norm();
        assert!(rel < 1e-6, "roundtrip error {rel:.2e}");
    }

    #[test]
    fn zero_field_roundtrip() {
        let (_, chart) = straight_setup();
        let map = TubularMap::new(&chart, 1.0).unwrap();
        let grid = Grid2D::new(8.0, 8.0, 32, 32).unwrap();
        let ngrid = default_normal_grid(&map, 32, 32).unwrap();
        let nf = NormalField::zeros(ngrid, 0.25);
        let coords = TubeCoords::build(&map, grid);
        let f = from_normal(&nf, &map, grid, &coords).unwrap();
        assert_eq!(f.norm_sq(), 0.0);
    }

    #[test]
    fn rescale_gaussian_and_exact_inverse() {
        let (_, chart) = straight_setup();
        let map = TubularMap::new(&chart, 1.0).unwrap();
        let eps = 0.01;
        let ngrid = default_normal_grid(&map, 32, 256).unwrap();
        let mut nf = NormalField::zeros(ngrid, eps);
        let norm_c = eps.powf(-0.25) * std::f64::consts::PI.powf(-0.25);
        for i_s in 0..ngrid.n_s {
            for i_y in 0..ngrid.n_y {
                let y = ngrid.y(i_y);
                nf.values[ngrid.idx(i_s, i_y)][1] =
                    Complex64::new(norm_c * (-y * y / (2.0 * eps)).exp(), 0.0);
            }
        }
        let re = rescale(&nf).unwrap();
        // e^{-y^2/(2 eps)} eps^{-1/4} pi^{-1/4} -> e^{-Y^2/2} pi^{-1/4}
        for i_y in 0..re.grid.n_y {
            let yy = re.grid.y(i_y);
            let expect = std::f64::consts::PI.powf(-0.25) * (-yy * yy / 2.0).exp();
            let got = re.values[re.grid.idx(3, i_y)][1];
            assert!((got.re - expect).abs() < 1e-12);
        }
        assert!((re.norm_sq() - nf.norm_sq()).abs() < 1e-12 * nf.norm_sq());
        let back = unrescale(&re).unwrap();
        let mut worst = 0.0_f64;
        for (a, b) in back.values.iter().zip(&nf.values) {
            worst = worst.max((a[1] - b[1]).norm());
        }
        assert!(worst < 1e-10);
    }

    #[test]
    fn intertwining_on_sinusoidal_chart() {
        // || U(H psi) - H^E(U psi) || / ||H psi|| small, improving with grid
        let model = MassModel::sinusoidal_interface(0.5, TAU / 8.0, 8.0, 8.0).unwrap();
        let chart = trace_periodic_interface(&model, [0.0, 0.0], 1e-3, 10.0).unwrap();
        let map = TubularMap::new(&chart, 1.0).unwrap();
        let eps = 0.05;
        let run = |n_cart: usize, n_s: usize, n_y: usize| -> f64 {
            let grid = Grid2D::new(8.0, 8.0, n_cart, n_cart).unwrap();
            // smooth field supported well inside the tube (chi = 1 zone)
            let f = smooth_tube_field(grid, eps, &map, 0.4, 0.18);
            let ngrid = default_normal_grid(&map, n_s, n_y).unwrap();
            let hf = apply_hamiltonian(&f, &model);
            let lhs = to_normal(&hf, &map, ngrid).unwrap();
            let uf = to_normal(&f, &map, ngrid).unwrap();
            let rhs = apply_h_edge(&uf, &chart, &model, eps).unwrap();
            let mut err = 0.0;
            for (a, b) in lhs.values.iter().zip(&rhs.values) {
                err += (a[0] - b[0]).norm_sqr() + (a[1] - b[1]).norm_sqr();
            }
            (err * ngrid.ds * ngrid.dy()).sqrt() / lhs.norm()
        };
        let coarse = run(256, 256, 96);
        let fine = run(512, 512, 192);
        assert!(fine < 1e-4, "intertwining residual {fine:.2e}");
        assert!(fine < coarse, "no improvement: {coarse:.2e} -> {fine:.2e}");
    }

    #[test]
    fn h_edge_straight_line_mode_relation() {
        // on the straight chart H^E (0, h0(y/sqrt(eps))) with no s-dependence
        // reduces to the n = 0 eigenrelation at sigma = 0: H^E u = 0
        let (model, chart) = straight_setup();
        let map = TubularMap::new(&chart, 1.0).unwrap();
        let eps = 0.01;
        let ngrid = default_normal_grid(&map, 32, 512).unwrap();
        let mut nf = NormalField::zeros(ngrid, eps);
        let root = eps.sqrt();
        for i_s in 0..ngrid.n_s {
            for i_y in 0..ngrid.n_y {
                let y = ngrid.y(i_y);
                nf.values[ngrid.idx(i_s, i_y)][1] =
                    Complex64::new((-y * y / (2.0 * eps)).exp() / root.sqrt(), 0.0);
            }
        }
        let h = apply_h_edge(&nf, &chart, &model, eps).unwrap();
        let res = h.norm() / nf.norm();
        // m(Phi) = sin-profile deviates from y at O(y^3): residual O(eps)
        assert!(res < 0.05 * eps.sqrt(), "H^E edge-mode residual {res:.2e}");
    }
}
