//! Phase-space views: the scale-h Husimi (anti-Wick) transform, the Wigner
//! transform of spinor fields at scale eps, quadratic position observables,
//! and the two-scale mode-density extractor that projects a solution snapshot
//! onto interface modes, producing empirical densities gamma_n(s, sigma).

use crate::error::{CoreError, Result};
use crate::fft::{frequencies, FftPair};
use crate::hermite::eigenmode;
use crate::normal_form::{rescale, to_normal, NormalGrid};
use crate::solver::SpinorField;
use crate::tubular::TubularMap;
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub min: f64,
    pub step: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, n: usize) -> Self {
        Self {
            min,
            step: if n > 1 { (max - min) / (n - 1) as f64 } else { 0.0 },
            n,
        }
    }

    pub fn value(&self, i: usize) -> f64 {
        self.min + i as f64 * self.step
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.value(i)).collect()
    }
}

/// Non-negative density on an (s, sigma) lattice (row-major, sigma fastest).
#[derive(Debug, Clone)]
pub struct PhaseSpaceDensity {
    pub s_axis: Axis,
    pub sigma_axis: Axis,
    pub values: Vec<f64>,
    /// concentration scale the density lives at (eps or sqrt(eps))
    pub scale: f64,
    pub mode: Option<i32>,
}

impl PhaseSpaceDensity {
    pub fn zeros(s_axis: Axis, sigma_axis: Axis, scale: f64, mode: Option<i32>) -> Self {
        Self {
            s_axis,
            sigma_axis,
            values: vec![0.0; s_axis.n * sigma_axis.n],
            scale,
            mode,
        }
    }

    #[inline]
    pub fn idx(&self, i_s: usize, i_sig: usize) -> usize {
        i_s * self.sigma_axis.n + i_sig
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.s_axis.step * self.sigma_axis.step
    }

    /// Mass-weighted mean of (s, sigma).
    pub fn centroid(&self) -> (f64, f64) {
        let mut m = 0.0;
        let mut cs = 0.0;
        let mut cg = 0.0;
        for i_s in 0..self.s_axis.n {
            for i_sig in 0..self.sigma_axis.n {
                let w = self.values[self.idx(i_s, i_sig)];
                m += w;
                cs += w * self.s_axis.value(i_s);
                cg += w * self.sigma_axis.value(i_sig);
            }
        }
        (cs / m, cg / m)
    }

    /// Marginal rows (value, integrated mass) along each axis.
    pub fn marginals(&self) -> (Vec<(f64, f64)>, Vec<(f64, f64)>) {
        let mut s_rows = Vec::with_capacity(self.s_axis.n);
        for i_s in 0..self.s_axis.n {
            let mut acc = 0.0;
            for i_sig in 0..self.sigma_axis.n {
                acc += self.values[self.idx(i_s, i_sig)];
            }
            s_rows.push((self.s_axis.value(i_s), acc * self.sigma_axis.step));
        }
        let mut g_rows = Vec::with_capacity(self.sigma_axis.n);
        for i_sig in 0..self.sigma_axis.n {
            let mut acc = 0.0;
            for i_s in 0..self.s_axis.n {
                acc += self.values[self.idx(i_s, i_sig)];
            }
            g_rows.push((self.sigma_axis.value(i_sig), acc * self.s_axis.step));
        }
        (s_rows, g_rows)
    }

    /// Centroid in s computed on wrapped displacements from a reference
    /// (for densities on a periodic s axis).
    pub fn centroid_s_near(&self, s_ref: f64, period: f64) -> f64 {
        let mut m = 0.0;
        let mut acc = 0.0;
        for i_s in 0..self.s_axis.n {
            let mut row = 0.0;
            for i_sig in 0..self.sigma_axis.n {
                row += self.values[self.idx(i_s, i_sig)];
            }
            let d = (self.s_axis.value(i_s) - s_ref + period / 2.0).rem_euclid(period)
                - period / 2.0;
            acc += row * d;
            m += row;
        }
        s_ref + acc / m
    }
}

/// Scale-h Husimi transform of 1D complex samples:
/// `H(s, sigma) = |<u, phi_{s,sigma}>|^2 / (2 pi h)` with the coherent state
/// `phi(x) = (pi h)^{-1/4} e^{i sigma (x-s)/h} e^{-(x-s)^2/(2h)}`.
/// Direct windowed sums (the Gaussian is truncated at 8.5 sigma).
pub fn husimi_1d(
    u: &[Complex64],
    x0: f64,
    dx: f64,
    h: f64,
    s_axis: Axis,
    sigma_axis: Axis,
) -> Result<PhaseSpaceDensity> {
    if h <= 0.0 {
        return Err(CoreError::Config("husimi scale must be positive".into()));
    }
    // band-limit guard: the sigma window must capture the spectrum
    let n = u.len();
    let pair = FftPair::new(n);
    let mut spec = u.to_vec();
    pair.forward(&mut spec);
    let ks = frequencies(n, dx * n as f64);
    let mut inside = 0.0;
    let mut total = 0.0;
    for (v, &k) in spec.iter().zip(&ks) {
        let sigma = h * k;
        total += v.norm_sqr();
        if sigma >= sigma_axis.min - 1e-12
            && sigma <= sigma_axis.value(sigma_axis.n - 1) + 1e-12
        {
            inside += v.norm_sqr();
        }
    }
    if total > 0.0 && inside / total < 0.99 {
        return Err(CoreError::Range(format!(
            "sigma window clips {:.2}% of the spectral mass",
            100.0 * (1.0 - inside / total)
        )));
    }

    let mut out = PhaseSpaceDensity::zeros(s_axis, sigma_axis, h, None);
    let width = h.sqrt();
    let reach = (8.5 * width / dx).ceil() as isize;
    let norm_c = (std::f64::consts::PI * h).powf(-0.25);
    for i_s in 0..s_axis.n {
        let s = s_axis.value(i_s);
        let j0 = ((s - x0) / dx).round() as isize;
        for i_sig in 0..sigma_axis.n {
            let sigma = sigma_axis.value(i_sig);
            let mut acc = Complex64::new(0.0, 0.0);
            for j in (j0 - reach)..=(j0 + reach) {
                if j < 0 || j >= n as isize {
                    continue;
                }
                let x = x0 + j as f64 * dx;
                let d = x - s;
                let w = norm_c * (-d * d / (2.0 * h)).exp();
                let phase = Complex64::new(0.0, -sigma * d / h).exp();
                acc += u[j as usize] * w * phase;
            }
            acc *= dx;
            let idx = out.idx(i_s, i_sig);
            out.values[idx] = acc.norm_sqr() / (2.0 * std::f64::consts::PI * h);
        }
    }
    Ok(out)
}

/// Wigner transform of a spinor field at scale eps on a coarse phase grid.
/// Correlations are sampled at exact grid offsets r (no interpolation):
/// `W(x, xi) = (dx dy / (pi eps))^2 sum_r e^{2 i xi.r/eps} psi(x+r) (x) psi(x-r)*`
/// evaluated by FFT over r, so xi ranges over `eps/2` times the r-grid
/// frequencies. Stores the trace channel; `n_corr` points per direction.
pub struct Wigner2d {
    pub x1_axis: Axis,
    pub x2_axis: Axis,
    pub xi1: Vec<f64>,
    pub xi2: Vec<f64>,
    /// trace values indexed (x-major) [ix][ixi] with ixi = i2*n_corr+i1
    pub trace: Vec<f64>,
}

impl Wigner2d {
    pub fn xi_cell(&self) -> f64 {
        (self.xi1[1] - self.xi1[0]).abs()
    }

    /// Total discrete mass sum W dxi^2 dx^2 over the coarse x lattice.
    pub fn mass(&self, dxi: f64, dx_cell: f64) -> f64 {
        self.trace.iter().sum::<f64>() * dxi * dxi * dx_cell * dx_cell
    }
}

pub fn wigner_2d(
    field: &SpinorField,
    x1_axis: Axis,
    x2_axis: Axis,
    n_corr: usize,
) -> Result<Wigner2d> {
    let g = field.grid;
    let total = x1_axis.n * x2_axis.n * n_corr * n_corr;
    if total > 64usize.pow(4) {
        return Err(CoreError::Resolution(format!(
            "phase grid too large: {total} > 64^4 samples"
        )));
    }
    if !n_corr.is_power_of_two() {
        return Err(CoreError::Config("n_corr must be a power of two".into()));
    }
    let eps = field.eps;
    // xi bins: eps/2 times the FFT frequencies of the r-grid (spacing dx)
    let freq1 = frequencies(n_corr, n_corr as f64 * g.dx1());
    let freq2 = frequencies(n_corr, n_corr as f64 * g.dx2());
    let xi1: Vec<f64> = freq1.iter().map(|&w| 0.5 * eps * w).collect();
    let xi2: Vec<f64> = freq2.iter().map(|&w| 0.5 * eps * w).collect();
    let pair = FftPair::new(n_corr);
    let mut trace = vec![0.0; total];
    let mut corr = vec![Complex64::new(0.0, 0.0); n_corr * n_corr];
    let pref = (g.dx1() * g.dx2()) / (std::f64::consts::PI * eps).powi(2);
    let half = n_corr as isize / 2;
    for ix2 in 0..x2_axis.n {
        for ix1 in 0..x1_axis.n {
            // nearest grid point to the requested coarse x
            let c1 = (x1_axis.value(ix1) / g.dx1()).round() as isize;
            let c2 = (x2_axis.value(ix2) / g.dx2()).round() as isize;
            for j2 in 0..n_corr as isize {
                let r2 = j2 - half;
                for j1 in 0..n_corr as isize {
                    let r1 = j1 - half;
                    let ip = g.idx(
                        (c1 + r1).rem_euclid(g.n1 as isize) as usize,
                        (c2 + r2).rem_euclid(g.n2 as isize) as usize,
                    );
                    let im = g.idx(
                        (c1 - r1).rem_euclid(g.n1 as isize) as usize,
                        (c2 - r2).rem_euclid(g.n2 as isize) as usize,
                    );
                    let vp = &field.values[ip];
                    let vm = &field.values[im];
                    corr[(j1 as usize) + n_corr * (j2 as usize)] =
                        vp[0] * vm[0].conj() + vp[1] * vm[1].conj();
                }
            }
            // forward FFT realizes the e^{-i omega r} kernel (the sign that
            // pairs with the Weyl quantization so plane waves peak at +xi0);
            // the r-origin sits at bin n/2, contributing a (-1)^m per axis
            for row in corr.chunks_exact_mut(n_corr) {
                pair.forward(row);
            }
            let mut col = vec![Complex64::new(0.0, 0.0); n_corr];
            for j1 in 0..n_corr {
                for j2 in 0..n_corr {
                    col[j2] = corr[j1 + n_corr * j2];
                }
                pair.forward(&mut col);
                for j2 in 0..n_corr {
                    corr[j1 + n_corr * j2] = col[j2];
                }
            }
            let scale = pref;
            let base = (ix2 * x1_axis.n + ix1) * n_corr * n_corr;
            for m2 in 0..n_corr {
                for m1 in 0..n_corr {
                    let sgn = if (m1 + m2) % 2 == 0 { 1.0 } else { -1.0 };
                    trace[base + m2 * n_corr + m1] =
                        corr[m1 + n_corr * m2].re * scale * sgn;
                }
            }
        }
    }
    Ok(Wigner2d {
        x1_axis,
        x2_axis,
        xi1,
        xi2,
        trace,
    })
}

/// Quadratic observable <a psi, psi> for a matrix-valued position symbol.
pub fn observable_pairing<F>(field: &SpinorField, symbol: F) -> Complex64
where
    F: Fn([f64; 2]) -> [[Complex64; 2]; 2],
{
    let g = field.grid;
    let mut acc = Complex64::new(0.0, 0.0);
    for i2 in 0..g.n2 {
        for i1 in 0..g.n1 {
            let v = &field.values[g.idx(i1, i2)];
            let a = symbol(g.point(i1, i2));
            let av = [
                a[0][0] * v[0] + a[0][1] * v[1],
                a[1][0] * v[0] + a[1][1] * v[1],
            ];
            acc += av[0] * v[0].conj() + av[1] * v[1].conj();
        }
    }
    acc * g.cell_area()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtractStatus {
    Complete,
    /// less than 99% of the field mass sits inside the tube
    PartialTubeMass(f64),
}

/// Empirical mode density gamma_n(s0, sigma0) =
/// `|<u, G_{s0,sigma0} (x) g_n^{s0,sigma0}>|^2 / (2 pi sqrt(eps))`
/// with u the rescaled normal-form field, G the sqrt(eps)-scale coherent
/// state in s and g_n the interface eigenmode at the local r(s0).
#[allow(clippy::too_many_arguments)]
pub fn extract_mode_density(
    field: &SpinorField,
    map: &TubularMap,
    ngrid: NormalGrid,
    n: i32,
    s_axis: Axis,
    sigma_axis: Axis,
) -> Result<(PhaseSpaceDensity, ExtractStatus)> {
    let nf = to_normal(field, map, ngrid)?;
    let tube_mass = nf.norm_sq();
    let total = field.norm_sq();
    let status = if tube_mass < 0.99 * total {
        ExtractStatus::PartialTubeMass(tube_mass / total)
    } else {
        ExtractStatus::Complete
    };
    let u = rescale(&nf)?;
    let density = extract_from_rescaled(&u, map, n, s_axis, sigma_axis);
    Ok((density, status))
}

/// Mode extraction from an already rescaled normal field.
pub fn extract_from_rescaled(
    u: &crate::normal_form::NormalField,
    map: &TubularMap,
    n: i32,
    s_axis: Axis,
    sigma_axis: Axis,
) -> PhaseSpaceDensity {
    let chart = map.chart;
    let g = u.grid;
    let eps = u.eps;
    let root = eps.sqrt();
    let n_y = g.n_y;
    let dy = g.dy();
    let ys: Vec<f64> = (0..n_y).map(|j| g.y(j)).collect();
    let mut out = PhaseSpaceDensity::zeros(s_axis, sigma_axis, root, Some(n));
    // coherent-state width in s is eps^(1/4); truncate at 8.5 widths
    let width = root.sqrt();
    let reach = (8.5 * width / g.ds).ceil() as isize;
    let norm_c = (std::f64::consts::PI * root).powf(-0.25);
    let periodic = g.s_period.is_some();
    let n_s = g.n_s as isize;
    for i_s0 in 0..s_axis.n {
        let s0 = s_axis.value(i_s0);
        let r0 = chart.r_at(s0);
        let j0 = ((s0 - g.s0) / g.ds).round() as isize;
        for i_sig in 0..sigma_axis.n {
            let sigma0 = sigma_axis.value(i_sig);
            let mode = eigenmode(&ys, dy, n, r0, sigma0);
            // contract y first at fixed s, then the coherent s-window
            let mut acc = Complex64::new(0.0, 0.0);
            for j in (j0 - reach)..=(j0 + reach) {
                let i = if periodic {
                    j.rem_euclid(n_s) as usize
                } else if j < 0 || j >= n_s {
                    continue;
                } else {
                    j as usize
                };
                let s = if periodic {
                    // use the unwrapped coordinate for the window weight
                    g.s0 + j as f64 * g.ds
                } else {
                    g.s(i)
                };
                let d = s - s0;
                let wgt = norm_c * (-d * d / (2.0 * root)).exp();
                let phase = Complex64::new(0.0, -sigma0 * d / root).exp();
                let mut ym = Complex64::new(0.0, 0.0);
                for jy in 0..n_y {
                    let v = &u.values[g.idx(i, jy)];
                    ym += v[0] * mode.g1[jy] + v[1] * mode.g2[jy];
                }
                acc += ym * dy * wgt * phase;
            }
            acc *= g.ds;
            let idx = out.idx(i_s0, i_sig);
            out.values[idx] = acc.norm_sqr() / (2.0 * std::f64::consts::PI * root);
        }
    }
    out
}
