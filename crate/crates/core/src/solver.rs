//! Split-step Fourier evolution of the Dirac system
//! `i eps d_t psi = (m(x) sigma_3 + eps D . sigma) psi` on a periodic box.
//!
//! Strang order: half mass phase, full kinetic step in Fourier space, half
//! mass phase. The mass step is the exact 2x2 exponential
//! `exp(-i dt m sigma_3 / (2 eps))`; the kinetic factor per discrete
//! frequency is `cos(dt|k|) I - i sin(dt|k|) (k.sigma)/|k|` (the eps in the
//! symbol cancels the eps in the equation), with the identity at k = 0.
//! Every factor is unitary, so the discrete norm drifts only by roundoff.

use crate::error::{CoreError, Result};
use crate::fft::{frequencies, FftPair};
use crate::mass::MassModel;
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    pub l1: f64,
    pub l2: f64,
    pub n1: usize,
    pub n2: usize,
}

impl Grid2D {
    pub fn new(l1: f64, l2: f64, n1: usize, n2: usize) -> Result<Self> {
        if !n1.is_power_of_two() || !n2.is_power_of_two() {
            return Err(CoreError::Config(format!(
                "grid sizes must be powers of two, got {n1} x {n2}"
            )));
        }
        Ok(Self { l1, l2, n1, n2 })
    }

    #[inline]
    pub fn dx1(&self) -> f64 {
        self.l1 / self.n1 as f64
    }

    #[inline]
    pub fn dx2(&self) -> f64 {
        self.l2 / self.n2 as f64
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i1: usize, i2: usize) -> usize {
        i2 * self.n1 + i1
    }

    #[inline]
    pub fn point(&self, i1: usize, i2: usize) -> [f64; 2] {
        [i1 as f64 * self.dx1(), i2 as f64 * self.dx2()]
    }

    pub fn cell_area(&self) -> f64 {
        self.dx1() * self.dx2()
    }

    /// dx <= sqrt(eps)/4 so sqrt(eps)-scale concentration is resolved.
    pub fn resolves(&self, eps: f64) -> bool {
        let bound = eps.sqrt() / 4.0;
        self.dx1() <= bound + 1e-15 && self.dx2() <= bound + 1e-15
    }

    /// Wrap a displacement to the principal cell centered at zero.
    pub fn wrap_disp(&self, d: [f64; 2]) -> [f64; 2] {
        [
            (d[0] + self.l1 / 2.0).rem_euclid(self.l1) - self.l1 / 2.0,
            (d[1] + self.l2 / 2.0).rem_euclid(self.l2) - self.l2 / 2.0,
        ]
    }
}

/// Complex 2-spinor field sampled on a periodic grid (row-major, x1 fastest).
#[derive(Debug, Clone)]
pub struct SpinorField {
    pub grid: Grid2D,
    pub values: Vec<[Complex64; 2]>,
    pub eps: f64,
    pub t: f64,
}

impl SpinorField {
    pub fn zeros(grid: Grid2D, eps: f64) -> Self {
        Self {
            grid,
            values: vec![[Complex64::new(0.0, 0.0); 2]; grid.len()],
            eps,
            t: 0.0,
        }
    }

    pub fn norm_sq(&self) -> f64 {
        let a = self.grid.cell_area();
        self.values
            .iter()
            .map(|v| v[0].norm_sqr() + v[1].norm_sqr())
            .sum::<f64>()
            * a
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|v| v[0].is_finite() && v[1].is_finite())
    }

    pub fn scale(&mut self, c: f64) {
        for v in self.values.iter_mut() {
            v[0] *= c;
            v[1] *= c;
        }
    }

    /// |psi|^2 mass inside an axis-aligned box [a1,b1]x[a2,b2] (wrapped).
    pub fn mass_in_box(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        let g = self.grid;
        let mut acc = 0.0;
        for i2 in 0..g.n2 {
            for i1 in 0..g.n1 {
                let p = g.point(i1, i2);
                let in1 = wrapped_in(p[0], a[0], b[0], g.l1);
                let in2 = wrapped_in(p[1], a[1], b[1], g.l2);
                if in1 && in2 {
                    let v = &self.values[g.idx(i1, i2)];
                    acc += v[0].norm_sqr() + v[1].norm_sqr();
                }
            }
        }
        acc * g.cell_area()
    }

    /// Centroid of |psi|^2 relative to a reference point, using wrapped
    /// displacements (meaningful for fields concentrated near the reference).
    pub fn centroid_near(&self, x_ref: [f64; 2]) -> [f64; 2] {
        let g = self.grid;
        let mut acc = [0.0, 0.0];
        let mut mass = 0.0;
        for i2 in 0..g.n2 {
            for i1 in 0..g.n1 {
                let v = &self.values[g.idx(i1, i2)];
                let w = v[0].norm_sqr() + v[1].norm_sqr();
                let p = g.point(i1, i2);
                let d = g.wrap_disp([p[0] - x_ref[0], p[1] - x_ref[1]]);
                acc[0] += w * d[0];
                acc[1] += w * d[1];
                mass += w;
            }
        }
        [x_ref[0] + acc[0] / mass, x_ref[1] + acc[1] / mass]
    }
}

fn wrapped_in(x: f64, a: f64, b: f64, l: f64) -> bool {
    if b - a >= l {
        return true;
    }
    let u = (x - a).rem_euclid(l);
    u <= (b - a).rem_euclid(l)
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    pub snapshot_stride: usize,
    /// Radii R for the high-frequency diagnostic (mass beyond |xi| > R/eps).
    pub hf_radii: Vec<f64>,
    /// Optional spatial box for the mass-outside diagnostic.
    pub inside_box: Option<([f64; 2], [f64; 2])>,
}

impl SolverConfig {
    pub fn validate(&self, eps: f64) -> Result<()> {
        if self.dt <= 0.0 || self.t_end < 0.0 {
            return Err(CoreError::Config("dt and t_end must be positive".into()));
        }
        if self.dt > eps / 4.0 + 1e-15 {
            return Err(CoreError::Config(format!(
                "dt = {} exceeds eps/4 = {}",
                self.dt,
                eps / 4.0
            )));
        }
        Ok(())
    }
}

/// Precomputed Strang factors for one (grid, model, eps, dt).
pub struct DiracPropagator {
    grid: Grid2D,
    eps: f64,
    pub dt: f64,
    /// diagonal of exp(-i dt m sigma_3 / (2 eps)) per grid point
    half_mass: Vec<[Complex64; 2]>,
    /// kinetic factor per frequency: [[cos, b],[c, cos]] with
    /// b = -i sin (k1 - i k2)/|k|, c = -i sin (k1 + i k2)/|k|
    kin_diag: Vec<f64>,
    kin_off: Vec<Complex64>,
    fft1: FftPair,
    fft2: FftPair,
}

impl DiracPropagator {
    pub fn new(grid: Grid2D, model: &MassModel, eps: f64, dt: f64) -> Self {
        let mut half_mass = Vec::with_capacity(grid.len());
        for i2 in 0..grid.n2 {
            for i1 in 0..grid.n1 {
                let m = model.m(grid.point(i1, i2));
                let phase = Complex64::new(0.0, -dt * m / (2.0 * eps)).exp();
                half_mass.push([phase, phase.conj()]);
            }
        }
        let k1 = frequencies(grid.n1, grid.l1);
        let k2 = frequencies(grid.n2, grid.l2);
        let mut kin_diag = Vec::with_capacity(grid.len());
        let mut kin_off = Vec::with_capacity(2 * grid.len());
        for &q2 in &k2 {
            for &q1 in &k1 {
                let kn = (q1 * q1 + q2 * q2).sqrt();
                if kn == 0.0 {
                    kin_diag.push(1.0);
                    kin_off.push(Complex64::new(0.0, 0.0));
                    kin_off.push(Complex64::new(0.0, 0.0));
                } else {
                    let (s, c) = (dt * kn).sin_cos();
                    kin_diag.push(c);
                    let msin = Complex64::new(0.0, -s / kn);
                    kin_off.push(msin * Complex64::new(q1, -q2)); // upper
                    kin_off.push(msin * Complex64::new(q1, q2)); // lower
                }
            }
        }
        Self {
            grid,
            eps,
            dt,
            half_mass,
            kin_diag,
            kin_off,
            fft1: FftPair::new(grid.n1),
            fft2: FftPair::new(grid.n2),
        }
    }

    fn apply_half_mass(&self, field: &mut SpinorField) {
        for (v, hm) in field.values.iter_mut().zip(&self.half_mass) {
            v[0] *= hm[0];
            v[1] *= hm[1];
        }
    }

    fn fft2d(&self, comp: &mut [Complex64], inverse: bool) {
        let g = self.grid;
        for row in comp.chunks_exact_mut(g.n1) {
            if inverse {
                self.fft1.inverse(row);
            } else {
                self.fft1.forward(row);
            }
        }
        let mut col = vec![Complex64::new(0.0, 0.0); g.n2];
        for i1 in 0..g.n1 {
            for i2 in 0..g.n2 {
                col[i2] = comp[g.idx(i1, i2)];
            }
            if inverse {
                self.fft2.inverse(&mut col);
            } else {
                self.fft2.forward(&mut col);
            }
            for i2 in 0..g.n2 {
                comp[g.idx(i1, i2)] = col[i2];
            }
        }
    }

    /// One Strang step (mass/2, kinetic, mass/2); advances field.t by dt.
    pub fn step(&self, field: &mut SpinorField, c1: &mut Vec<Complex64>, c2: &mut Vec<Complex64>) {
        self.apply_half_mass(field);
        c1.clear();
        c2.clear();
        c1.extend(field.values.iter().map(|v| v[0]));
        c2.extend(field.values.iter().map(|v| v[1]));
        self.fft2d(c1, false);
        self.fft2d(c2, false);
        for i in 0..self.grid.len() {
            let a = c1[i];
            let b = c2[i];
            let d = self.kin_diag[i];
            c1[i] = a * d + b * self.kin_off[2 * i];
            c2[i] = a * self.kin_off[2 * i + 1] + b * d;
        }
        self.fft2d(c1, true);
        self.fft2d(c2, true);
        for (i, v) in field.values.iter_mut().enumerate() {
            v[0] = c1[i];
            v[1] = c2[i];
        }
        self.apply_half_mass(field);
        field.t += self.dt;
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }
}

/// Fourier-space mass fraction beyond 0.9 of the grid Nyquist frequency.
/// Exceeding 1e-8 means the grid does not resolve the field.
pub fn nyquist_fraction(field: &SpinorField) -> f64 {
    let g = field.grid;
    let mut c1: Vec<Complex64> = field.values.iter().map(|v| v[0]).collect();
    let mut c2: Vec<Complex64> = field.values.iter().map(|v| v[1]).collect();
    let prop = DiracPropagator::new(g, &MassModel::linear_periodic(g.l1, g.l2), 1.0, 0.1);
    prop.fft2d(&mut c1, false);
    prop.fft2d(&mut c2, false);
    let k1 = frequencies(g.n1, g.l1);
    let k2 = frequencies(g.n2, g.l2);
    let k1max = k1.iter().fold(0.0_f64, |a, &k| a.max(k.abs()));
    let k2max = k2.iter().fold(0.0_f64, |a, &k| a.max(k.abs()));
    let mut outer = 0.0;
    let mut total = 0.0;
    for i2 in 0..g.n2 {
        for i1 in 0..g.n1 {
            let w = c1[g.idx(i1, i2)].norm_sqr() + c2[g.idx(i1, i2)].norm_sqr();
            total += w;
            if k1[i1].abs() > 0.9 * k1max || k2[i2].abs() > 0.9 * k2max {
                outer += w;
            }
        }
    }
    if total == 0.0 {
        0.0
    } else {
        outer / total
    }
}

/// Fraction of Fourier mass beyond |xi| > radius/eps (xi = eps k).
pub fn high_frequency_fraction(field: &SpinorField, radius: f64) -> f64 {
    let g = field.grid;
    let mut c1: Vec<Complex64> = field.values.iter().map(|v| v[0]).collect();
    let mut c2: Vec<Complex64> = field.values.iter().map(|v| v[1]).collect();
    let prop = DiracPropagator::new(g, &MassModel::linear_periodic(g.l1, g.l2), 1.0, 0.1);
    prop.fft2d(&mut c1, false);
    prop.fft2d(&mut c2, false);
    let k1 = frequencies(g.n1, g.l1);
    let k2 = frequencies(g.n2, g.l2);
    let kcut = radius / field.eps;
    let mut outer = 0.0;
    let mut total = 0.0;
    for i2 in 0..g.n2 {
        for i1 in 0..g.n1 {
            let w = c1[g.idx(i1, i2)].norm_sqr() + c2[g.idx(i1, i2)].norm_sqr();
            total += w;
            if k1[i1] * k1[i1] + k2[i2] * k2[i2] > kcut * kcut {
                outer += w;
            }
        }
    }
    if total == 0.0 {
        0.0
    } else {
        outer / total
    }
}

/// Apply the Hamiltonian H = m sigma_3 + eps (D1 sigma_1 + D2 sigma_2)
/// (kinetic part exactly in Fourier space).
pub fn apply_hamiltonian(field: &SpinorField, model: &MassModel) -> SpinorField {
    let g = field.grid;
    let eps = field.eps;
    let prop = DiracPropagator::new(g, model, 1.0, 0.1);
    let mut c1: Vec<Complex64> = field.values.iter().map(|v| v[0]).collect();
    let mut c2: Vec<Complex64> = field.values.iter().map(|v| v[1]).collect();
    prop.fft2d(&mut c1, false);
    prop.fft2d(&mut c2, false);
    let k1 = frequencies(g.n1, g.l1);
    let k2 = frequencies(g.n2, g.l2);
    let mut k1v = Vec::with_capacity(g.len());
    let mut k2v = Vec::with_capacity(g.len());
    for &q2 in &k2 {
        for &q1 in &k1 {
            k1v.push(q1);
            k2v.push(q2);
        }
    }
    let mut out = SpinorField::zeros(g, eps);
    out.t = field.t;
    // kinetic: eps (k . sigma) in Fourier
    let mut d1 = vec![Complex64::new(0.0, 0.0); g.len()];
    let mut d2 = vec![Complex64::new(0.0, 0.0); g.len()];
    for i in 0..g.len() {
        let off = Complex64::new(k1v[i], -k2v[i]) * eps;
        d1[i] = off * c2[i];
        d2[i] = off.conj() * c1[i];
    }
    prop.fft2d(&mut d1, true);
    prop.fft2d(&mut d2, true);
    for i2 in 0..g.n2 {
        for i1 in 0..g.n1 {
            let i = g.idx(i1, i2);
            let m = model.m(g.point(i1, i2));
            let v = &field.values[i];
            out.values[i][0] = m * v[0] + d1[i];
            out.values[i][1] = -m * v[1] + d2[i];
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct StepDiagnostics {
    pub t: f64,
    pub norm_sq: f64,
}

#[derive(Debug, Clone)]
pub struct SnapshotDiagnostics {
    pub t: f64,
    pub norm_sq: f64,
    /// (radius, fraction beyond radius/eps) pairs
    pub hf_fractions: Vec<(f64, f64)>,
    pub mass_outside_box: Option<f64>,
}

pub struct Trajectory {
    pub snapshots: Vec<SpinorField>,
    pub steps: Vec<StepDiagnostics>,
    pub snapshot_diags: Vec<SnapshotDiagnostics>,
}

/// Evolve a field under the scenario config, collecting snapshots (including
/// t = 0) plus per-step norms and per-snapshot localization diagnostics.
pub fn evolve(
    field: &SpinorField,
    model: &MassModel,
    config: &SolverConfig,
) -> Result<Trajectory> {
    config.validate(field.eps)?;
    if nyquist_fraction(field) > 1e-8 {
        return Err(CoreError::Resolution(
            "initial data carries spectral mass beyond 0.9 k_max".into(),
        ));
    }
    let n_steps = (config.t_end / config.dt).round() as usize;
    let prop = DiracPropagator::new(field.grid, model, field.eps, config.dt);
    let mut f = field.clone();
    let mut snapshots = Vec::new();
    let mut steps = Vec::with_capacity(n_steps);
    let mut snapshot_diags = Vec::new();
    let mut c1 = Vec::new();
    let mut c2 = Vec::new();

    let snap = |f: &SpinorField, diags: &mut Vec<SnapshotDiagnostics>, snaps: &mut Vec<SpinorField>| {
        let hf = config
            .hf_radii
            .iter()
            .map(|&r| (r, high_frequency_fraction(f, r)))
            .collect();
        let outside = config
            .inside_box
            .map(|(a, b)| f.norm_sq() - f.mass_in_box(a, b));
        diags.push(SnapshotDiagnostics {
            t: f.t,
            norm_sq: f.norm_sq(),
            hf_fractions: hf,
            mass_outside_box: outside,
        });
        snaps.push(f.clone());
    };

    snap(&f, &mut snapshot_diags, &mut snapshots);
    for step_idx in 1..=n_steps {
        prop.step(&mut f, &mut c1, &mut c2);
        if !f.is_finite() {
            return Err(CoreError::Blowup {
                step: step_idx,
                detail: "NaN in spinor field".into(),
            });
        }
        steps.push(StepDiagnostics {
            t: f.t,
            norm_sq: f.norm_sq(),
        });
        if step_idx % config.snapshot_stride.max(1) == 0 || step_idx == n_steps {
            snap(&f, &mut snapshot_diags, &mut snapshots);
        }
    }
    Ok(Trajectory {
        snapshots,
        steps,
        snapshot_diags,
    })
}
