//! Lagrangian transport of the limiting measures: interface mode measures
//! move along the characteristics of `lambda_n(s, sigma)` (ds/dt =
//! d(lambda)/d(sigma), d(sigma)/dt = -d(lambda)/ds), bulk measures along the
//! Hamiltonian flow of `lambda_pm = pm sqrt(m(x)^2 + |xi|^2)`. Particle
//! weights ride unchanged, so total mass is conserved exactly; densities are
//! kernel views. Includes the position-density reconstruction matrix and the
//! tangential invariance field V_infinity on the sphere at infinity.

use crate::chart::InterfaceChart;
use crate::error::{CoreError, Result};
use crate::hermite::{lambda_n, lambda_n_dgradnorm, lambda_n_dsigma};
use crate::mass::MassModel;
use crate::phase_space::{Axis, PhaseSpaceDensity};
use num_complex::Complex64;

#[derive(Debug, Clone, Copy)]
pub struct InterfaceParticle {
    pub n: i32,
    pub s: f64,
    pub sigma: f64,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct ParticleMeasure {
    pub particles: Vec<InterfaceParticle>,
}

impl ParticleMeasure {
    pub fn total_weight(&self) -> f64 {
        self.particles.iter().map(|p| p.weight).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy)]
pub struct BulkParticle {
    pub branch: Branch,
    pub x: [f64; 2],
    pub xi: [f64; 2],
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct BulkParticleMeasure {
    pub particles: Vec<BulkParticle>,
}

impl BulkParticleMeasure {
    pub fn total_weight(&self) -> f64 {
        self.particles.iter().map(|p| p.weight).sum()
    }
}

/// lambda_pm(x, xi) on the chosen branch.
pub fn bulk_lambda(model: &MassModel, branch: Branch, x: [f64; 2], xi: [f64; 2]) -> f64 {
    let m = model.m(x);
    let v = (m * m + xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
    match branch {
        Branch::Plus => v,
        Branch::Minus => -v,
    }
}

/// RK4 transport of an interface measure for time t_end. lambda_n(s_t,
/// sigma_t) is a conserved quantity of the characteristic flow; the worst
/// relative drift across particles is returned for diagnostics.
pub fn evolve_interface_measure(
    pm: &ParticleMeasure,
    chart: &InterfaceChart,
    t_end: f64,
    dt: f64,
) -> Result<(ParticleMeasure, f64)> {
    let n_steps = (t_end.abs() / dt).round().max(1.0) as usize;
    let h = t_end / n_steps as f64;
    let mut out = pm.clone();
    let mut worst_drift = 0.0_f64;
    for p in out.particles.iter_mut() {
        if p.weight < 0.0 {
            return Err(CoreError::Config("negative particle weight".into()));
        }
        let lam0 = lambda_n(p.n, p.sigma, chart.grad_norm_at(p.s));
        let rhs = |s: f64, sigma: f64| -> Result<(f64, f64)> {
            if !chart.contains_s(s) {
                return Err(CoreError::Range(format!(
                    "particle left the chart at s = {s}"
                )));
            }
            let w = chart.grad_norm_at(s);
            let wp = chart.grad_norm_prime_at(s);
            let ds = lambda_n_dsigma(p.n, sigma, w);
            let dsig = -lambda_n_dgradnorm(p.n, sigma, w) * wp;
            Ok((ds, dsig))
        };
        let (mut s, mut sigma) = (p.s, p.sigma);
        for _ in 0..n_steps {
            let (k1s, k1g) = rhs(s, sigma)?;
            let (k2s, k2g) = rhs(s + 0.5 * h * k1s, sigma + 0.5 * h * k1g)?;
            let (k3s, k3g) = rhs(s + 0.5 * h * k2s, sigma + 0.5 * h * k2g)?;
            let (k4s, k4g) = rhs(s + h * k3s, sigma + h * k3g)?;
            s += h / 6.0 * (k1s + 2.0 * k2s + 2.0 * k3s + k4s);
            sigma += h / 6.0 * (k1g + 2.0 * k2g + 2.0 * k3g + k4g);
        }
        p.s = chart.wrap_s(s);
        p.sigma = sigma;
        let lam1 = lambda_n(p.n, p.sigma, chart.grad_norm_at(p.s));
        let scale = lam0.abs().max(1e-12) * t_end.abs().max(1.0);
        worst_drift = worst_drift.max((lam1 - lam0).abs() / scale);
    }
    Ok((out, worst_drift))
}

/// RK4 Hamiltonian transport of a bulk measure; conserves lambda_pm along
/// trajectories. Particles approaching the crossing set (|lambda| below the
/// threshold) are reported in the warning list by index.
pub fn evolve_bulk_measure(
    bm: &BulkParticleMeasure,
    model: &MassModel,
    t_end: f64,
    dt: f64,
    proximity_threshold: f64,
) -> Result<(BulkParticleMeasure, f64, Vec<usize>)> {
    let n_steps = (t_end.abs() / dt).round().max(1.0) as usize;
    let h = t_end / n_steps as f64;
    let mut out = bm.clone();
    let mut worst_drift = 0.0_f64;
    let mut warnings = Vec::new();
    for (idx, p) in out.particles.iter_mut().enumerate() {
        let sign = match p.branch {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        };
        let lam0 = bulk_lambda(model, p.branch, p.x, p.xi);
        if lam0.abs() < 1e-12 {
            return Err(CoreError::Domain(
                "bulk particle starts on the crossing set".into(),
            ));
        }
        let rhs = |x: [f64; 2], xi: [f64; 2]| -> ([f64; 2], [f64; 2]) {
            let e = model.eval(x);
            let lam = (e.m * e.m + xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
            // x' = grad_xi lambda, xi' = -grad_x lambda
            (
                [sign * xi[0] / lam, sign * xi[1] / lam],
                [
                    -sign * e.m * e.grad[0] / lam,
                    -sign * e.m * e.grad[1] / lam,
                ],
            )
        };
        let (mut x, mut xi) = (p.x, p.xi);
        let mut close = false;
        for _ in 0..n_steps {
            let (k1x, k1xi) = rhs(x, xi);
            let (k2x, k2xi) = rhs(
                [x[0] + 0.5 * h * k1x[0], x[1] + 0.5 * h * k1x[1]],
                [xi[0] + 0.5 * h * k1xi[0], xi[1] + 0.5 * h * k1xi[1]],
            );
            let (k3x, k3xi) = rhs(
                [x[0] + 0.5 * h * k2x[0], x[1] + 0.5 * h * k2x[1]],
                [xi[0] + 0.5 * h * k2xi[0], xi[1] + 0.5 * h * k2xi[1]],
            );
            let (k4x, k4xi) = rhs(
                [x[0] + h * k3x[0], x[1] + h * k3x[1]],
                [xi[0] + h * k3xi[0], xi[1] + h * k3xi[1]],
            );
            x = [
                x[0] + h / 6.0 * (k1x[0] + 2.0 * k2x[0] + 2.0 * k3x[0] + k4x[0]),
                x[1] + h / 6.0 * (k1x[1] + 2.0 * k2x[1] + 2.0 * k3x[1] + k4x[1]),
            ];
            xi = [
                xi[0] + h / 6.0 * (k1xi[0] + 2.0 * k2xi[0] + 2.0 * k3xi[0] + k4xi[0]),
                xi[1] + h / 6.0 * (k1xi[1] + 2.0 * k2xi[1] + 2.0 * k3xi[1] + k4xi[1]),
            ];
            if bulk_lambda(model, Branch::Plus, x, xi) < proximity_threshold {
                close = true;
            }
        }
        if close {
            warnings.push(idx);
        }
        p.x = x;
        p.xi = xi;
        let lam1 = bulk_lambda(model, p.branch, p.x, p.xi);
        let scale = lam0.abs() * t_end.abs().max(1.0);
        worst_drift = worst_drift.max((lam1 - lam0).abs() / scale);
    }
    Ok((out, worst_drift, warnings))
}

/// Gaussian kernel density view of an interface measure. Kernels are
/// normalized discretely on the output lattice, so the total density mass
/// equals the total particle weight exactly (up to floating roundoff).
pub fn density_from_particles(
    pm: &ParticleMeasure,
    s_axis: Axis,
    sigma_axis: Axis,
    bandwidth: (f64, f64),
    s_period: Option<f64>,
) -> Result<PhaseSpaceDensity> {
    if bandwidth.0 < s_axis.step || bandwidth.1 < sigma_axis.step {
        return Err(CoreError::Config(
            "KDE bandwidth below the grid spacing".into(),
        ));
    }
    let mut out = PhaseSpaceDensity::zeros(s_axis, sigma_axis, 0.0, None);
    let cell = s_axis.step * sigma_axis.step;
    for p in &pm.particles {
        let mut kernel = vec![0.0; s_axis.n * sigma_axis.n];
        let mut total = 0.0;
        for i_s in 0..s_axis.n {
            let mut ds = s_axis.value(i_s) - p.s;
            if let Some(period) = s_period {
                ds = (ds + period / 2.0).rem_euclid(period) - period / 2.0;
            }
            let ws = (-ds * ds / (2.0 * bandwidth.0 * bandwidth.0)).exp();
            for i_sig in 0..sigma_axis.n {
                let dg = sigma_axis.value(i_sig) - p.sigma;
                let w = ws * (-dg * dg / (2.0 * bandwidth.1 * bandwidth.1)).exp();
                kernel[i_s * sigma_axis.n + i_sig] = w;
                total += w * cell;
            }
        }
        if total <= 0.0 {
            return Err(CoreError::Range(format!(
                "particle at ({}, {}) falls outside the density window",
                p.s, p.sigma
            )));
        }
        let scale = p.weight / total;
        for (o, k) in out.values.iter_mut().zip(&kernel) {
            *o += k * scale;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
pub struct DensityComparison {
    pub l1_after_smoothing: f64,
    pub centroid_offset: (f64, f64),
}

/// L1 distance after a common Gaussian smoothing plus centroid offsets.
/// Zero iff the samples agree; 2 for disjoint unit masses.
pub fn compare_densities(
    a: &PhaseSpaceDensity,
    b: &PhaseSpaceDensity,
    smoothing_cells: f64,
) -> Result<DensityComparison> {
    if a.s_axis != b.s_axis || a.sigma_axis != b.sigma_axis {
        return Err(CoreError::Shape("density axes differ".into()));
    }
    let smooth = |d: &PhaseSpaceDensity| -> Vec<f64> {
        if smoothing_cells <= 0.0 {
            return d.values.clone();
        }
        let reach = (4.0 * smoothing_cells).ceil() as isize;
        let mut w = Vec::new();
        for k in -reach..=reach {
            w.push((-((k * k) as f64) / (2.0 * smoothing_cells * smoothing_cells)).exp());
        }
        let wsum: f64 = w.iter().sum();
        let n_s = d.s_axis.n as isize;
        let n_g = d.sigma_axis.n as isize;
        let mut tmp = vec![0.0; d.values.len()];
        for i in 0..n_s {
            for j in 0..n_g {
                let mut acc = 0.0;
                for (k, &wk) in (-reach..=reach).zip(&w) {
                    let ii = (i + k).clamp(0, n_s - 1);
                    acc += wk * d.values[(ii * n_g + j) as usize];
                }
                tmp[(i * n_g + j) as usize] = acc / wsum;
            }
        }
        let mut outv = vec![0.0; d.values.len()];
        for i in 0..n_s {
            for j in 0..n_g {
                let mut acc = 0.0;
                for (k, &wk) in (-reach..=reach).zip(&w) {
                    let jj = (j + k).clamp(0, n_g - 1);
                    acc += wk * tmp[(i * n_g + jj) as usize];
                }
                outv[(i * n_g + j) as usize] = acc / wsum;
            }
        }
        outv
    };
    let sa = smooth(a);
    let sb = smooth(b);
    let cell = a.s_axis.step * a.sigma_axis.step;
    let l1 = sa
        .iter()
        .zip(&sb)
        .map(|(x, y)| (x - y).abs())
        .sum::<f64>()
        * cell;
    let ca = a.centroid();
    let cb = b.centroid();
    Ok(DensityComparison {
        l1_after_smoothing: l1,
        centroid_offset: (ca.0 - cb.0, ca.1 - cb.1),
    })
}

/// Hermitian 2x2 density on an s lattice (one matrix per bin).
#[derive(Debug, Clone)]
pub struct PositionMatrixDensity {
    pub s_axis: Axis,
    pub matrices: Vec<[[Complex64; 2]; 2]>,
}

impl PositionMatrixDensity {
    pub fn trace_values(&self) -> Vec<f64> {
        self.matrices.iter().map(|m| m[0][0].re + m[1][1].re).collect()
    }
}

/// Reconstruction of the position density matrix from a mode measure: each
/// particle deposits `w/2 [[1, q e^{-i theta(s)}], [conj, 1]]` at its s with
/// q = i sigma / lambda_n; the n = 0 ratio sigma/lambda_0 is -1 identically
/// (continuity through sigma = 0). Gaussian-binned in s; Hermitian and PSD
/// term by term since |sigma/lambda_n| <= 1.
pub fn reconstruct_position_density(
    pm: &ParticleMeasure,
    chart: &InterfaceChart,
    s_axis: Axis,
    bandwidth: f64,
) -> Result<PositionMatrixDensity> {
    if bandwidth < s_axis.step {
        return Err(CoreError::Config(
            "reconstruction bandwidth below the grid spacing".into(),
        ));
    }
    let mut matrices = vec![[[Complex64::new(0.0, 0.0); 2]; 2]; s_axis.n];
    for p in &pm.particles {
        let ratio = if p.n == 0 {
            -1.0
        } else {
            p.sigma / lambda_n(p.n, p.sigma, chart.grad_norm_at(p.s))
        };
        let theta = chart.theta_at(p.s);
        let q = Complex64::new(0.0, ratio) * Complex64::new(0.0, -theta).exp();
        // discrete kernel normalization as in density_from_particles
        let mut kernel = vec![0.0; s_axis.n];
        let mut total = 0.0;
        for i_s in 0..s_axis.n {
            let mut ds = s_axis.value(i_s) - p.s;
            if let Some(period) = chart.period {
                ds = (ds + period / 2.0).rem_euclid(period) - period / 2.0;
            }
            let w = (-ds * ds / (2.0 * bandwidth * bandwidth)).exp();
            kernel[i_s] = w;
            total += w * s_axis.step;
        }
        if total <= 0.0 {
            return Err(CoreError::Range("particle outside the s window".into()));
        }
        let scale = 0.5 * p.weight / total;
        for (i_s, &k) in kernel.iter().enumerate() {
            let c = scale * k;
            matrices[i_s][0][0] += c;
            matrices[i_s][1][1] += c;
            matrices[i_s][0][1] += c * q;
            matrices[i_s][1][0] += c * q.conj();
        }
    }
    Ok(PositionMatrixDensity { s_axis, matrices })
}

/// The invariance field on the sphere at infinity:
/// `V_inf = V_plus - (V_plus . omega) omega` with
/// `V_plus(s, omega) = (-omega_eta, 0, omega_y r^4)`, so V_inf . omega = 0
/// identically. Components ordered (omega_y, omega_sigma, omega_eta).
pub fn v_infinity(r: f64, omega: [f64; 3]) -> Result<[f64; 3]> {
    let n2 = omega[0] * omega[0] + omega[1] * omega[1] + omega[2] * omega[2];
    if (n2 - 1.0).abs() > 1e-12 {
        return Err(CoreError::Domain(format!(
            "omega must be a unit vector (|omega|^2 = {n2})"
        )));
    }
    let r4 = r.powi(4);
    let (oy, os, oe) = (omega[0], omega[1], omega[2]);
    Ok([
        ((1.0 - r4) * oy * oy - 1.0) * oe,
        (1.0 - r4) * oy * oe * os,
        ((1.0 - r4) * oe * oe + r4) * oy,
    ])
}

/// Particle ensemble CSV (n,s,sigma,w).
pub fn interface_particles_csv(pm: &ParticleMeasure) -> String {
    let mut out = String::from("n,s,sigma,w\n");
    for p in &pm.particles {
        out.push_str(&format!("{},{},{},{}\n", p.n, p.s, p.sigma, p.weight));
    }
    out
}

/// Bulk ensemble CSV (branch,x1,x2,xi1,xi2,w).
pub fn bulk_particles_csv(bm: &BulkParticleMeasure) -> String {
    let mut out = String::from("branch,x1,x2,xi1,xi2,w\n");
    for p in &bm.particles {
        let b = match p.branch {
            Branch::Plus => "+",
            Branch::Minus => "-",
        };
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            b, p.x[0], p.x[1], p.xi[0], p.xi[1], p.weight
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{trace_interface, trace_periodic_interface};

    const TAU: f64 = 2.0 * std::f64::consts::PI;

    fn straight_chart() -> InterfaceChart {
        let model = MassModel::linear_periodic(8.0, 8.0);
        trace_periodic_interface(&model, [0.0, 0.0], 2e-3, 1.0).unwrap()
    }

    #[test]
    fn edge_mode_constant_drift() {
        // n = 0: s' = d(lambda_0)/d(sigma) = -1, sigma frozen
        let chart = straight_chart();
        let pm = ParticleMeasure {
            particles: vec![InterfaceParticle {
                n: 0,
                s: 0.0,
                sigma: 0.0,
                weight: 1.0,
            }],
        };
        let (out, drift) = evolve_interface_measure(&pm, &chart, 1.0, 1e-3).unwrap();
        let s = out.particles[0].s;
        // wraps into [0, period)
        let expect = chart.wrap_s(-1.0);
        assert!((chart.wrapped_s_distance(s, expect)).abs() < 1e-10, "s = {s}");
        assert!(out.particles[0].sigma.abs() < 1e-12);
        assert!(drift < 1e-12);
        assert!((out.total_weight() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dispersive_group_velocity() {
        // n = 1, sigma = 1, r = 1: s advances at 1/sqrt(3) per unit time
        let chart = straight_chart();
        let pm = ParticleMeasure {
            particles: vec![InterfaceParticle {
                n: 1,
                s: 0.0,
                sigma: 1.0,
                weight: 0.7,
            }],
        };
        let (out, drift) = evolve_interface_measure(&pm, &chart, 1.0, 1e-3).unwrap();
        let expect = 1.0 / 3.0_f64.sqrt();
        assert!((out.particles[0].s - expect).abs() < 1e-9);
        assert!((out.particles[0].sigma - 1.0).abs() < 1e-12); // straight: sigma frozen
        assert!(drift < 1e-12);
    }

    #[test]
    fn zero_time_identity() {
        let chart = straight_chart();
        let pm = ParticleMeasure {
            particles: vec![InterfaceParticle {
                n: 2,
                s: 1.2,
                sigma: -0.4,
                weight: 0.5,
            }],
        };
        let (out, _) = evolve_interface_measure(&pm, &chart, 1e-9, 1e-9).unwrap();
        assert!((out.particles[0].s - 1.2).abs() < 1e-9);
        assert!((out.particles[0].sigma + 0.4).abs() < 1e-12);
    }

    #[test]
    fn lambda_conserved_on_sinusoidal() {
        let model = MassModel::sinusoidal_interface(0.5, TAU / 8.0, 8.0, 8.0).unwrap();
        let chart = trace_periodic_interface(&model, [0.0, 0.0], 1e-3, 10.0).unwrap();
        let particles = (0..20)
            .map(|k| InterfaceParticle {
                n: 1 + (k % 3),
                s: 0.4 * k as f64,
                sigma: -1.5 + 0.15 * k as f64,
                weight: 0.05,
            })
            .collect();
        let pm = ParticleMeasure { particles };
        let (out, drift) = evolve_interface_measure(&pm, &chart, 1.0, 1e-3).unwrap();
        assert!(drift < 1e-6, "lambda drift {drift:.2e}");
        assert!((out.total_weight() - 1.0).abs() < 1e-12);
        // nonzero sigma motion on a curved interface
        let moved = out
            .particles
            .iter()
            .zip(&pm.particles)
            .any(|(a, b)| (a.sigma - b.sigma).abs() > 1e-4);
        assert!(moved);
    }

    #[test]
    fn bulk_constant_mass_flow() {
        // m constant along the trajectory: straight line at speed |xi|/lambda
        let model = MassModel::linear_periodic(8.0, 8.0);
        // at x2 = 2 the profile peaks: grad m = 0, m = m0
        let x0 = [1.0, 2.0];
        let m0 = model.m(x0);
        let bm = BulkParticleMeasure {
            particles: vec![BulkParticle {
                branch: Branch::Plus,
                x: x0,
                xi: [1.0, 0.0],
                weight: 1.0,
            }],
        };
        let lam = (m0 * m0 + 1.0).sqrt();
        let t_end = 0.5;
        let (out, drift, warn) = evolve_bulk_measure(&bm, &model, t_end, 1e-3, 0.05).unwrap();
        assert!(warn.is_empty());
        assert!(drift < 1e-10);
        let p = &out.particles[0];
        assert!((p.x[0] - (1.0 + t_end / lam)).abs() < 1e-8);
        assert!((p.x[1] - 2.0).abs() < 1e-8);
        assert!((p.xi[0] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn bulk_lambda_conservation_sinusoidal() {
        let model = MassModel::sinusoidal_interface(0.5, TAU / 8.0, 8.0, 8.0).unwrap();
        let particles = (0..16)
            .map(|k| BulkParticle {
                branch: if k % 2 == 0 { Branch::Plus } else { Branch::Minus },
                x: [0.5 * k as f64 % 8.0, 1.5 + 0.1 * (k % 5) as f64],
                xi: [0.3 + 0.05 * k as f64, -0.2],
                weight: 1.0 / 16.0,
            })
            .collect();
        let bm = BulkParticleMeasure { particles };
        let (out, drift, _) = evolve_bulk_measure(&bm, &model, 1.0, 1e-3, 0.05).unwrap();
        assert!(drift < 1e-6, "bulk lambda drift {drift:.2e}");
        assert!((out.total_weight() - 1.0).abs() < 1e-12);
        // zero-duration identity
        let (same, _, _) = evolve_bulk_measure(&bm, &model, 1e-12, 1e-12, 0.05).unwrap();
        assert!((same.particles[3].x[0] - bm.particles[3].x[0]).abs() < 1e-9);
    }

    #[test]
    fn kde_mass_and_separation() {
        let s_axis = Axis::new(-4.0, 4.0, 161);
        let sigma_axis = Axis::new(-2.0, 2.0, 81);
        let pm = ParticleMeasure {
            particles: vec![
                InterfaceParticle {
                    n: 0,
                    s: -2.0,
                    sigma: 0.0,
                    weight: 0.3,
                },
                InterfaceParticle {
                    n: 0,
                    s: 2.0,
                    sigma: 0.5,
                    weight: 0.7,
                },
            ],
        };
        let d = density_from_particles(&pm, s_axis, sigma_axis, (0.12, 0.1), None).unwrap();
        assert!((d.mass() - 1.0).abs() < 1e-10);
        // local masses split at s = 0
        let (mut left, mut right) = (0.0, 0.0);
        for i_s in 0..s_axis.n {
            for i_g in 0..sigma_axis.n {
                let v = d.values[d.idx(i_s, i_g)] * s_axis.step * sigma_axis.step;
                if s_axis.value(i_s) < 0.0 {
                    left += v;
                } else {
                    right += v;
                }
            }
        }
        assert!((left - 0.3).abs() < 1e-6);
        assert!((right - 0.7).abs() < 1e-6);
        // single unit particle integrates to one
        let single = ParticleMeasure {
            particles: vec![InterfaceParticle {
                n: 0,
                s: 0.0,
                sigma: 0.0,
                weight: 1.0,
            }],
        };
        let ds = density_from_particles(&single, s_axis, sigma_axis, (0.12, 0.1), None).unwrap();
        assert!((ds.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mass_invariant_under_evolution() {
        let chart = straight_chart();
        let pm = ParticleMeasure {
            particles: (0..10)
                .map(|k| InterfaceParticle {
                    n: k % 3 - 1,
                    s: 0.5 * k as f64,
                    sigma: 0.3,
                    weight: 0.1,
                })
                .collect(),
        };
        let (out, _) = evolve_interface_measure(&pm, &chart, 0.7, 1e-3).unwrap();
        assert_eq!(out.total_weight(), pm.total_weight());
    }

    #[test]
    fn compare_density_properties() {
        let s_axis = Axis::new(-4.0, 4.0, 81);
        let sigma_axis = Axis::new(-2.0, 2.0, 41);
        let mk = |s: f64, w: f64| -> PhaseSpaceDensity {
            let pm = ParticleMeasure {
                particles: vec![InterfaceParticle {
                    n: 0,
                    s,
                    sigma: 0.0,
                    weight: w,
                }],
            };
            density_from_particles(&pm, s_axis, sigma_axis, (0.2, 0.15), None).unwrap()
        };
        let a = mk(-1.0, 1.0);
        let same = compare_densities(&a, &a, 1.0).unwrap();
        assert_eq!(same.l1_after_smoothing, 0.0);
        // shift by one cell: centroid offset = one cell width
        let b = mk(-1.0 + s_axis.step, 1.0);
        let cmp = compare_densities(&a, &b, 1.0).unwrap();
        assert!((cmp.centroid_offset.0 + s_axis.step).abs() < 1e-9);
        // disjoint unit masses: L1 = 2
        let c = mk(2.5, 1.0);
        let cmp2 = compare_densities(&a, &c, 0.0).unwrap();
        assert!((cmp2.l1_after_smoothing - 2.0).abs() < 1e-9);
    }

    #[test]
    fn reconstruction_matrix_values() {
        let chart = straight_chart(); // theta = pi/2 everywhere
        let s_axis = Axis::new(0.0, 7.9, 80);
        // n = 0 particle: (1/2) [[1, -1], [-1, 1]] times the KDE trace
        let pm = ParticleMeasure {
            particles: vec![InterfaceParticle {
                n: 0,
                s: 4.0,
                sigma: 0.0,
                weight: 1.0,
            }],
        };
        let d = reconstruct_position_density(&pm, &chart, s_axis, 0.3).unwrap();
        let i_peak = (0..s_axis.n)
            .max_by(|&a, &b| {
                d.matrices[a][0][0]
                    .re
                    .partial_cmp(&d.matrices[b][0][0].re)
                    .unwrap()
            })
            .unwrap();
        let m = &d.matrices[i_peak];
        let t = m[0][0].re;
        assert!((m[0][1].re / t + 1.0).abs() < 1e-10, "off-diag {:?}", m[0][1]);
        assert!(m[0][1].im.abs() < 1e-12);
        assert!((m[1][1].re - t).abs() < 1e-12);
        // rank-1 projector: det = 0
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        assert!(det.norm() < 1e-12);
        // trace integrates to the particle weight
        let total: f64 = d.trace_values().iter().sum::<f64>() * s_axis.step;
        assert!((total - 1.0).abs() < 1e-9);

        // n = 1 at sigma = 0: off-diagonals vanish, (1/2) Id per unit trace
        let pm1 = ParticleMeasure {
            particles: vec![InterfaceParticle {
                n: 1,
                s: 4.0,
                sigma: 0.0,
                weight: 1.0,
            }],
        };
        let d1 = reconstruct_position_density(&pm1, &chart, s_axis, 0.3).unwrap();
        assert!(d1.matrices[i_peak][0][1].norm() < 1e-14);
    }

    #[test]
    fn reconstruction_hermitian_psd() {
        let model = MassModel::sinusoidal_interface(0.5, TAU / 8.0, 8.0, 8.0).unwrap();
        let chart = trace_periodic_interface(&model, [0.0, 0.0], 2e-3, 10.0).unwrap();
        let s_axis = Axis::new(0.0, 8.0, 64);
        let particles = (0..25)
            .map(|k| InterfaceParticle {
                n: (k % 5) - 2,
                s: 0.33 * k as f64,
                sigma: -1.0 + 0.08 * k as f64,
                weight: 0.04,
            })
            .collect();
        let pm = ParticleMeasure { particles };
        let d = reconstruct_position_density(&pm, &chart, s_axis, 0.3).unwrap();
        for m in &d.matrices {
            assert!((m[0][1] - m[1][0].conj()).norm() < 1e-12);
            assert!(m[0][0].im.abs() < 1e-14 && m[1][1].im.abs() < 1e-14);
            let tr = m[0][0].re + m[1][1].re;
            let det = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).re;
            assert!(tr >= -1e-14);
            assert!(det >= -1e-12, "PSD violated: det {det}");
        }
    }

    #[test]
    fn v_infinity_values_and_tangency() {
        // substitution values from the tangential projection formula
        let v = v_infinity(0.8, [0.0, 0.0, 1.0]).unwrap();
        assert!((v[0] + 1.0).abs() < 1e-15 && v[1] == 0.0 && v[2] == 0.0);
        let v = v_infinity(0.8, [1.0, 0.0, 0.0]).unwrap();
        assert!(v[0] == 0.0 && v[1] == 0.0);
        assert!((v[2] - 0.8_f64.powi(4)).abs() < 1e-15);
        // tangency on random unit vectors
        let mut state = 0x2545f4914f6cdd1d_u64;
        let mut rand01 = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut worst = 0.0_f64;
        for _ in 0..10_000 {
            let g = [
                rand01() * 2.0 - 1.0,
                rand01() * 2.0 - 1.0,
                rand01() * 2.0 - 1.0,
            ];
            let n = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
            if n < 1e-3 {
                continue;
            }
            let omega = [g[0] / n, g[1] / n, g[2] / n];
            for r in [0.5, 1.0, 2.0] {
                let v = v_infinity(r, omega).unwrap();
                let dot = v[0] * omega[0] + v[1] * omega[1] + v[2] * omega[2];
                worst = worst.max(dot.abs());
            }
        }
        assert!(worst < 1e-12, "max |V.omega| = {worst:.2e}");
        // non-unit omega rejected
        assert!(v_infinity(1.0, [0.5, 0.5, 0.5]).is_err());
    }

    #[test]
    fn straight_chart_sigma_frozen() {
        // d(r)/ds = 0 on the straight chart: sigma' = 0 exactly
        let chart = straight_chart();
        let pm = ParticleMeasure {
            particles: vec![InterfaceParticle {
                n: 2,
                s: 3.0,
                sigma: 0.8,
                weight: 1.0,
            }],
        };
        let (out, _) = evolve_interface_measure(&pm, &chart, 2.0, 1e-3).unwrap();
        assert_eq!(out.particles[0].sigma, 0.8);
    }

    #[test]
    fn csv_roundtrip_shapes() {
        let pm = ParticleMeasure {
            particles: vec![InterfaceParticle {
                n: -1,
                s: 0.25,
                sigma: 1.5,
                weight: 0.125,
            }],
        };
        let csv = interface_particles_csv(&pm);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "n,s,sigma,w");
        assert_eq!(lines.next().unwrap(), "-1,0.25,1.5,0.125");
        let bm = BulkParticleMeasure {
            particles: vec![BulkParticle {
                branch: Branch::Minus,
                x: [1.0, 2.0],
                xi: [0.5, -0.5],
                weight: 1.0,
            }],
        };
        assert!(bulk_particles_csv(&bm).contains("-,1,2,0.5,-0.5,1"));
    }

    #[test]
    fn finite_chart_range_error() {
        let model = MassModel::linear_periodic(8.0, 8.0);
        let chart = trace_interface(&model, [0.0, 0.0], -1.0, 1.0, 1e-3, 1.0).unwrap();
        let pm = ParticleMeasure {
            particles: vec![InterfaceParticle {
                n: 0,
                s: 0.5,
                sigma: 0.0,
                weight: 1.0,
            }],
        };
        // n = 0 drifts at speed -1 and exits the finite chart after 1.5 time units
        assert!(evolve_interface_measure(&pm, &chart, 2.0, 1e-3).is_err());
    }
}
