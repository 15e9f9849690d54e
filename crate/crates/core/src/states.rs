//! Initial data: semiclassical wave packets `WP[f](x) = e^{i xi0.(x-x0)/eps}
//! f((x-x0)/sqrt(eps)) / sqrt(eps)`, orientation vectors
//! `V_theta = (e^{-i theta/2}, -e^{i theta/2})`, the explicit Gaussian edge
//! state (unit tangent-frame Gaussian times V), interface mode
//! superpositions assembled in normal coordinates, and the classical center
//! ODE `x' = grad(m)^perp / |grad m|` along the interface.

use crate::chart::InterfaceChart;
use crate::error::{CoreError, Result};
use crate::hermite::eigenmode;
use crate::mass::MassModel;
use crate::normal_form::{from_normal, unrescale, NormalField, NormalGrid, TubeCoords};
use crate::solver::{Grid2D, SpinorField};
use crate::tubular::TubularMap;
use num_complex::Complex64;

/// `V_theta` as in the edge-state ansatz (norm sqrt(2)).
pub fn orientation_vector(theta: f64) -> [Complex64; 2] {
    [
        Complex64::new(0.0, -theta / 2.0).exp(),
        -Complex64::new(0.0, theta / 2.0).exp(),
    ]
}

/// Unit-norm variant of `orientation_vector`.
pub fn orientation_vector_unit(theta: f64) -> [Complex64; 2] {
    let v = orientation_vector(theta);
    [
        v[0] / std::f64::consts::SQRT_2,
        v[1] / std::f64::consts::SQRT_2,
    ]
}

/// The orthogonal complement of V_theta (same norm).
pub fn orientation_perp(theta: f64) -> [Complex64; 2] {
    [
        Complex64::new(0.0, -theta / 2.0).exp(),
        Complex64::new(0.0, theta / 2.0).exp(),
    ]
}

#[derive(Debug, Clone)]
pub struct PacketSpec {
    pub x0: [f64; 2],
    pub xi0: [f64; 2],
    /// width of the unit-norm Gaussian envelope in the sqrt(eps)-scaled variable
    pub width: f64,
    /// unit-norm spinor orientation
    pub orientation: [Complex64; 2],
    pub eps: f64,
}

/// Build `WP^eps_{x0, xi0}[f V]` with f the unit Gaussian of the given width.
/// The discrete norm must come out 1 within 1e-8 (tail/aliasing guard).
pub fn wave_packet(spec: &PacketSpec, grid: Grid2D) -> Result<SpinorField> {
    let on2 = spec.orientation[0].norm_sqr() + spec.orientation[1].norm_sqr();
    if (on2 - 1.0).abs() > 1e-12 {
        return Err(CoreError::Config("orientation must be unit-norm".into()));
    }
    let eps = spec.eps;
    let root = eps.sqrt();
    let a = spec.width;
    let amp = 1.0 / (root * a * std::f64::consts::PI.sqrt().sqrt().powi(2));
    let mut f = SpinorField::zeros(grid, eps);
    for i2 in 0..grid.n2 {
        for i1 in 0..grid.n1 {
            let p = grid.point(i1, i2);
            let d = grid.wrap_disp([p[0] - spec.x0[0], p[1] - spec.x0[1]]);
            let u = [d[0] / root, d[1] / root];
            let env = amp * (-(u[0] * u[0] + u[1] * u[1]) / (2.0 * a * a)).exp();
            let phase = (Complex64::i() * (spec.xi0[0] * d[0] + spec.xi0[1] * d[1]) / eps).exp();
            let c = phase * env;
            f.values[grid.idx(i1, i2)] =
                [c * spec.orientation[0], c * spec.orientation[1]];
        }
    }
    let n2 = f.norm_sq();
    if (n2 - 1.0).abs() > 1e-8 {
        return Err(CoreError::Range(format!(
            "packet tails clipped: discrete norm^2 = {n2}"
        )));
    }
    Ok(f)
}

/// The explicit edge-state ansatz at a chart point: in the tangent frame
/// (t, n) at x0 = gamma(s0),
/// `psi(x) = C (r0^{1/4}/sqrt(eps)) f(u_t/sqrt(eps)) e^{-r0 u_n^2/(2 eps)} V`
/// with r0 = |grad m(x0)|, f the unit Gaussian of the given width, and the
/// orientation at theta(s0) - pi/2 (the branch that maps onto the n = 0
/// interface mode under the normal-form rotation). Renormalized to unit
/// norm; the applied scale factor is returned with the field.
pub fn gaussian_edge_state(
    chart: &InterfaceChart,
    s0: f64,
    width: f64,
    eps: f64,
    grid: Grid2D,
) -> Result<(SpinorField, f64)> {
    let x0 = chart.gamma_at(s0);
    let theta_c = chart.theta_at(s0);
    let r0 = chart.grad_norm_at(s0);
    let tangent = chart.tangent_at(s0);
    let nu = chart.nu_at(s0);
    let v = orientation_vector(theta_c - std::f64::consts::FRAC_PI_2);
    let root = eps.sqrt();
    let mut f = SpinorField::zeros(grid, eps);
    let pref = r0.powf(0.25) / root;
    for i2 in 0..grid.n2 {
        for i1 in 0..grid.n1 {
            let p = grid.point(i1, i2);
            let d = grid.wrap_disp([p[0] - x0[0], p[1] - x0[1]]);
            let ut = d[0] * tangent[0] + d[1] * tangent[1];
            let un = d[0] * nu[0] + d[1] * nu[1];
            // f(u_t/sqrt(eps)) with f the unit Gaussian of the given width
            let ft = (-(ut * ut) / (2.0 * width * width * eps)).exp()
                / (std::f64::consts::PI * width * width).powf(0.25);
            let env = pref * ft * (-(r0 * un * un) / (2.0 * eps)).exp();
            f.values[grid.idx(i1, i2)] = [env * v[0], env * v[1]];
        }
    }
    let n = f.norm();
    if n < 1e-12 {
        return Err(CoreError::Range("edge state vanished on the grid".into()));
    }
    let scale = 1.0 / n;
    f.scale(scale);
    Ok((f, scale))
}

/// One component of an interface mode superposition.
#[derive(Debug, Clone, Copy)]
pub struct ModeComponent {
    pub n: i32,
    pub sigma: f64,
    /// center and width (in s) of the unit-norm Gaussian envelope
    pub s0: f64,
    pub width: f64,
    pub amplitude: f64,
}

/// Assemble `u(s, Y) = sum_j a_j(s) e^{i sigma_j s / sqrt(eps)}
/// g_{n_j}^{s, sigma_j}(Y)` on the rescaled normal grid, undo the dilation,
/// and push to a Cartesian spinor field. The total norm approximates
/// `sqrt(sum |amplitude_j|^2)` for well separated modes.
#[allow(clippy::too_many_arguments)]
pub fn mode_superposition(
    chart: &InterfaceChart,
    map: &TubularMap,
    components: &[ModeComponent],
    eps: f64,
    grid: Grid2D,
    ngrid: NormalGrid,
    coords: &TubeCoords,
) -> Result<SpinorField> {
    let root = eps.sqrt();
    let mut rescaled_grid = ngrid;
    rescaled_grid.y_max /= root;
    let mut u = NormalField::zeros(rescaled_grid, eps);
    u.rescaled = true;
    let n_y = rescaled_grid.n_y;
    let dy = rescaled_grid.dy();
    let ys: Vec<f64> = (0..n_y).map(|j| rescaled_grid.y(j)).collect();
    for comp in components {
        if comp.n.unsigned_abs() > 60 {
            return Err(CoreError::Range(format!(
                "mode index {} beyond the basis range",
                comp.n
            )));
        }
        let a_norm = 1.0 / (std::f64::consts::PI * comp.width * comp.width).powf(0.25);
        for i_s in 0..rescaled_grid.n_s {
            let s = rescaled_grid.s(i_s);
            let r = chart.r_at(s);
            let mode = eigenmode(&ys, dy, comp.n, r, comp.sigma);
            let ds = chart.wrapped_s_distance(s, comp.s0);
            let env = comp.amplitude
                * a_norm
                * (-(ds * ds) / (2.0 * comp.width * comp.width)).exp();
            let phase = (Complex64::i() * comp.sigma * s / root).exp() * env;
            for j in 0..n_y {
                let idx = rescaled_grid.idx(i_s, j);
                u.values[idx][0] += phase * mode.g1[j];
                u.values[idx][1] += phase * mode.g2[j];
            }
        }
        // envelope must fit inside the tube in the rescaled variable
        let edge = (rescaled_grid.y_max * chart.r_at(comp.s0)).powi(2);
        if edge < 2.0 * (comp.n.unsigned_abs() as f64 * 2.0 + 10.0) {
            return Err(CoreError::Range(format!(
                "mode n = {} overlaps the tube edge (Y_max^2 r^2 = {edge:.1})",
                comp.n
            )));
        }
    }
    let phi = unrescale(&u)?;
    from_normal(&phi, map, grid, coords)
}

/// RK4 integration of the edge transport field `x' = grad(m)^perp/|grad m|`
/// (the quarter turn is counterclockwise). Unit speed; stays on the zero set.
pub fn edge_center_ode(
    model: &MassModel,
    x0: [f64; 2],
    t_end: f64,
    dt: f64,
) -> Result<Vec<(f64, [f64; 2])>> {
    let start = model.project_to_interface(x0)?;
    let rhs = |x: [f64; 2]| -> Result<[f64; 2]> {
        let e = model.eval(x);
        let n = (e.grad[0] * e.grad[0] + e.grad[1] * e.grad[1]).sqrt();
        if n < crate::chart::GRAD_MIN {
            return Err(CoreError::GradientTooSmall(format!(
                "|grad m| = {n:.2e} on the center path"
            )));
        }
        Ok([-e.grad[1] / n, e.grad[0] / n])
    };
    let n_steps = (t_end / dt).round() as usize;
    let mut path = Vec::with_capacity(n_steps + 1);
    let mut x = start;
    path.push((0.0, x));
    for k in 1..=n_steps {
        let k1 = rhs(x)?;
        let k2 = rhs([x[0] + 0.5 * dt * k1[0], x[1] + 0.5 * dt * k1[1]])?;
        let k3 = rhs([x[0] + 0.5 * dt * k2[0], x[1] + 0.5 * dt * k2[1]])?;
        let k4 = rhs([x[0] + dt * k3[0], x[1] + dt * k3[1]])?;
        x = [
            x[0] + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            x[1] + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ];
        path.push((k as f64 * dt, x));
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::trace_periodic_interface;
    use crate::fft::frequencies;
    use crate::normal_form::{default_normal_grid, rescale, to_normal};

    const TAU: f64 = 2.0 * std::f64::consts::PI;

    #[test]
    fn orientation_values() {
        let v0 = orientation_vector(0.0);
        assert!((v0[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((v0[1] - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
        // theta = pi with the principal branch: (e^{-i pi/2}, -e^{i pi/2}) = (-i, -i)
        let vpi = orientation_vector(std::f64::consts::PI);
        assert!((vpi[0] - Complex64::new(0.0, -1.0)).norm() < 1e-15);
        assert!((vpi[1] - Complex64::new(0.0, -1.0)).norm() < 1e-15);
        // orthogonality to the stated complement
        for theta in [0.0, 0.7, 2.9] {
            let v = orientation_vector(theta);
            let w = orientation_perp(theta);
            let ip = v[0] * w[0].conj() + v[1] * w[1].conj();
            assert!(ip.norm() < 1e-14);
        }
    }

    #[test]
    fn packet_norm_and_scaling() {
        let grid = Grid2D::new(8.0, 8.0, 256, 256).unwrap();
        for eps in [0.04, 0.01] {
            let spec = PacketSpec {
                x0: [4.0, 4.0],
                xi0: [0.0, 0.0],
                width: 1.0,
                orientation: orientation_vector_unit(0.3),
                eps,
            };
            let f = wave_packet(&spec, grid).unwrap();
            assert!((f.norm_sq() - 1.0).abs() < 1e-8, "eps {eps}");
        }
    }

    #[test]
    fn packet_fourier_centroid() {
        // Fourier mass centered at xi0/eps within 2 grid frequencies
        let grid = Grid2D::new(8.0, 8.0, 256, 256).unwrap();
        let eps = 0.04;
        let spec = PacketSpec {
            x0: [4.0, 4.0],
            xi0: [0.5, -0.25],
            width: 1.0,
            orientation: [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            eps,
        };
        let f = wave_packet(&spec, grid).unwrap();
        // FFT both components, centroid over shifted frequencies
        let prop = crate::solver::DiracPropagator::new(
            grid,
            &MassModel::linear_periodic(8.0, 8.0),
            1.0,
            0.1,
        );
        let mut c1: Vec<Complex64> = f.values.iter().map(|v| v[0]).collect();
        let _ = prop;
        let pair = crate::fft::FftPair::new(grid.n1);
        // 2D FFT by rows then columns
        for row in c1.chunks_exact_mut(grid.n1) {
            pair.forward(row);
        }
        let pair2 = crate::fft::FftPair::new(grid.n2);
        let mut col = vec![Complex64::new(0.0, 0.0); grid.n2];
        for i1 in 0..grid.n1 {
            for i2 in 0..grid.n2 {
                col[i2] = c1[grid.idx(i1, i2)];
            }
            pair2.forward(&mut col);
            for i2 in 0..grid.n2 {
                c1[grid.idx(i1, i2)] = col[i2];
            }
        }
        let k1 = frequencies(grid.n1, grid.l1);
        let k2 = frequencies(grid.n2, grid.l2);
        let (mut m0, mut mk1, mut mk2) = (0.0, 0.0, 0.0);
        for i2 in 0..grid.n2 {
            for i1 in 0..grid.n1 {
                let w = c1[grid.idx(i1, i2)].norm_sqr();
                m0 += w;
                mk1 += w * k1[i1];
                mk2 += w * k2[i2];
            }
        }
        let dk = TAU / 8.0;
        assert!((mk1 / m0 - spec.xi0[0] / eps).abs() < 2.0 * dk);
        assert!((mk2 / m0 - spec.xi0[1] / eps).abs() < 2.0 * dk);
    }

    #[test]
    fn edge_state_unit_norm_and_concentration() {
        let model = MassModel::linear_periodic(8.0, 8.0);
        let chart = trace_periodic_interface(&model, [0.0, 0.0], 2e-3, 1.0).unwrap();
        let grid = Grid2D::new(8.0, 8.0, 256, 256).unwrap();
        let eps = 0.01;
        let (f, _scale) = gaussian_edge_state(&chart, 0.0, 1.0, eps, grid).unwrap();
        assert!((f.norm_sq() - 1.0).abs() < 1e-12);
        // mass concentrated within |x2| < 5 sqrt(eps)
        let w = 5.0 * eps.sqrt();
        let inside = f.mass_in_box([-4.0, -w], [4.0 - 1e-9, w]);
        assert!(inside > 1.0 - 1e-6, "inside fraction {inside}");
    }

    #[test]
    fn edge_state_matches_mode_zero() {
        // the normal-coordinate, rescaled edge state loads the n = 0 mode
        let model = MassModel::linear_periodic(8.0, 8.0);
        let chart = trace_periodic_interface(&model, [0.0, 0.0], 2e-3, 1.0).unwrap();
        let map = TubularMap::new(&chart, 1.0).unwrap();
        let grid = Grid2D::new(8.0, 8.0, 512, 512).unwrap();
        let eps = 0.01;
        let (f, _) = gaussian_edge_state(&chart, 0.0, 1.0, eps, grid).unwrap();
        let ngrid = default_normal_grid(&map, 512, 256).unwrap();
        let nf = to_normal(&f, &map, ngrid).unwrap();
        let re = rescale(&nf).unwrap();
        // overlap of each s-row with g0 at r(s)
        let n_y = re.grid.n_y;
        let dy = re.grid.dy();
        let ys: Vec<f64> = (0..n_y).map(|j| re.grid.y(j)).collect();
        let g0 = eigenmode(&ys, dy, 0, 1.0, 0.0);
        let mut mode_mass = 0.0;
        for i_s in 0..re.grid.n_s {
            let mut c = Complex64::new(0.0, 0.0);
            for j in 0..n_y {
                c += re.values[re.grid.idx(i_s, j)][0] * g0.g1[j]
                    + re.values[re.grid.idx(i_s, j)][1] * g0.g2[j];
            }
            mode_mass += (c * dy).norm_sqr() * re.grid.ds;
        }
        let total = re.norm_sq();
        let frac = mode_mass / total;
        assert!(
            frac > 0.95,
            "n=0 overlap fraction {frac} (mode {mode_mass}, total {total})"
        );
    }

    #[test]
    fn mode_superposition_norms() {
        let model = MassModel::linear_periodic(8.0, 8.0);
        let chart = trace_periodic_interface(&model, [0.0, 0.0], 2e-3, 1.0).unwrap();
        let map = TubularMap::new(&chart, 1.0).unwrap();
        let grid = Grid2D::new(8.0, 8.0, 512, 512).unwrap();
        let eps = 0.01;
        let ngrid = default_normal_grid(&map, 512, 384).unwrap();
        let coords = TubeCoords::build(&map, grid);
        // empty list gives the zero field
        let zero = mode_superposition(&chart, &map, &[], eps, grid, ngrid, &coords).unwrap();
        assert_eq!(zero.norm_sq(), 0.0);
        // two orthogonal modes: norm^2 adds
        let comps = [
            ModeComponent {
                n: 0,
                sigma: 0.0,
                s0: 2.0,
                width: 0.5,
                amplitude: 0.8,
            },
            ModeComponent {
                n: 1,
                sigma: 0.0,
                s0: 2.0,
                width: 0.5,
                amplitude: 0.6,
            },
        ];
        let f = mode_superposition(&chart, &map, &comps, eps, grid, ngrid, &coords).unwrap();
        let expect = 0.8_f64 * 0.8 + 0.6 * 0.6;
        assert!(
            (f.norm_sq() - expect).abs() < 1e-6 * expect.max(1.0),
            "norm^2 {} vs {expect}",
            f.norm_sq()
        );
    }

    #[test]
    fn single_mode_matches_edge_state() {
        // (n=0, sigma=0) superposition reproduces the Thm-ansatz edge state
        let model = MassModel::linear_periodic(8.0, 8.0);
        let chart = trace_periodic_interface(&model, [0.0, 0.0], 2e-3, 1.0).unwrap();
        let map = TubularMap::new(&chart, 1.0).unwrap();
        let grid = Grid2D::new(8.0, 8.0, 512, 512).unwrap();
        let eps: f64 = 0.01;
        let ngrid = default_normal_grid(&map, 512, 256).unwrap();
        let coords = TubeCoords::build(&map, grid);
        // the ansatz Gaussian has width 1.0 in the sqrt(eps)-scaled tangent
        // variable, i.e. sqrt(eps) in s units
        let comp = ModeComponent {
            n: 0,
            sigma: 0.0,
            s0: 2.0,
            width: eps.sqrt(),
            amplitude: 1.0,
        };
        let f = mode_superposition(&chart, &map, &[comp], eps, grid, ngrid, &coords).unwrap();
        let (g, _) = gaussian_edge_state(&chart, 2.0, 1.0, eps, grid).unwrap();
        let mut ip = Complex64::new(0.0, 0.0);
        for (a, b) in f.values.iter().zip(&g.values) {
            ip += a[0] * b[0].conj() + a[1] * b[1].conj();
        }
        ip *= grid.cell_area();
        // straight line: identical up to a global phase and tiny interp error
        let dist2 = f.norm_sq() + g.norm_sq() - 2.0 * ip.norm();
        assert!(dist2.max(0.0).sqrt() < 0.05, "L2 distance {}", dist2.sqrt());
    }

    #[test]
    fn center_ode_straight_and_sinusoidal() {
        // straight: x_t = x0 + t (-1, 0)
        let model = MassModel::linear_periodic(8.0, 8.0);
        let path = edge_center_ode(&model, [0.0, 0.0], 1.0, 1e-3).unwrap();
        let (t_end, x_end) = *path.last().unwrap();
        assert!((t_end - 1.0).abs() < 1e-12);
        assert!((x_end[0] + 1.0).abs() < 1e-10);
        assert!(x_end[1].abs() < 1e-10);
        assert_eq!(path[0].1, [0.0, 0.0]);

        // sinusoidal: stays on the zero set, unit speed, direction -gamma'
        let model = MassModel::sinusoidal_interface(0.5, TAU / 8.0, 8.0, 8.0).unwrap();
        let path = edge_center_ode(&model, [0.0, 0.0], 5.0, 1e-3).unwrap();
        for (_, x) in path.iter().step_by(100) {
            assert!(model.m(*x).abs() < 1e-8);
        }
        for win in path.windows(2).step_by(500) {
            let d = [win[1].1[0] - win[0].1[0], win[1].1[1] - win[0].1[1]];
            let speed = (d[0] * d[0] + d[1] * d[1]).sqrt() / 1e-3;
            assert!((speed - 1.0).abs() < 1e-6);
            let tangent = model.tangent(win[0].1);
            let dot = (d[0] * tangent[0] + d[1] * tangent[1]) / 1e-3;
            // x' = -gamma', so the projection onto gamma' is -1
            assert!((dot + 1.0).abs() < 1e-6);
        }
    }
}
