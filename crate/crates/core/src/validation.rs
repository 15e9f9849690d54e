//! Machine-checkable oracle suite behind the `validate` CLI subcommand:
//! spectral identities, geometry consistency, unitarity, and transport
//! conservation, each reported as a named pass/fail with its measured metric.

use crate::chart::{trace_interface, trace_periodic_interface};
use crate::fft::{frequencies, FftPair};
use crate::hermite::{
    apply_tds, build_tds_dense, eigenmode, hermite_basis, lambda_n, max_asymmetry,
    mode_mass, projector_apply, smallest_eigenvalue_dense,
};
use crate::mass::MassModel;
use crate::normal_form::{
    apply_h_edge, default_normal_grid, from_normal, rescale, to_normal, unrescale, NormalField,
    TubeCoords,
};
use crate::solver::{apply_hamiltonian, DiracPropagator, Grid2D, SpinorField};
use crate::transport::{
    evolve_bulk_measure, evolve_interface_measure, v_infinity, Branch, BulkParticle,
    BulkParticleMeasure, InterfaceParticle, ParticleMeasure,
};
use crate::tubular::{check_assumptions, TubularMap};
use num_complex::Complex64;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub metric: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl CheckResult {
    fn below(name: &str, metric: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed: metric < tolerance,
            metric,
            tolerance,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationSummary {
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

impl ValidationSummary {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap_or_else(|_| "{}".into())
    }
}

/// Deterministic xorshift for sampling-style checks.
pub struct SplitMix(u64);

impl SplitMix {
    pub fn new(seed: u64) -> Self {
        Self(seed.max(1))
    }

    pub fn next_f64(&mut self) -> f64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }
}

const TAU: f64 = 2.0 * std::f64::consts::PI;

fn sinusoidal_model() -> MassModel {
    MassModel::sinusoidal_interface(0.5, TAU / 8.0, 8.0, 8.0).unwrap()
}

pub fn check_hermite_orthonormality() -> CheckResult {
    let b = hermite_basis(-12.0, 12.0, 1024, 20).unwrap();
    let mut worst = 0.0_f64;
    for i in 0..=20 {
        for j in 0..=20 {
            let expect = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((b.gram(i, j) - expect).abs());
        }
    }
    CheckResult::below(
        "hermite_orthonormality",
        worst,
        1e-10,
        "max |Gram - Id|, m <= 20, y in [-12,12], N = 1024",
    )
}

pub fn check_hermite_eigenrelation() -> CheckResult {
    // the m = 40 tail needs [-14, 14] before the k^2-amplified seam residual
    // of the periodic spectral derivative clears 1e-8
    let b = hermite_basis(-14.0, 14.0, 1024, 40).unwrap();
    let n = b.len();
    let pair = FftPair::new(n);
    let ks = frequencies(n, b.dy * n as f64);
    let mut worst = 0.0_f64;
    for m in [0usize, 5, 20, 40] {
        let mut buf: Vec<Complex64> = b.values[m]
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        pair.forward(&mut buf);
        for (v, &k) in buf.iter_mut().zip(&ks) {
            *v *= -k * k;
        }
        pair.inverse(&mut buf);
        for i in 0..n {
            let lhs = -buf[i].re + b.y[i] * b.y[i] * b.values[m][i];
            worst = worst.max((lhs - (2.0 * m as f64 + 1.0) * b.values[m][i]).abs());
        }
    }
    CheckResult::below(
        "hermite_eigenrelation",
        worst,
        1e-8,
        "-h'' + y^2 h = (2m+1) h residual, spectral second derivative",
    )
}

/// The central spectral oracle: closed-form eigenpairs against the discretized
/// operator over the full acceptance sweep (optionally with a sign fault
/// injected into lambda to prove the check has teeth).
pub fn check_eigenpair_residuals(flip_lambda_sign: bool) -> CheckResult {
    let b = hermite_basis(-12.0, 12.0, 1024, 40).unwrap();
    let mut worst = 0.0_f64;
    for n in -3..=3_i32 {
        for sigma in [-2.0, -1.0, 0.0, 1.0, 2.0] {
            for w in [0.5_f64, 1.0, 2.0] {
                let mode = eigenmode(&b.y, b.dy, n, w.sqrt(), sigma);
                let lambda = if flip_lambda_sign && n != 0 {
                    -mode.lambda
                } else {
                    mode.lambda
                };
                let f: Vec<[Complex64; 2]> = mode
                    .g1
                    .iter()
                    .zip(&mode.g2)
                    .map(|(&a, &c)| [Complex64::new(a, 0.0), Complex64::new(c, 0.0)])
                    .collect();
                let tf = apply_tds(&b.y, w, sigma, &f);
                let mut res = 0.0;
                for i in 0..b.len() {
                    res += (tf[i][0] - lambda * f[i][0]).norm_sqr()
                        + (tf[i][1] - lambda * f[i][1]).norm_sqr();
                }
                worst = worst.max((res * b.dy).sqrt());
            }
        }
    }
    CheckResult::below(
        "eigenpair_residuals",
        worst,
        1e-6,
        "||T g_n - lambda_n g_n||, n in [-3,3], sigma in [-2,2], w in {0.5,1,2}",
    )
}

pub fn check_lambda_identity() -> CheckResult {
    let mut worst = 0.0_f64;
    for n in 1..=8_i32 {
        for sigma in [-2.0, -0.3, 0.0, 1.7] {
            for w in [0.5, 1.0, 2.0] {
                let l = lambda_n(n, sigma, w);
                worst = worst.max((l * l - sigma * sigma - 2.0 * n as f64 * w).abs());
                worst = worst.max((lambda_n(-n, sigma, w) + l).abs());
            }
        }
    }
    CheckResult::below(
        "lambda_identity",
        worst,
        1e-12,
        "lambda^2 - sigma^2 = 2|n| w and lambda_{-n} = -lambda_n",
    )
}

pub fn check_dense_spectrum() -> CheckResult {
    let b = hermite_basis(-12.0, 12.0, 256, 20).unwrap();
    let mat = build_tds_dense(&b.y, 1.0, 0.7);
    let asym = max_asymmetry(&mat, 2 * b.len());
    let lam = smallest_eigenvalue_dense(&mat, &b.y, 1e-6).unwrap_or(f64::NAN);
    let metric = (lam - lambda_n(0, 0.7, 1.0)).abs().max(asym);
    CheckResult::below(
        "dense_spectrum",
        metric,
        1e-8,
        format!("dense lowest eigenvalue {lam:.12} vs -sigma = -0.7; asymmetry {asym:.2e}"),
    )
}

pub fn check_mode_completeness() -> CheckResult {
    let b = hermite_basis(-12.0, 12.0, 1024, 40).unwrap();
    let mut f: Vec<[Complex64; 2]> = b
        .y
        .iter()
        .map(|&y| {
            let env = (-y * y / 8.0).exp();
            [
                Complex64::new(env * (1.3 * y).sin(), env * 0.2),
                Complex64::new(env * 0.5, env * (2.1 * y).cos() * 0.4),
            ]
        })
        .collect();
    let mut norm2 = 0.0;
    for v in &f {
        norm2 += v[0].norm_sqr() + v[1].norm_sqr();
    }
    norm2 *= b.dy;
    let scale = 1.0 / norm2.sqrt();
    for v in f.iter_mut() {
        v[0] *= scale;
        v[1] *= scale;
    }
    let mut worst = 0.0_f64;
    for sigma in [0.0, 1.0] {
        let total = mode_mass(&b.y, b.dy, &f, 1.0, sigma, 30);
        worst = worst.max(1.0 - total);
    }
    CheckResult::below(
        "mode_completeness",
        worst,
        1e-6,
        "1 - sum |<f, g_n>|^2 over |n| <= 30 for a smooth profile",
    )
}

pub fn check_projector_orthogonality() -> CheckResult {
    let b = hermite_basis(-12.0, 12.0, 1024, 40).unwrap();
    let mut worst = 0.0_f64;
    for sigma in [-1.0, 0.0, 1.0] {
        for (na, nb) in [(1, -1), (0, 1), (2, -2), (0, 3)] {
            let ga = eigenmode(&b.y, b.dy, na, 1.0, sigma);
            let gb = eigenmode(&b.y, b.dy, nb, 1.0, sigma);
            let fa: Vec<[Complex64; 2]> = ga
                .g1
                .iter()
                .zip(&ga.g2)
                .map(|(&a, &c)| [Complex64::new(a, 0.0), Complex64::new(c, 0.0)])
                .collect();
            let c = projector_apply(&gb, &fa, b.dy).unwrap();
            worst = worst.max(c.norm());
        }
    }
    CheckResult::below(
        "projector_orthogonality",
        worst,
        1e-10,
        "cross-mode overlaps <g_a, g_b> at sigma in {-1,0,1}",
    )
}

pub fn check_chart_geometry() -> CheckResult {
    let model = sinusoidal_model();
    let chart = trace_periodic_interface(&model, [0.0, 0.0], 1e-3, 10.0).unwrap();
    let mut worst = 0.0_f64;
    for i in 2..chart.len() - 2 {
        let diff = |c: usize| {
            (-chart.gamma[i + 2][c] + 8.0 * chart.gamma[i + 1][c] - 8.0 * chart.gamma[i - 1][c]
                + chart.gamma[i - 2][c])
                / (12.0 * chart.ds)
        };
        let d = [diff(0), diff(1)];
        let speed = (d[0] * d[0] + d[1] * d[1]).sqrt();
        worst = worst.max((speed - 1.0).abs() / 1e-6);
        let dot = d[0] * chart.nu[i][0] + d[1] * chart.nu[i][1];
        worst = worst.max(dot.abs() / 1e-8);
        let nn = (chart.nu[i][0].powi(2) + chart.nu[i][1].powi(2)).sqrt();
        worst = worst.max((nn - 1.0).abs() / 1e-10);
        worst = worst.max(model.m(chart.gamma[i]).abs() / 1e-10);
        let dtheta = (chart.theta[i + 1] - chart.theta[i - 1]) / (2.0 * chart.ds);
        worst = worst.max((dtheta - chart.kappa[i]).abs() / 1e-6);
    }
    CheckResult::below(
        "chart_geometry",
        worst,
        1.0,
        "|gamma'|=1 (1e-6), gamma'.nu=0 (1e-8), |nu|=1 (1e-10), m(gamma)=0 (1e-10), theta'-kappa (1e-6), as fractions of tolerance",
    )
}

pub fn check_tubular_roundtrip() -> CheckResult {
    let model = sinusoidal_model();
    let chart = trace_periodic_interface(&model, [0.0, 0.0], 1e-3, 10.0).unwrap();
    let map = TubularMap::new(&chart, 0.9).unwrap();
    let period = chart.period.unwrap();
    let hw = map.halfwidth();
    let mut rng = SplitMix::new(0x1234_5678_9abc_def0);
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let s = rng.next_f64() * period;
        let y = (rng.next_f64() * 2.0 - 1.0) * 0.95 * hw;
        let x = map.forward(s, y).unwrap();
        match map.inverse(x) {
            Ok((s2, y2)) => {
                worst = worst.max(chart.wrapped_s_distance(s2, s).abs());
                worst = worst.max((y2 - y).abs());
            }
            Err(_) => worst = f64::INFINITY,
        }
    }
    CheckResult::below(
        "tubular_roundtrip",
        worst,
        1e-9,
        "forward-inverse identity on 1000 random tube points",
    )
}

pub fn check_assumption_report() -> CheckResult {
    let model = sinusoidal_model();
    let chart = trace_periodic_interface(&model, [0.0, 0.0], 2e-3, 10.0).unwrap();
    let report = check_assumptions(&model, &chart, 0.9, 200, 50);
    let ok = report.injectivity_ok && report.grad_bound_ok;
    CheckResult {
        name: "assumptions".into(),
        passed: ok,
        metric: report.min_grad_norm,
        tolerance: crate::chart::GRAD_MIN,
        detail: format!(
            "min |grad m| = {:.6}, kappa_max = {:.4}, injectivity pass = {}",
            report.min_grad_norm, report.kappa_max, report.injectivity_ok
        ),
    }
}

pub fn check_normal_form_unitarity() -> CheckResult {
    let model = MassModel::linear_periodic(8.0, 8.0);
    let chart = trace_periodic_interface(&model, [0.0, 0.0], 2e-3, 2.0).unwrap();
    let map = TubularMap::new(&chart, 1.0).unwrap();
    let grid = Grid2D::new(8.0, 8.0, 512, 512).unwrap();
    let mut f = SpinorField::zeros(grid, 0.25);
    for i2 in 0..grid.n2 {
        for i1 in 0..grid.n1 {
            let x = grid.point(i1, i2);
            let d = grid.wrap_disp([x[0] - 1.0, x[1]]);
            let env = (-(d[0] * d[0]) / 0.5 - (d[1] * d[1]) / (2.0 * 0.25 * 0.25)).exp();
            f.values[grid.idx(i1, i2)] =
                [Complex64::new(env, 0.0), Complex64::new(0.0, 0.5 * env)];
        }
    }
    let ngrid = default_normal_grid(&map, 256, 192).unwrap();
    let nf = to_normal(&f, &map, ngrid).unwrap();
    let metric = (nf.norm_sq() - f.norm_sq()).abs() / f.norm_sq();
    CheckResult::below(
        "normal_form_unitarity",
        metric,
        1e-6,
        "relative norm defect of U on a tube-supported field",
    )
}

pub fn check_rescale_unitarity() -> CheckResult {
    let model = MassModel::linear_periodic(8.0, 8.0);
    let chart = trace_periodic_interface(&model, [0.0, 0.0], 2e-3, 1.0).unwrap();
    let map = TubularMap::new(&chart, 1.0).unwrap();
    let ngrid = default_normal_grid(&map, 64, 256).unwrap();
    let mut nf = NormalField::zeros(ngrid, 0.01);
    for i_s in 0..ngrid.n_s {
        for i_y in 0..ngrid.n_y {
            let y = ngrid.y(i_y);
            let s = ngrid.s(i_s);
            nf.values[ngrid.idx(i_s, i_y)] = [
                Complex64::new((-y * y / 0.02).exp() * (0.3 * s).cos(), 0.0),
                Complex64::new(0.0, (-y * y / 0.02).exp()),
            ];
        }
    }
    let re = rescale(&nf).unwrap();
    let back = unrescale(&re).unwrap();
    let mut worst = (re.norm_sq() - nf.norm_sq()).abs() / nf.norm_sq();
    for (a, b) in back.values.iter().zip(&nf.values) {
        worst = worst.max((a[0] - b[0]).norm() + (a[1] - b[1]).norm());
    }
    CheckResult::below(
        "rescale_unitarity",
        worst,
        1e-10,
        "norm preservation and exact inverse of the sqrt(eps) dilation",
    )
}

pub fn check_intertwining() -> CheckResult {
    let model = sinusoidal_model();
    let chart = trace_periodic_interface(&model, [0.0, 0.0], 1e-3, 10.0).unwrap();
    let map = TubularMap::new(&chart, 1.0).unwrap();
    let eps = 0.05;
    let grid = Grid2D::new(8.0, 8.0, 512, 512).unwrap();
    let c = chart.gamma_at(1.0);
    let mut f = SpinorField::zeros(grid, eps);
    for i2 in 0..grid.n2 {
        for i1 in 0..grid.n1 {
            let x = grid.point(i1, i2);
            let d = grid.wrap_disp([x[0] - c[0], x[1] - c[1]]);
            let env = (-(d[0] * d[0]) / (2.0 * 0.16) - (d[1] * d[1]) / (2.0 * 0.0324)).exp();
            f.values[grid.idx(i1, i2)] =
                [Complex64::new(env, 0.0), Complex64::new(0.0, 0.5 * env)];
        }
    }
    let ngrid = default_normal_grid(&map, 512, 192).unwrap();
    let hf = apply_hamiltonian(&f, &model);
    let lhs = to_normal(&hf, &map, ngrid).unwrap();
    let uf = to_normal(&f, &map, ngrid).unwrap();
    let rhs = apply_h_edge(&uf, &chart, &model, eps).unwrap();
    let mut err = 0.0;
    for (a, b) in lhs.values.iter().zip(&rhs.values) {
        err += (a[0] - b[0]).norm_sqr() + (a[1] - b[1]).norm_sqr();
    }
    let metric = (err * ngrid.ds * ngrid.dy()).sqrt() / lhs.norm();
    CheckResult::below(
        "intertwining",
        metric,
        1e-4,
        "||U(H psi) - H^E(U psi)|| / ||H psi|| at eps = 0.05 on the sinusoidal chart",
    )
}

pub fn check_solver_unitarity() -> CheckResult {
    let grid = Grid2D::new(4.0, 4.0, 128, 128).unwrap();
    let eps = 0.25;
    let model = MassModel::linear_periodic(4.0, 4.0);
    let mut f = SpinorField::zeros(grid, eps);
    for i2 in 0..grid.n2 {
        for i1 in 0..grid.n1 {
            let p = grid.point(i1, i2);
            let d = grid.wrap_disp([p[0] - 2.0, p[1] - 0.2]);
            let env = (-(d[0] * d[0] + d[1] * d[1]) / 0.2).exp();
            f.values[grid.idx(i1, i2)] =
                [Complex64::new(env, 0.0), Complex64::new(0.2 * env, 0.0)];
        }
    }
    let n0 = f.norm_sq();
    let fwd = DiracPropagator::new(grid, &model, eps, eps / 10.0);
    let bwd = DiracPropagator::new(grid, &model, eps, -eps / 10.0);
    let f0 = f.clone();
    let (mut c1, mut c2) = (Vec::new(), Vec::new());
    let mut drift = 0.0_f64;
    for _ in 0..200 {
        fwd.step(&mut f, &mut c1, &mut c2);
        drift = drift.max((f.norm_sq() / n0 - 1.0).abs());
    }
    for _ in 0..200 {
        bwd.step(&mut f, &mut c1, &mut c2);
    }
    let mut err = 0.0;
    for (a, b) in f.values.iter().zip(&f0.values) {
        err += (a[0] - b[0]).norm_sqr() + (a[1] - b[1]).norm_sqr();
    }
    let rev = (err * grid.cell_area()).sqrt() / f0.norm();
    CheckResult::below(
        "solver_unitarity",
        drift.max(rev),
        1e-9,
        "norm drift over 200 steps and forward-backward reversibility",
    )
}

pub fn check_vinfinity_tangency() -> CheckResult {
    let mut rng = SplitMix::new(0xfeed_beef_cafe_1234);
    let mut worst = 0.0_f64;
    for _ in 0..10_000 {
        let g = [
            rng.next_f64() * 2.0 - 1.0,
            rng.next_f64() * 2.0 - 1.0,
            rng.next_f64() * 2.0 - 1.0,
        ];
        let n = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
        if n < 1e-3 {
            continue;
        }
        let omega = [g[0] / n, g[1] / n, g[2] / n];
        for r in [0.5, 1.0, 2.0] {
            let v = v_infinity(r, omega).unwrap();
            worst = worst.max(
                (v[0] * omega[0] + v[1] * omega[1] + v[2] * omega[2]).abs(),
            );
        }
    }
    CheckResult::below(
        "vinfinity_tangency",
        worst,
        1e-12,
        "max |V_inf . omega| over 10^4 random unit omega and r in {0.5, 1, 2}",
    )
}

pub fn check_transport_conservation() -> CheckResult {
    let model = sinusoidal_model();
    let chart = trace_periodic_interface(&model, [0.0, 0.0], 1e-3, 10.0).unwrap();
    let pm = ParticleMeasure {
        particles: (0..12)
            .map(|k| InterfaceParticle {
                n: 1 + (k % 2),
                s: 0.6 * k as f64,
                sigma: -1.0 + 0.2 * k as f64,
                weight: 1.0 / 12.0,
            })
            .collect(),
    };
    let (out, drift) = evolve_interface_measure(&pm, &chart, 1.0, 1e-3).unwrap();
    let weight_err = (out.total_weight() - pm.total_weight()).abs();
    let bm = BulkParticleMeasure {
        particles: (0..8)
            .map(|k| BulkParticle {
                branch: Branch::Plus,
                x: [k as f64, 1.5],
                xi: [0.4, -0.1 * k as f64],
                weight: 0.125,
            })
            .collect(),
    };
    let (bout, bdrift, _) = evolve_bulk_measure(&bm, &model, 1.0, 1e-3, 0.05).unwrap();
    let bweight_err = (bout.total_weight() - bm.total_weight()).abs();
    CheckResult::below(
        "transport_conservation",
        drift.max(bdrift).max(weight_err).max(bweight_err),
        1e-6,
        "lambda drift per unit time and exact weight conservation, both flows",
    )
}

pub fn check_from_normal_roundtrip() -> CheckResult {
    let model = sinusoidal_model();
    let chart = trace_periodic_interface(&model, [0.0, 0.0], 2e-3, 10.0).unwrap();
    let map = TubularMap::new(&chart, 1.0).unwrap();
    let grid = Grid2D::new(8.0, 8.0, 512, 512).unwrap();
    let ngrid = default_normal_grid(&map, 512, 384).unwrap();
    let mut phi = NormalField::zeros(ngrid, 0.25);
    for i_s in 0..ngrid.n_s {
        for i_y in 0..ngrid.n_y {
            let ds = chart.wrapped_s_distance(ngrid.s(i_s), 2.0);
            let y = ngrid.y(i_y);
            let env = (-(ds * ds) / 0.5 - (y * y) / (2.0 * 0.0225)).exp();
            phi.values[ngrid.idx(i_s, i_y)] =
                [Complex64::new(env, 0.0), Complex64::new(0.0, 0.5 * env)];
        }
    }
    let coords = TubeCoords::build(&map, grid);
    let psi = from_normal(&phi, &map, grid, &coords).unwrap();
    let back = to_normal(&psi, &map, ngrid).unwrap();
    let mut err = 0.0;
    for (a, b) in back.values.iter().zip(&phi.values) {
        err += (a[0] - b[0]).norm_sqr() + (a[1] - b[1]).norm_sqr();
    }
    let metric = (err * ngrid.ds * ngrid.dy()).sqrt() / phi.norm();
    CheckResult::below(
        "from_normal_roundtrip",
        metric,
        1e-5,
        "to_normal . from_normal identity on a cutoff-supported profile",
    )
}

/// The straight-line chart oracle: exact values for every chart quantity.
pub fn check_straight_chart() -> CheckResult {
    let model = MassModel::linear_periodic(8.0, 8.0);
    let chart = trace_interface(&model, [0.0, 0.0], -2.0, 2.0, 1e-3, 1.0).unwrap();
    let mut worst = 0.0_f64;
    for (i, g) in chart.gamma.iter().enumerate() {
        let s = chart.s0 + i as f64 * chart.ds;
        worst = worst.max((g[0] - s).abs());
        worst = worst.max(g[1].abs());
        worst = worst.max(chart.kappa[i].abs());
        worst = worst.max((chart.theta[i] - std::f64::consts::FRAC_PI_2).abs());
        worst = worst.max((chart.r[i] - 1.0).abs());
    }
    CheckResult::below(
        "straight_chart",
        worst,
        1e-10,
        "gamma = (s, 0), kappa = 0, theta = pi/2, r = 1 on the linear model",
    )
}

/// Run the full oracle suite.
pub fn run_validate() -> ValidationSummary {
    let checks = vec![
        check_hermite_orthonormality(),
        check_hermite_eigenrelation(),
        check_eigenpair_residuals(false),
        check_lambda_identity(),
        check_dense_spectrum(),
        check_mode_completeness(),
        check_projector_orthogonality(),
        check_straight_chart(),
        check_chart_geometry(),
        check_tubular_roundtrip(),
        check_assumption_report(),
        check_normal_form_unitarity(),
        check_rescale_unitarity(),
        check_from_normal_roundtrip(),
        check_intertwining(),
        check_solver_unitarity(),
        check_vinfinity_tangency(),
        check_transport_conservation(),
    ];
    ValidationSummary {
        passed: checks.iter().all(|c| c.passed),
        checks,
    }
}
