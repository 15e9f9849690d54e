//! The tubular-neighborhood map Phi(s, y) = gamma(s) + y nu(s), its Newton
//! inverse, and the sampling-based report on the standing geometric
//! assumptions (|grad m| bounded below on the interface, Phi injective on
//! the tube).

use crate::chart::InterfaceChart;
use crate::error::{CoreError, Result};
use crate::mass::MassModel;

#[derive(Debug, Clone)]
pub struct TubularMap<'a> {
    pub chart: &'a InterfaceChart,
    /// Fraction of the tube halfwidth in use, in (0, 1].
    pub delta0: f64,
}

#[derive(Debug, Clone)]
pub struct AssumptionReport {
    pub min_grad_norm: f64,
    pub kappa_max: f64,
    pub natural_halfwidth: f64,
    pub halfwidth_in_use: f64,
    pub injectivity_ok: bool,
    /// Closest spatial approach between tube points with distinct (s, y).
    pub min_alias_distance: f64,
    pub grad_bound_ok: bool,
}

impl<'a> TubularMap<'a> {
    pub fn new(chart: &'a InterfaceChart, delta0: f64) -> Result<Self> {
        if !(0.0 < delta0 && delta0 <= 1.0) {
            return Err(CoreError::Config("delta0 must lie in (0, 1]".into()));
        }
        Ok(Self { chart, delta0 })
    }

    pub fn halfwidth(&self) -> f64 {
        self.delta0 * self.chart.tube_halfwidth
    }

    pub fn forward(&self, s: f64, y: f64) -> Result<[f64; 2]> {
        if y.abs() >= self.halfwidth() {
            return Err(CoreError::Range(format!(
                "|y| = {} outside tube halfwidth {}",
                y.abs(),
                self.halfwidth()
            )));
        }
        if !self.chart.contains_s(s) {
            return Err(CoreError::Range(format!("s = {s} outside chart range")));
        }
        let g = self.chart.gamma_at(s);
        let nu = self.chart.nu_at(s);
        Ok([g[0] + y * nu[0], g[1] + y * nu[1]])
    }

    /// Jacobian factor 1 - y kappa(s) of Phi.
    pub fn jacobian(&self, s: f64, y: f64) -> f64 {
        1.0 - y * self.chart.kappa_at(s)
    }

    /// Nearest-sample seed: global argmin of the (box-wrapped) distance to the
    /// chart samples; ties broken toward smaller s.
    fn seed(&self, x: [f64; 2]) -> (usize, [f64; 2]) {
        let chart = self.chart;
        let mut best = (f64::INFINITY, 0usize, x);
        for (k, g) in chart.gamma.iter().enumerate() {
            let rep = nearest_representative(x, *g, chart.box_l);
            let d2 = (rep[0] - g[0]).powi(2) + (rep[1] - g[1]).powi(2);
            if d2 < best.0 - 1e-15 {
                best = (d2, k, rep);
            }
        }
        (best.1, best.2)
    }

    /// Invert Phi by Newton iteration on F(s) = (x - gamma(s)) . gamma'(s).
    pub fn inverse(&self, x: [f64; 2]) -> Result<(f64, f64)> {
        let chart = self.chart;
        let (k0, rep) = self.seed(x);
        let mut s = chart.s0 + k0 as f64 * chart.ds;
        let mut converged = false;
        for _ in 0..50 {
            let g = chart.gamma_at(s);
            let t = chart.tangent_at(s);
            let nu = chart.nu_at(s);
            let dx = [rep[0] - g[0], rep[1] - g[1]];
            let f = dx[0] * t[0] + dx[1] * t[1];
            // gamma'' = kappa nu and |gamma'| = 1
            let fp = -1.0 + chart.kappa_at(s) * (dx[0] * nu[0] + dx[1] * nu[1]);
            let step = f / fp;
            s -= step;
            if !chart.contains_s(s) {
                return Err(CoreError::OutsideTube(format!(
                    "Newton left the chart range at ({}, {})",
                    x[0], x[1]
                )));
            }
            if f.abs() < 1e-12 && step.abs() < 1e-10 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(CoreError::OutsideTube(format!(
                "Newton did not converge for ({}, {})",
                x[0], x[1]
            )));
        }
        let g = chart.gamma_at(s);
        let nu = chart.nu_at(s);
        let y = (rep[0] - g[0]) * nu[0] + (rep[1] - g[1]) * nu[1];
        if y.abs() >= self.halfwidth() {
            return Err(CoreError::OutsideTube(format!(
                "point at normal distance {} exceeds halfwidth {}",
                y.abs(),
                self.halfwidth()
            )));
        }
        // residual tangency check guards against aliased branches
        let t = chart.tangent_at(s);
        let res = ((rep[0] - g[0]) * t[0] + (rep[1] - g[1]) * t[1]).abs();
        if res > 1e-9 {
            return Err(CoreError::InjectivityFailure(format!(
                "ambiguous inverse at ({}, {}): residual {res}",
                x[0], x[1]
            )));
        }
        Ok((chart.wrap_s(s), y))
    }
}

/// Shift x by box lattice vectors to the representative nearest to anchor.
pub fn nearest_representative(x: [f64; 2], anchor: [f64; 2], box_l: [f64; 2]) -> [f64; 2] {
    let mut rep = x;
    for d in 0..2 {
        let l = box_l[d];
        if l > 0.0 {
            rep[d] = anchor[d] + (x[d] - anchor[d] + l / 2.0).rem_euclid(l) - l / 2.0;
        }
    }
    rep
}

/// Sampling check of Assumptions 1 and 2 on a traced chart: minimum gradient
/// norm on the interface, measured 1/(2 ||kappa||), and an aliasing scan of
/// Phi over an (n_s x n_y) tube grid using a spatial hash.
pub fn check_assumptions(
    model: &MassModel,
    chart: &InterfaceChart,
    delta0: f64,
    n_s: usize,
    n_y: usize,
) -> AssumptionReport {
    let min_grad_norm = chart
        .r
        .iter()
        .fold(f64::INFINITY, |a, &r| a.min(r * r))
        .max(0.0);
    let _ = model;
    let natural = if chart.kappa_max > 0.0 {
        1.0 / (2.0 * chart.kappa_max)
    } else {
        f64::INFINITY
    };
    let halfwidth = delta0 * chart.tube_halfwidth;

    let span = chart.s_max() - chart.s_min();
    let ds_grid = span / n_s as f64;
    let dy_grid = 2.0 * halfwidth / (n_y.max(2) - 1) as f64;

    // points of Phi over the tube grid, hashed into cells of size ~ grid step
    let cell = 0.5 * ds_grid.min(dy_grid).max(1e-9);
    let mut table: std::collections::HashMap<(i64, i64), Vec<(usize, usize, [f64; 2])>> =
        std::collections::HashMap::new();
    let mut injectivity_ok = true;
    let mut min_alias = f64::INFINITY;
    for i in 0..n_s {
        let s = chart.s_min() + i as f64 * ds_grid;
        for j in 0..n_y {
            let y = -halfwidth + j as f64 * dy_grid + 1e-12;
            if y.abs() >= halfwidth {
                continue;
            }
            let g = chart.gamma_at(s);
            let nu = chart.nu_at(s);
            let p = [g[0] + y * nu[0], g[1] + y * nu[1]];
            let key = (
                (p[0] / cell).floor() as i64,
                (p[1] / cell).floor() as i64,
            );
            for oi in -1..=1 {
                for oj in -1..=1 {
                    if let Some(list) = table.get(&(key.0 + oi, key.1 + oj)) {
                        for &(pi, pj, q) in list {
                            let far_in_params = {
                                let dsi = chart.wrapped_s_distance(
                                    chart.s_min() + pi as f64 * ds_grid,
                                    s,
                                );
                                dsi.abs() > 3.0 * ds_grid
                                    || (pj as f64 - j as f64).abs() > 3.0
                            };
                            if far_in_params {
                                let d = ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt();
                                if d < min_alias {
                                    min_alias = d;
                                }
                                if d < cell {
                                    injectivity_ok = false;
                                }
                            }
                        }
                    }
                }
            }
            table.entry(key).or_default().push((i, j, p));
        }
    }

    AssumptionReport {
        min_grad_norm,
        kappa_max: chart.kappa_max,
        natural_halfwidth: natural,
        halfwidth_in_use: halfwidth,
        injectivity_ok,
        min_alias_distance: min_alias,
        grad_bound_ok: min_grad_norm > crate::chart::GRAD_MIN,
    }
}
