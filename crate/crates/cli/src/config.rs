//! Scenario configuration: a strict TOML schema (unknown keys are errors)
//! plus constructors for the model, chart, grids and initial data it names.

use anyhow::{bail, Context, Result};
use edgerun_core::chart::{trace_periodic_interface, InterfaceChart};
use edgerun_core::mass::MassModel;
use edgerun_core::normal_form::{default_normal_grid, NormalGrid, TubeCoords};
use edgerun_core::solver::{Grid2D, SolverConfig, SpinorField};
use edgerun_core::states::{
    gaussian_edge_state, mode_superposition, orientation_vector_unit, wave_packet, ModeComponent,
    PacketSpec,
};
use edgerun_core::tubular::TubularMap;
use num_complex::Complex64;
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub mass: MassSection,
    pub grid: GridSection,
    pub solver: SolverSection,
    pub initial: InitialSection,
    #[serde(default)]
    pub chart: ChartSection,
    #[serde(default)]
    pub normal: NormalSection,
    #[serde(default)]
    pub extraction: ExtractionSection,
    #[serde(default)]
    pub transport: TransportSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MassSection {
    pub kind: String,
    pub l1: f64,
    pub l2: f64,
    #[serde(default)]
    pub amplitude: f64,
    /// integer number of interface oscillations across the box
    #[serde(default = "default_cycles")]
    pub cycles: u32,
    #[serde(default = "default_one")]
    pub scale: f64,
    #[serde(default)]
    pub a_cos: f64,
}

fn default_cycles() -> u32 {
    1
}

fn default_one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n1: usize,
    pub n2: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub eps: Vec<f64>,
    #[serde(default = "default_dt_factor")]
    pub dt_factor: f64,
    pub t_end: f64,
    pub snapshot_stride: usize,
    #[serde(default)]
    pub hf_radii: Vec<f64>,
    #[serde(default)]
    pub inside_box: Option<[[f64; 2]; 2]>,
}

fn default_dt_factor() -> f64 {
    0.1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub kind: String,
    #[serde(default)]
    pub s0: f64,
    #[serde(default = "default_one")]
    pub width: f64,
    #[serde(default)]
    pub x0: Option<[f64; 2]>,
    #[serde(default)]
    pub xi0: Option<[f64; 2]>,
    /// "v_theta" (edge orientation at theta(s0) - pi/2), "plus_band",
    /// or 4 reals [re1, im1, re2, im2]
    #[serde(default)]
    pub orientation: Option<toml::Value>,
    #[serde(default)]
    pub modes: Vec<ModeSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSection {
    pub n: i32,
    pub sigma: f64,
    pub s0: f64,
    pub width: f64,
    #[serde(default = "default_one")]
    pub amplitude: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSection {
    pub ds: f64,
    pub halfwidth_cap: f64,
    pub delta0: f64,
}

impl Default for ChartSection {
    fn default() -> Self {
        Self {
            ds: 1e-3,
            halfwidth_cap: 1.0,
            delta0: 1.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalSection {
    pub n_s: usize,
    pub n_y: usize,
}

impl Default for NormalSection {
    fn default() -> Self {
        Self { n_s: 512, n_y: 256 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtractionSection {
    pub n_modes: i32,
    pub sigma_window: [f64; 2],
    pub n_s: usize,
    pub n_sigma: usize,
}

impl Default for ExtractionSection {
    fn default() -> Self {
        Self {
            n_modes: 8,
            sigma_window: [-3.0, 3.0],
            n_s: 64,
            n_sigma: 49,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportSection {
    pub dt: f64,
    pub kde_bandwidth: [f64; 2],
}

impl Default for TransportSection {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            kde_bandwidth: [0.2, 0.15],
        }
    }
}

impl Scenario {
    pub fn from_path(path: &std::path::Path) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading scenario config {}", path.display()))?;
        let scenario: Scenario = toml::from_str(&text).context("parsing scenario config")?;
        scenario.validate()?;
        Ok((scenario, text))
    }

    pub fn validate(&self) -> Result<()> {
        if self.solver.eps.is_empty() {
            bail!("solver.eps: at least one value required");
        }
        for (i, &eps) in self.solver.eps.iter().enumerate() {
            if eps <= 0.0 {
                bail!("solver.eps[{i}]: must be positive");
            }
            let dx1 = self.mass.l1 / self.grid.n1 as f64;
            let dx2 = self.mass.l2 / self.grid.n2 as f64;
            let bound = eps.sqrt() / 4.0;
            if dx1 > bound + 1e-15 || dx2 > bound + 1e-15 {
                bail!(
                    "grid: dx = ({dx1}, {dx2}) exceeds sqrt(eps)/4 = {bound} for solver.eps[{i}] = {eps}"
                );
            }
            let dt = self.solver.dt_factor * eps;
            if dt > eps / 4.0 + 1e-15 {
                bail!("solver.dt_factor: dt = {dt} exceeds eps/4 for solver.eps[{i}]");
            }
        }
        match self.initial.kind.as_str() {
            "packet" => {
                if self.initial.x0.is_none() {
                    bail!("initial.x0: required for kind = \"packet\"");
                }
            }
            "gaussian_edge" => {}
            "mode_superposition" => {
                if self.initial.modes.is_empty() {
                    bail!("initial.modes: required for kind = \"mode_superposition\"");
                }
            }
            other => bail!("initial.kind: unknown kind {other:?}"),
        }
        match self.mass.kind.as_str() {
            "linear_periodic" | "sinusoidal_interface" | "custom_coefficients" => Ok(()),
            other => bail!("mass.kind: unknown model kind {other:?}"),
        }
    }

    pub fn model(&self) -> Result<MassModel> {
        let k = self.mass.cycles as f64 * 2.0 * std::f64::consts::PI / self.mass.l1;
        let model = match self.mass.kind.as_str() {
            "linear_periodic" => MassModel::linear_periodic(self.mass.l1, self.mass.l2),
            "sinusoidal_interface" => {
                MassModel::sinusoidal_interface(self.mass.amplitude, k, self.mass.l1, self.mass.l2)?
            }
            "custom_coefficients" => MassModel::custom_coefficients(
                self.mass.scale,
                self.mass.amplitude,
                self.mass.a_cos,
                k,
                self.mass.l1,
                self.mass.l2,
            )?,
            other => bail!("mass.kind: unknown model kind {other:?}"),
        };
        Ok(model)
    }

    pub fn grid2d(&self) -> Result<Grid2D> {
        Ok(Grid2D::new(
            self.mass.l1,
            self.mass.l2,
            self.grid.n1,
            self.grid.n2,
        )?)
    }

    pub fn trace_chart(&self, model: &MassModel) -> Result<InterfaceChart> {
        Ok(trace_periodic_interface(
            model,
            [0.0, 0.0],
            self.chart.ds,
            self.chart.halfwidth_cap,
        )?)
    }

    pub fn normal_grid(&self, map: &TubularMap) -> Result<NormalGrid> {
        Ok(default_normal_grid(map, self.normal.n_s, self.normal.n_y)?)
    }

    pub fn solver_config(&self, eps: f64) -> SolverConfig {
        SolverConfig {
            dt: self.solver.dt_factor * eps,
            t_end: self.solver.t_end,
            snapshot_stride: self.solver.snapshot_stride,
            hf_radii: self.solver.hf_radii.clone(),
            inside_box: self.solver.inside_box.map(|b| (b[0], b[1])),
        }
    }

    /// Build the configured initial state on the given grid.
    pub fn initial_field(
        &self,
        eps: f64,
        grid: Grid2D,
        chart: &InterfaceChart,
        map: &TubularMap,
        ngrid: NormalGrid,
        coords: Option<&TubeCoords>,
    ) -> Result<SpinorField> {
        match self.initial.kind.as_str() {
            "gaussian_edge" => {
                let (f, _) = gaussian_edge_state(chart, self.initial.s0, self.initial.width, eps, grid)?;
                Ok(f)
            }
            "packet" => {
                let x0 = self.initial.x0.unwrap();
                let xi0 = self.initial.xi0.unwrap_or([0.0, 0.0]);
                let orientation = self.packet_orientation(chart, x0, xi0)?;
                let spec = PacketSpec {
                    x0,
                    xi0,
                    width: self.initial.width,
                    orientation,
                    eps,
                };
                Ok(wave_packet(&spec, grid)?)
            }
            "mode_superposition" => {
                let comps: Vec<ModeComponent> = self
                    .initial
                    .modes
                    .iter()
                    .map(|m| ModeComponent {
                        n: m.n,
                        sigma: m.sigma,
                        s0: m.s0,
                        width: m.width,
                        amplitude: m.amplitude,
                    })
                    .collect();
                let built;
                let coords = match coords {
                    Some(c) => c,
                    None => {
                        built = TubeCoords::build(map, grid);
                        &built
                    }
                };
                Ok(mode_superposition(
                    chart, map, &comps, eps, grid, ngrid, coords,
                )?)
            }
            other => bail!("initial.kind: unknown kind {other:?}"),
        }
    }

    fn packet_orientation(
        &self,
        chart: &InterfaceChart,
        x0: [f64; 2],
        xi0: [f64; 2],
    ) -> Result<[Complex64; 2]> {
        match &self.initial.orientation {
            None => Ok(orientation_vector_unit(
                chart.theta_at(self.initial.s0) - std::f64::consts::FRAC_PI_2,
            )),
            Some(toml::Value::String(s)) if s == "v_theta" => Ok(orientation_vector_unit(
                chart.theta_at(self.initial.s0) - std::f64::consts::FRAC_PI_2,
            )),
            Some(toml::Value::String(s)) if s == "plus_band" => {
                // normalized +branch eigenvector of the symbol at (x0, xi0)
                let model = self.model()?;
                let m = model.m(x0);
                let lam = (m * m + xi0[0] * xi0[0] + xi0[1] * xi0[1]).sqrt();
                if lam < 1e-12 {
                    bail!("initial.orientation: plus_band undefined on the crossing set");
                }
                // H u = lam u with H = [[m, xi1 - i xi2], [xi1 + i xi2, -m]]
                let off = Complex64::new(xi0[0], xi0[1]);
                let u = [Complex64::new(lam + m, 0.0), off];
                let n = (u[0].norm_sqr() + u[1].norm_sqr()).sqrt();
                if n < 1e-12 {
                    bail!("initial.orientation: degenerate plus_band eigenvector");
                }
                Ok([u[0] / n, u[1] / n])
            }
            Some(toml::Value::Array(vals)) if vals.len() == 4 => {
                let mut c = [0.0; 4];
                for (i, v) in vals.iter().enumerate() {
                    c[i] = v
                        .as_float()
                        .or_else(|| v.as_integer().map(|x| x as f64))
                        .context("initial.orientation: expected numbers")?;
                }
                let v = [Complex64::new(c[0], c[1]), Complex64::new(c[2], c[3])];
                let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
                if n < 1e-12 {
                    bail!("initial.orientation: zero vector");
                }
                Ok([v[0] / n, v[1] / n])
            }
            Some(other) => bail!("initial.orientation: unsupported value {other:?}"),
        }
    }
}
