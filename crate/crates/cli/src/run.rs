//! Command implementations: simulate, extract, transport, pipeline, chart.
//! One output tree per (scenario, eps):
//! `<out>/<name>/eps_<eps>/{snapshots/, densities/, transport/, report.json,
//! manifest.json}`.

use crate::config::Scenario;
use anyhow::Result;
use edgerun_core::chart::InterfaceChart;
use edgerun_core::io::{
    config_hash, write_csv, write_density, write_snapshot, Manifest, ManifestEntry,
};
use edgerun_core::mass::MassModel;
use edgerun_core::normal_form::to_normal;
use edgerun_core::phase_space::{extract_mode_density, Axis, ExtractStatus, PhaseSpaceDensity};
use edgerun_core::solver::{evolve, Trajectory};
use edgerun_core::states::gaussian_edge_state;
use edgerun_core::transport::{
    bulk_particles_csv, density_from_particles, evolve_bulk_measure, evolve_interface_measure,
    interface_particles_csv, Branch, BulkParticle, BulkParticleMeasure, InterfaceParticle,
    ParticleMeasure,
};
use edgerun_core::tubular::TubularMap;
use serde::Serialize;
use std::path::PathBuf;

pub struct RunContext {
    pub scenario: Scenario,
    pub config_text: String,
    pub out_dir: PathBuf,
    pub eps_override: Option<f64>,
    pub seed: u64,
}

impl RunContext {
    pub fn eps_list(&self) -> Vec<f64> {
        match self.eps_override {
            Some(e) => vec![e],
            None => self.scenario.solver.eps.clone(),
        }
    }

    pub fn eps_dir(&self, eps: f64) -> PathBuf {
        self.out_dir
            .join(&self.scenario.name)
            .join(format!("eps_{eps}"))
    }
}

pub struct SceneData {
    pub model: MassModel,
    pub chart: InterfaceChart,
    pub grid: edgerun_core::solver::Grid2D,
}

pub fn build_scene(scenario: &Scenario) -> Result<SceneData> {
    let model = scenario.model()?;
    let chart = scenario.trace_chart(&model)?;
    let grid = scenario.grid2d()?;
    Ok(SceneData { model, chart, grid })
}

fn run_one_eps(ctx: &RunContext, scene: &SceneData, eps: f64) -> Result<Trajectory> {
    let map = TubularMap::new(&scene.chart, ctx.scenario.chart.delta0)?;
    let ngrid = ctx.scenario.normal_grid(&map)?;
    let field = ctx
        .scenario
        .initial_field(eps, scene.grid, &scene.chart, &map, ngrid, None)?;
    let config = ctx.scenario.solver_config(eps);
    Ok(evolve(&field, &scene.model, &config)?)
}

pub fn simulate(ctx: &RunContext) -> Result<()> {
    let scene = build_scene(&ctx.scenario)?;
    for eps in ctx.eps_list() {
        let traj = run_one_eps(ctx, &scene, eps)?;
        write_simulation(ctx, &scene, eps, &traj)?;
        println!(
            "simulate {} eps={eps}: {} snapshots, final norm^2 {:.12}",
            ctx.scenario.name,
            traj.snapshots.len(),
            traj.snapshots.last().map(|f| f.norm_sq()).unwrap_or(0.0)
        );
    }
    Ok(())
}

fn write_simulation(
    ctx: &RunContext,
    _scene: &SceneData,
    eps: f64,
    traj: &Trajectory,
) -> Result<Vec<PathBuf>> {
    let dir = ctx.eps_dir(eps);
    let snap_dir = dir.join("snapshots");
    let mut outputs = Vec::new();
    let mut entries = Vec::new();
    for (k, snap) in traj.snapshots.iter().enumerate() {
        let path = snap_dir.join(format!("snap_{k:04}.bin"));
        write_snapshot(&path, snap)?;
        entries.push(ManifestEntry {
            path: format!("snapshots/snap_{k:04}.bin"),
            shape: vec![snap.grid.n2, snap.grid.n1, 4],
            bytes: (snap.grid.len() * 4 * 8) as u64,
        });
        outputs.push(path);
    }
    // per-step norms
    let rows: Vec<Vec<f64>> = traj
        .steps
        .iter()
        .map(|s| vec![s.t, s.norm_sq])
        .collect();
    write_csv(&dir.join("steps.csv"), "t,norm_sq", &rows)?;
    // per-snapshot diagnostics
    let mut header = String::from("t,norm_sq");
    if let Some(d) = traj.snapshot_diags.first() {
        for (r, _) in &d.hf_fractions {
            header.push_str(&format!(",hf_beyond_{r}"));
        }
        if d.mass_outside_box.is_some() {
            header.push_str(",mass_outside_box");
        }
    }
    let rows: Vec<Vec<f64>> = traj
        .snapshot_diags
        .iter()
        .map(|d| {
            let mut row = vec![d.t, d.norm_sq];
            row.extend(d.hf_fractions.iter().map(|(_, f)| *f));
            if let Some(m) = d.mass_outside_box {
                row.push(m);
            }
            row
        })
        .collect();
    write_csv(&dir.join("diagnostics.csv"), &header, &rows)?;
    let manifest = Manifest {
        scenario: ctx.scenario.name.clone(),
        config_hash: config_hash(&format!("{}seed={}", ctx.config_text, ctx.seed)),
        eps,
        outputs: entries,
    };
    manifest.write(&dir)?;
    Ok(outputs)
}

pub struct ExtractionResult {
    /// per snapshot, per mode index: density
    pub densities: Vec<Vec<PhaseSpaceDensity>>,
    pub times: Vec<f64>,
    pub tube_masses: Vec<f64>,
    pub statuses: Vec<ExtractStatus>,
    pub modes: Vec<i32>,
}

pub fn extract_trajectory(
    scenario: &Scenario,
    scene: &SceneData,
    traj: &Trajectory,
) -> Result<ExtractionResult> {
    let map = TubularMap::new(&scene.chart, scenario.chart.delta0)?;
    let ngrid = scenario.normal_grid(&map)?;
    let ex = &scenario.extraction;
    let period = scene.chart.period.unwrap_or(scene.chart.s_max() - scene.chart.s_min());
    let s_axis = Axis::new(
        scene.chart.s_min(),
        scene.chart.s_min() + period * (ex.n_s as f64 - 1.0) / ex.n_s as f64,
        ex.n_s,
    );
    let sigma_axis = Axis::new(ex.sigma_window[0], ex.sigma_window[1], ex.n_sigma);
    let modes: Vec<i32> = (-ex.n_modes..=ex.n_modes).collect();
    let mut densities = Vec::new();
    let mut times = Vec::new();
    let mut tube_masses = Vec::new();
    let mut statuses = Vec::new();
    for snap in &traj.snapshots {
        let nf = to_normal(snap, &map, ngrid)?;
        tube_masses.push(nf.norm_sq());
        let mut per_mode = Vec::new();
        let mut status = ExtractStatus::Complete;
        for &n in &modes {
            let (d, st) = extract_mode_density(snap, &map, ngrid, n, s_axis, sigma_axis)?;
            if let ExtractStatus::PartialTubeMass(_) = st {
                status = st;
            }
            per_mode.push(d);
        }
        statuses.push(status);
        densities.push(per_mode);
        times.push(snap.t);
    }
    Ok(ExtractionResult {
        densities,
        times,
        tube_masses,
        statuses,
        modes,
    })
}

pub fn extract(ctx: &RunContext) -> Result<()> {
    let scene = build_scene(&ctx.scenario)?;
    for eps in ctx.eps_list() {
        let traj = run_one_eps(ctx, &scene, eps)?;
        let ex = extract_trajectory(&ctx.scenario, &scene, &traj)?;
        write_extraction(ctx, eps, &ex)?;
        println!(
            "extract {} eps={eps}: {} snapshots x {} modes",
            ctx.scenario.name,
            ex.times.len(),
            ex.modes.len()
        );
    }
    Ok(())
}

fn write_extraction(ctx: &RunContext, eps: f64, ex: &ExtractionResult) -> Result<()> {
    let dir = ctx.eps_dir(eps).join("densities");
    let mut rows = Vec::new();
    for (k, (t, per_mode)) in ex.times.iter().zip(&ex.densities).enumerate() {
        for (d, &n) in per_mode.iter().zip(&ex.modes) {
            let path = dir.join(format!("gamma_n{n}_t{k:04}.bin"));
            write_density(&path, d, eps, *t)?;
            let (s_rows, g_rows) = d.marginals();
            write_csv(
                &dir.join(format!("gamma_n{n}_t{k:04}_s_marginal.csv")),
                "s,mass",
                &s_rows.iter().map(|&(a, b)| vec![a, b]).collect::<Vec<_>>(),
            )?;
            write_csv(
                &dir.join(format!("gamma_n{n}_t{k:04}_sigma_marginal.csv")),
                "sigma,mass",
                &g_rows.iter().map(|&(a, b)| vec![a, b]).collect::<Vec<_>>(),
            )?;
            let (cs, cg) = if d.mass() > 0.0 {
                d.centroid()
            } else {
                (f64::NAN, f64::NAN)
            };
            rows.push(vec![*t, n as f64, d.mass(), cs, cg]);
        }
    }
    write_csv(
        &dir.join("mode_masses.csv"),
        "t,n,mass,s_centroid,sigma_centroid",
        &rows,
    )?;
    Ok(())
}

/// Initial particle measure matching the scenario's initial state.
pub fn initial_measure(scenario: &Scenario) -> ParticleMeasure {
    match scenario.initial.kind.as_str() {
        "mode_superposition" => ParticleMeasure {
            particles: scenario
                .initial
                .modes
                .iter()
                .map(|m| InterfaceParticle {
                    n: m.n,
                    s: m.s0,
                    sigma: m.sigma,
                    weight: m.amplitude * m.amplitude,
                })
                .collect(),
        },
        // edge state and interface packets concentrate on (s0, sigma = 0), n = 0
        _ => ParticleMeasure {
            particles: vec![InterfaceParticle {
                n: 0,
                s: scenario.initial.s0,
                sigma: 0.0,
                weight: 1.0,
            }],
        },
    }
}

pub struct TransportResult {
    pub times: Vec<f64>,
    pub measures: Vec<ParticleMeasure>,
    pub bulk_measures: Vec<BulkParticleMeasure>,
    pub lambda_drift: f64,
}

/// Bulk measure for packet scenarios: one + branch particle at (x0, xi0).
pub fn initial_bulk_measure(scenario: &Scenario) -> Option<BulkParticleMeasure> {
    if scenario.initial.kind != "packet" {
        return None;
    }
    Some(BulkParticleMeasure {
        particles: vec![BulkParticle {
            branch: Branch::Plus,
            x: scenario.initial.x0.unwrap_or([0.0, 0.0]),
            xi: scenario.initial.xi0.unwrap_or([0.0, 0.0]),
            weight: 1.0,
        }],
    })
}

pub fn transport_measures(
    scenario: &Scenario,
    scene: &SceneData,
    times: &[f64],
) -> Result<TransportResult> {
    let chart = &scene.chart;
    let bulk0 = initial_bulk_measure(scenario);
    if let Some(bm0) = bulk0 {
        // packet scenario: Hamiltonian flow of the + branch
        let mut bulk_measures = Vec::new();
        let mut worst = 0.0_f64;
        for &t in times {
            if t == 0.0 {
                bulk_measures.push(bm0.clone());
                continue;
            }
            let (bm, drift, _) =
                evolve_bulk_measure(&bm0, &scene.model, t, scenario.transport.dt, 0.05)?;
            worst = worst.max(drift);
            bulk_measures.push(bm);
        }
        return Ok(TransportResult {
            times: times.to_vec(),
            measures: times
                .iter()
                .map(|_| ParticleMeasure { particles: vec![] })
                .collect(),
            bulk_measures,
            lambda_drift: worst,
        });
    }
    let pm0 = initial_measure(scenario);
    let mut measures = Vec::new();
    let mut worst = 0.0_f64;
    for &t in times {
        if t == 0.0 {
            measures.push(pm0.clone());
            continue;
        }
        let (pm, drift) = evolve_interface_measure(&pm0, chart, t, scenario.transport.dt)?;
        worst = worst.max(drift);
        measures.push(pm);
    }
    Ok(TransportResult {
        times: times.to_vec(),
        measures,
        bulk_measures: Vec::new(),
        lambda_drift: worst,
    })
}

pub fn transport(ctx: &RunContext) -> Result<()> {
    let scene = build_scene(&ctx.scenario)?;
    for eps in ctx.eps_list() {
        let config = ctx.scenario.solver_config(eps);
        let n_steps = (config.t_end / config.dt).round() as usize;
        let stride = config.snapshot_stride.max(1);
        let mut times = vec![0.0];
        let mut k = stride;
        while k <= n_steps {
            times.push(k as f64 * config.dt);
            k += stride;
        }
        if *times.last().unwrap() < config.t_end - 1e-12 {
            times.push(config.t_end);
        }
        let tr = transport_measures(&ctx.scenario, &scene, &times)?;
        write_transport(ctx, eps, &scene.chart, &tr)?;
        println!(
            "transport {} eps={eps}: {} times, lambda drift {:.2e}",
            ctx.scenario.name,
            tr.times.len(),
            tr.lambda_drift
        );
    }
    Ok(())
}

fn write_transport(
    ctx: &RunContext,
    eps: f64,
    chart: &InterfaceChart,
    tr: &TransportResult,
) -> Result<()> {
    let dir = ctx.eps_dir(eps).join("transport");
    std::fs::create_dir_all(&dir)?;
    let ex = &ctx.scenario.extraction;
    let period = chart.period.unwrap_or(chart.s_max() - chart.s_min());
    let s_axis = Axis::new(
        chart.s_min(),
        chart.s_min() + period * (ex.n_s as f64 - 1.0) / ex.n_s as f64,
        ex.n_s,
    );
    let sigma_axis = Axis::new(ex.sigma_window[0], ex.sigma_window[1], ex.n_sigma);
    let bw = (
        ctx.scenario.transport.kde_bandwidth[0],
        ctx.scenario.transport.kde_bandwidth[1],
    );
    for (k, (t, pm)) in tr.times.iter().zip(&tr.measures).enumerate() {
        if pm.particles.is_empty() {
            continue;
        }
        std::fs::write(
            dir.join(format!("particles_t{k:04}.csv")),
            interface_particles_csv(pm),
        )?;
        let d = density_from_particles(pm, s_axis, sigma_axis, bw, chart.period)?;
        write_density(&dir.join(format!("kde_t{k:04}.bin")), &d, eps, *t)?;
    }
    for (k, bm) in tr.bulk_measures.iter().enumerate() {
        std::fs::write(
            dir.join(format!("bulk_particles_t{k:04}.csv")),
            bulk_particles_csv(bm),
        )?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct AnsatzError {
    pub t: f64,
    pub l2_error: f64,
}

#[derive(Debug, Serialize)]
pub struct CentroidRow {
    pub t: f64,
    pub n: i32,
    pub measured_s: f64,
    pub predicted_s: f64,
    pub offset: f64,
    pub measured_sigma: f64,
    pub predicted_sigma: f64,
}

#[derive(Debug, Serialize)]
pub struct MassRow {
    pub t: f64,
    pub total: f64,
    pub tube: f64,
    pub bulk: f64,
    pub mode_sum: f64,
    pub accounted_fraction: f64,
}

#[derive(Debug, Serialize)]
pub struct BulkRow {
    pub t: f64,
    pub predicted: [f64; 2],
    pub measured_centroid: [f64; 2],
    pub offset: f64,
}

#[derive(Debug, Serialize)]
pub struct EpsReport {
    pub eps: f64,
    pub ansatz_errors: Vec<AnsatzError>,
    pub centroids: Vec<CentroidRow>,
    pub bulk_offsets: Vec<BulkRow>,
    pub mass_accounting: Vec<MassRow>,
    pub lambda_drift: f64,
    pub min_accounted_fraction: f64,
    /// snapshots whose tube mass fell below 99% (extraction flagged partial)
    pub partial_extractions: usize,
}

#[derive(Debug, Serialize)]
pub struct PipelineReport {
    pub scenario: String,
    pub config_hash: String,
    pub per_eps: Vec<EpsReport>,
}

pub fn pipeline(ctx: &RunContext) -> Result<PipelineReport> {
    let scene = build_scene(&ctx.scenario)?;
    let mut per_eps = Vec::new();
    for eps in ctx.eps_list() {
        let traj = run_one_eps(ctx, &scene, eps)?;
        write_simulation(ctx, &scene, eps, &traj)?;
        let ex = extract_trajectory(&ctx.scenario, &scene, &traj)?;
        write_extraction(ctx, eps, &ex)?;
        let tr = transport_measures(&ctx.scenario, &scene, &ex.times)?;
        write_transport(ctx, eps, &scene.chart, &tr)?;
        let report = compare(ctx, &scene, eps, &traj, &ex, &tr)?;
        let dir = ctx.eps_dir(eps);
        std::fs::write(
            dir.join("report.json"),
            format!("{}\n", serde_json::to_string_pretty(&report)?),
        )?;
        per_eps.push(report);
    }
    let report = PipelineReport {
        scenario: ctx.scenario.name.clone(),
        config_hash: config_hash(&ctx.config_text),
        per_eps,
    };
    let top = ctx.out_dir.join(&ctx.scenario.name).join("report.json");
    std::fs::create_dir_all(top.parent().unwrap())?;
    std::fs::write(&top, format!("{}\n", serde_json::to_string_pretty(&report)?))?;
    Ok(report)
}

fn compare(
    ctx: &RunContext,
    scene: &SceneData,
    eps: f64,
    traj: &Trajectory,
    ex: &ExtractionResult,
    tr: &TransportResult,
) -> Result<EpsReport> {
    let chart = &scene.chart;
    let period = chart.period.unwrap_or(chart.s_max() - chart.s_min());
    // transported-ansatz L2 errors (edge scenarios on any chart; the ansatz
    // follows the center path s(t) = s0 - t)
    let mut ansatz_errors = Vec::new();
    if ctx.scenario.initial.kind == "gaussian_edge" {
        for snap in &traj.snapshots {
            let s_t = chart.wrap_s(ctx.scenario.initial.s0 - snap.t);
            let (ansatz, _) =
                gaussian_edge_state(chart, s_t, ctx.scenario.initial.width, eps, snap.grid)?;
            let mut err = 0.0;
            for (a, b) in snap.values.iter().zip(&ansatz.values) {
                err += (a[0] - b[0]).norm_sqr() + (a[1] - b[1]).norm_sqr();
            }
            ansatz_errors.push(AnsatzError {
                t: snap.t,
                l2_error: (err * snap.grid.cell_area()).sqrt(),
            });
        }
    }
    // gamma_n centroids vs characteristic predictions
    let mut centroids = Vec::new();
    for (k, t) in ex.times.iter().enumerate() {
        for (d, &n) in ex.densities[k].iter().zip(&ex.modes) {
            if d.mass() < 1e-6 {
                continue;
            }
            // particle prediction for this mode, if present in the measure
            let particle = tr.measures[k].particles.iter().find(|p| p.n == n);
            let Some(p) = particle else { continue };
            let measured_s = d.centroid_s_near(p.s, period);
            let (_, measured_sigma) = d.centroid();
            centroids.push(CentroidRow {
                t: *t,
                n,
                measured_s,
                predicted_s: p.s,
                offset: chart.wrapped_s_distance(measured_s, p.s),
                measured_sigma,
                predicted_sigma: p.sigma,
            });
        }
    }
    // mass accounting: tube + bulk vs total, plus the mode-resolved share
    let mut mass_accounting = Vec::new();
    let mut min_frac = f64::INFINITY;
    for (k, t) in ex.times.iter().enumerate() {
        let total = traj.snapshots[k].norm_sq();
        let tube = ex.tube_masses[k];
        let bulk = (total - tube).max(0.0);
        let mode_sum: f64 = ex.densities[k].iter().map(|d| d.mass()).sum();
        let accounted = (mode_sum + bulk) / total;
        min_frac = min_frac.min(accounted);
        mass_accounting.push(MassRow {
            t: *t,
            total,
            tube,
            bulk,
            mode_sum,
            accounted_fraction: accounted,
        });
    }
    // CSV twins of the report tables
    let dir = ctx.eps_dir(eps);
    write_csv(
        &dir.join("ansatz_errors.csv"),
        "t,l2_error",
        &ansatz_errors
            .iter()
            .map(|a| vec![a.t, a.l2_error])
            .collect::<Vec<_>>(),
    )?;
    write_csv(
        &dir.join("centroids.csv"),
        "t,n,measured_s,predicted_s,offset,measured_sigma,predicted_sigma",
        &centroids
            .iter()
            .map(|c| {
                vec![
                    c.t,
                    c.n as f64,
                    c.measured_s,
                    c.predicted_s,
                    c.offset,
                    c.measured_sigma,
                    c.predicted_sigma,
                ]
            })
            .collect::<Vec<_>>(),
    )?;
    write_csv(
        &dir.join("mass_accounting.csv"),
        "t,total,tube,bulk,mode_sum,accounted_fraction",
        &mass_accounting
            .iter()
            .map(|m| {
                vec![
                    m.t,
                    m.total,
                    m.tube,
                    m.bulk,
                    m.mode_sum,
                    m.accounted_fraction,
                ]
            })
            .collect::<Vec<_>>(),
    )?;
    // bulk scenario: position centroid of |psi|^2 against the flow endpoint
    let mut bulk_offsets = Vec::new();
    for (k, bm) in tr.bulk_measures.iter().enumerate() {
        let Some(p) = bm.particles.first() else { continue };
        let snap = &traj.snapshots[k];
        let c = snap.centroid_near(p.x);
        let d = snap.grid.wrap_disp([c[0] - p.x[0], c[1] - p.x[1]]);
        bulk_offsets.push(BulkRow {
            t: tr.times[k],
            predicted: p.x,
            measured_centroid: c,
            offset: (d[0] * d[0] + d[1] * d[1]).sqrt(),
        });
    }
    let partial = ex
        .statuses
        .iter()
        .filter(|s| matches!(s, ExtractStatus::PartialTubeMass(_)))
        .count();
    Ok(EpsReport {
        eps,
        ansatz_errors,
        centroids,
        bulk_offsets,
        mass_accounting,
        lambda_drift: tr.lambda_drift,
        min_accounted_fraction: min_frac,
        partial_extractions: partial,
    })
}

pub fn chart_cmd(ctx: &RunContext) -> Result<()> {
    let scene = build_scene(&ctx.scenario)?;
    let dir = ctx.out_dir.join(&ctx.scenario.name);
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("chart.csv"), scene.chart.to_csv())?;
    let report = edgerun_core::tubular::check_assumptions(
        &scene.model,
        &scene.chart,
        ctx.scenario.chart.delta0,
        200,
        50,
    );
    let json = serde_json::json!({
        "min_grad_norm": report.min_grad_norm,
        "kappa_max": report.kappa_max,
        "natural_halfwidth": if report.natural_halfwidth.is_finite() {
            serde_json::json!(report.natural_halfwidth)
        } else {
            serde_json::json!("unbounded")
        },
        "halfwidth_in_use": report.halfwidth_in_use,
        "injectivity_ok": report.injectivity_ok,
        "grad_bound_ok": report.grad_bound_ok,
        "period": scene.chart.period,
    });
    std::fs::write(
        dir.join("assumptions.json"),
        format!("{}\n", serde_json::to_string_pretty(&json)?),
    )?;
    println!(
        "chart {}: period {:?}, kappa_max {:.4}, halfwidth {:.4}",
        ctx.scenario.name, scene.chart.period, scene.chart.kappa_max, scene.chart.tube_halfwidth
    );
    Ok(())
}
