//! The full simulation pipeline, mesh reports and the stability demonstration.

use std::f64::consts::PI;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use super::config::ScenarioConfig;
use crate::assembly::{estimated_vector_nnz, OperatorBackend};
use crate::fem::FunctionSpace;
use crate::io::{
    content_hash, emit_monitor_csv, emit_scenario_table, emit_vtk, format_stress_matrix, RunManifest,
    ScenarioSummary, Timings, VtkFields,
};
use crate::mesh::{build_box_mesh, Mesh, MeshStatistics};
use crate::stress::{boundary_mismatch, project_to_vertices, stress_component_norms};
use crate::timestepper::{check_cfl, run, CflReport, Discretization, MonitorRecord, SnapshotPolicy, Stepper};
use crate::{Error, Result};

/// Artifacts and results of [`cmd_run`].
#[derive(Debug, Clone)]
pub struct RunReport {
    pub summary: ScenarioSummary,
    pub monitors: Vec<MonitorRecord>,
    pub manifest: RunManifest,
    pub timings: Timings,
    pub files: Vec<PathBuf>,
}

pub(crate) fn stage<T>(r: Result<T>, name: &'static str) -> Result<T> {
    r.map_err(|e| match e {
        Error::Stage { .. } => e,
        other => other.in_stage(name),
    })
}

pub(crate) fn create(dir: &Path, name: &str, files: &mut Vec<PathBuf>) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let f = File::create(&path)?;
    files.push(path);
    Ok(BufWriter::new(f))
}

pub(crate) fn write_text(dir: &Path, name: &str, text: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, text)?;
    files.push(path);
    Ok(())
}

fn backend_name(b: OperatorBackend) -> &'static str {
    match b {
        OperatorBackend::Auto => "auto",
        OperatorBackend::Csr => "csr",
        OperatorBackend::Structured => "structured",
    }
}

/// Manifest notes about parameter choices that deserve attention.
pub(crate) fn config_notes(cfg: &ScenarioConfig, cfl: &CflReport) -> Vec<String> {
    let mut notes = Vec::new();
    if !cfg.params.is_coercive() {
        notes.push(format!(
            "lambda + mu = {} <= 0: the elasticity form is not coercive and norms may grow without bound",
            cfg.params.lambda + cfg.params.mu
        ));
    }
    if !cfl.passed {
        notes.push(format!("time-step restriction overridden: {cfl}"));
    }
    let src = &cfg.source;
    if !src.is_zero() {
        let inside = (0..3).all(|i| {
            src.center[i] - src.radius >= cfg.domain.lo[i] && src.center[i] + src.radius <= cfg.domain.hi[i]
        });
        if !inside {
            notes.push("source ball extends beyond the domain; the load is clipped to the domain".into());
        }
    }
    notes
}

pub(crate) fn manifest(
    cfg: &ScenarioConfig,
    command: &str,
    mesh: &MeshStatistics,
    cfl: CflReport,
    num_steps: usize,
    num_vector_dofs: usize,
    backend: OperatorBackend,
    outputs: Vec<String>,
) -> Result<RunManifest> {
    let text = cfg.to_toml()?;
    let config = toml::Value::try_from(cfg.to_file()).map_err(|e| Error::Config(e.to_string()))?;
    Ok(RunManifest {
        program: "elastodyn".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        input_hash: content_hash(&text),
        coercive: cfg.params.is_coercive(),
        lambda_plus_mu: cfg.params.lambda + cfg.params.mu,
        num_steps,
        num_vector_dofs,
        backend: backend_name(backend).into(),
        notes: config_notes(cfg, &cfl),
        boundary_stress_mismatch: None,
        outputs,
        mesh: *mesh,
        cfl,
        config,
    })
}

fn file_names(dir: &Path, files: &[PathBuf]) -> Vec<String> {
    files
        .iter()
        .map(|p| p.strip_prefix(dir).unwrap_or(p).to_string_lossy().into_owned())
        .collect()
}

fn vertex_fields(space: &FunctionSpace, cfg: &ScenarioConfig, w: &[f64]) -> Result<VtkFields> {
    let n = space.num_dofs();
    let displacement = space
        .vertex_dofs()
        .iter()
        .map(|&d| [w[d], w[n + d], w[2 * n + d]])
        .collect();
    let stress = project_to_vertices(space, w, &cfg.kappa0, &cfg.params)?;
    Ok(VtkFields {
        displacement,
        stress: Some(stress),
    })
}

fn write_vtk_file(dir: &Path, mesh: &Mesh, fields: &VtkFields, n: usize, t: f64) -> Result<PathBuf> {
    let path = dir.join(format!("step_{n:06}.vtk"));
    let mut f = BufWriter::new(File::create(&path)?);
    emit_vtk(mesh, fields, &format!("elastodyn displacement and stress, n = {n}, t = {t:.16e}"), &mut f)?;
    Ok(path)
}

/// Mesh, time step restriction and setup sizes without running anything.
#[derive(Debug, Clone, Serialize)]
pub struct MeshInfo {
    pub mesh: MeshStatistics,
    pub spacing: f64,
    pub degree: usize,
    pub scalar_dofs: usize,
    pub vector_dofs: usize,
    pub estimated_nnz: usize,
    pub backend: String,
    pub num_steps: usize,
    pub cfl: CflReport,
}

pub fn mesh_info(cfg: &ScenarioConfig) -> Result<MeshInfo> {
    let mesh = stage(build_box_mesh(&cfg.domain), "mesh")?;
    let cfl = check_cfl(cfg.k, mesh.h(), cfg.c_sr, cfg.params.nu);
    let space = stage(FunctionSpace::new(Arc::new(mesh), cfg.degree), "function space")?;
    Ok(MeshInfo {
        mesh: space.mesh().statistics(),
        spacing: cfg.spacing(),
        degree: cfg.degree,
        scalar_dofs: space.num_dofs(),
        vector_dofs: space.num_vector_dofs(),
        estimated_nnz: estimated_vector_nnz(&space),
        backend: backend_name(cfg.numerics.backend.resolve(&space)).into(),
        num_steps: cfg.scheme_config().num_steps()?,
        cfl,
    })
}

/// Runs one scenario end to end. With `out`, writes the configuration,
/// manifest, timings, monitor log, scenario table, stress matrix and VTK
/// snapshots into that directory.
pub fn cmd_run(cfg: &ScenarioConfig, out: Option<&Path>) -> Result<RunReport> {
    let mut timings = Timings::default();
    let scheme = cfg.scheme_config();
    let total = stage(scheme.num_steps(), "configuration")?;

    let clock = Instant::now();
    let mesh = Arc::new(stage(build_box_mesh(&cfg.domain), "mesh")?);
    timings.record("mesh", clock.elapsed().as_secs_f64());
    let cfl = check_cfl(cfg.k, mesh.h(), cfg.c_sr, cfg.params.nu);
    if !cfl.passed && !cfg.numerics.allow_cfl_violation {
        return Err(Error::Cfl(cfl));
    }

    let clock = Instant::now();
    let space = Arc::new(stage(FunctionSpace::new(Arc::clone(&mesh), cfg.degree), "function space")?);
    let disc = stage(Discretization::new(Arc::clone(&space), &scheme), "assembly")?;
    timings.record("assembly", clock.elapsed().as_secs_f64());

    let data = cfg.initial_data(&space);
    let mut files = Vec::new();
    let vtk_dir = match out {
        Some(dir) if cfg.vtk_snapshots > 0 => {
            let d = dir.join("vtk");
            fs::create_dir_all(&d)?;
            Some(d)
        }
        Some(dir) => {
            fs::create_dir_all(dir)?;
            None
        }
        None => None,
    };
    let stride = total.div_ceil(cfg.vtk_snapshots.max(1)).max(1);

    let mut stress_max = [[0.0f64; 3]; 3];
    let mut stress_seconds = 0.0;
    let mut vtk_seconds = 0.0;
    let mut vtk_files = Vec::new();
    let mut mismatch = None;
    let clock = Instant::now();
    let output = {
        let mut observer = |n: usize, t: f64, w: &[f64]| -> Result<()> {
            let c = Instant::now();
            let norms = stress_component_norms(&space, w, &cfg.kappa0, &cfg.params)?;
            for i in 0..3 {
                for j in 0..3 {
                    stress_max[i][j] = stress_max[i][j].max(norms[i][j]);
                }
            }
            if n == total {
                mismatch = Some(boundary_mismatch(&space, w, &cfg.params)?);
            }
            stress_seconds += c.elapsed().as_secs_f64();
            if let Some(dir) = &vtk_dir {
                if n % stride == 0 || n == total {
                    let c = Instant::now();
                    let fields = vertex_fields(&space, cfg, w)?;
                    vtk_files.push(write_vtk_file(dir, &mesh, &fields, n, t)?);
                    vtk_seconds += c.elapsed().as_secs_f64();
                }
            }
            Ok(())
        };
        stage(
            run(&disc, &scheme, &data, SnapshotPolicy::None, Some(&mut observer)),
            "time loop",
        )?
    };
    let loop_seconds = clock.elapsed().as_secs_f64();
    timings.record("time loop", loop_seconds - stress_seconds - vtk_seconds);
    timings.record("stress", stress_seconds);
    timings.record("vtk", vtk_seconds);

    let displacement = output.monitors.iter().map(|m| m.l2_norm).fold(0.0, f64::max);
    let summary = ScenarioSummary {
        name: cfg.name.clone(),
        h: cfg.spacing(),
        displacement,
        stress: stress_max,
    };

    files.extend(vtk_files);
    let mut manifest = manifest(
        cfg,
        "run",
        &mesh.statistics(),
        output.cfl.clone(),
        total,
        space.num_vector_dofs(),
        disc.backend,
        Vec::new(),
    )?;
    manifest.boundary_stress_mismatch = mismatch;
    if let Some(dir) = out {
        let clock = Instant::now();
        let r: Result<()> = (|| {
            write_text(dir, "config.toml", &cfg.to_toml()?, &mut files)?;
            emit_monitor_csv(&output.monitors, create(dir, "monitor.csv", &mut files)?)?;
            emit_scenario_table(&summary, create(dir, "scenario.csv", &mut files)?)?;
            write_text(dir, "stress_matrix.txt", &format_stress_matrix(&summary.stress), &mut files)?;
            files.push(dir.join("manifest.toml"));
            manifest.outputs = file_names(dir, &files);
            fs::write(dir.join("manifest.toml"), manifest.to_toml()?)?;
            Ok(())
        })();
        stage(r, "output")?;
        timings.record("output", clock.elapsed().as_secs_f64());
        write_text(dir, "timings.toml", &timings.to_toml()?, &mut files)?;
    }
    Ok(RunReport {
        summary,
        monitors: output.monitors,
        manifest,
        timings,
        files,
    })
}

/// Both halves of the stability demonstration.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub compliant_cfl: CflReport,
    pub violating_cfl: CflReport,
    /// Largest `‖w^n‖` while the pulse is active, `t ≤ t₀ + 3/(π g_c)`.
    pub window_max: f64,
    pub compliant_max: f64,
    pub compliant_finite: bool,
    /// `compliant_max ≤ 10 · window_max` without non-finite values.
    pub bounded: bool,
    /// Relative energy drift after `t₀ + 6/(π g_c)`, when that lies inside the run.
    pub post_pulse_energy_drift: Option<f64>,
    pub violating_max: f64,
    /// Step at which the violating run produced non-finite values.
    pub violating_abort_step: Option<usize>,
    pub violating_abort_reason: Option<String>,
    /// `violating_max / window_max`.
    pub growth: f64,
    /// Growth by at least 10x or an abort.
    pub unstable: bool,
    pub same_start: bool,
    #[serde(skip)]
    pub compliant: Vec<MonitorRecord>,
    #[serde(skip)]
    pub violating: Vec<MonitorRecord>,
}

struct Trace {
    monitors: Vec<MonitorRecord>,
    abort: Option<(usize, String)>,
}

fn trace(disc: &Discretization, cfg: &ScenarioConfig, k: f64, steps: usize) -> Result<Trace> {
    let mut scheme = cfg.scheme_config();
    scheme.k = k;
    scheme.t_final = k * steps as f64;
    let data = cfg.initial_data(&disc.space);
    let mut stepper = Stepper::new(disc, scheme, &data)?;
    let mut monitors = vec![stepper.initial_monitor(), stepper.monitor()];
    let mut abort = None;
    for n in 2..=steps {
        match stepper.step() {
            Ok(m) => monitors.push(m),
            Err(e) => {
                let root = e.root();
                if matches!(root, Error::NonFinite { .. } | Error::Solver(_)) {
                    abort = Some((n, e.to_string()));
                    break;
                }
                return Err(e);
            }
        }
    }
    Ok(Trace { monitors, abort })
}

/// Runs `cfg` as given and once more with `k = 4 √(2ν) h` under override,
/// for the same number of steps.
pub fn cmd_stability_demo(cfg: &ScenarioConfig, out: Option<&Path>) -> Result<StabilityReport> {
    let scheme = cfg.scheme_config();
    let steps = stage(scheme.num_steps(), "configuration")?;
    let mesh = Arc::new(stage(build_box_mesh(&cfg.domain), "mesh")?);
    let h = mesh.h();
    let compliant_cfl = check_cfl(cfg.k, h, cfg.c_sr, cfg.params.nu);
    if !compliant_cfl.passed {
        return Err(Error::Cfl(compliant_cfl));
    }
    let k_bad = 4.0 * (2.0 * cfg.params.nu).sqrt() * h;
    let violating_cfl = check_cfl(k_bad, h, cfg.c_sr, cfg.params.nu);
    let space = Arc::new(stage(FunctionSpace::new(mesh, cfg.degree), "function space")?);
    let disc = stage(Discretization::new(space, &scheme), "assembly")?;

    let good = stage(trace(&disc, cfg, cfg.k, steps), "compliant run")?;
    if let Some((_, reason)) = &good.abort {
        return Err(Error::Config(format!("the compliant run failed: {reason}")));
    }
    log::warn!("running with violated CFL restriction on purpose: {violating_cfl}");
    let bad = stage(trace(&disc, cfg, k_bad, steps), "violating run")?;

    let src = &cfg.source;
    let pulse = |c: f64| {
        if src.is_zero() || src.g_c <= 0.0 {
            None
        } else {
            Some(src.t0 + c / (PI * src.g_c))
        }
    };
    let window_end = pulse(3.0).unwrap_or(0.0);
    let window_max = good
        .monitors
        .iter()
        .filter(|m| m.n <= 1 || m.t <= window_end)
        .map(|m| m.l2_norm)
        .fold(0.0, f64::max);
    let compliant_finite = good.monitors.iter().all(|m| m.l2_norm.is_finite());
    let compliant_max = good.monitors.iter().map(|m| m.l2_norm).fold(0.0, f64::max);
    let post_start = if src.is_zero() { Some(0.0) } else { pulse(6.0) };
    let post_pulse_energy_drift = post_start.and_then(|t_post| {
        let tail: Vec<f64> = good
            .monitors
            .iter()
            .filter(|m| m.t >= t_post)
            .filter_map(|m| m.energy)
            .collect();
        let e0 = *tail.first()?;
        (tail.len() >= 2).then(|| {
            tail.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max) / e0.abs().max(f64::MIN_POSITIVE)
        })
    });
    let violating_max = bad
        .monitors
        .iter()
        .map(|m| m.l2_norm)
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max);
    let growth = if window_max > 0.0 { violating_max / window_max } else { f64::INFINITY };
    let same_start = good.monitors.len() >= 2
        && bad.monitors.len() >= 2
        && good.monitors[0].l2_norm == bad.monitors[0].l2_norm
        && good.monitors[1].l2_norm == bad.monitors[1].l2_norm;
    let report = StabilityReport {
        compliant_cfl,
        violating_cfl,
        window_max,
        compliant_max,
        compliant_finite,
        bounded: compliant_finite && compliant_max <= 10.0 * window_max,
        post_pulse_energy_drift,
        violating_max,
        violating_abort_step: bad.abort.as_ref().map(|a| a.0),
        violating_abort_reason: bad.abort.as_ref().map(|a| a.1.clone()),
        growth,
        unstable: bad.abort.is_some() || growth >= 10.0,
        same_start,
        compliant: good.monitors,
        violating: bad.monitors,
    };
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        let mut files = Vec::new();
        let r: Result<()> = (|| {
            write_text(dir, "config.toml", &cfg.to_toml()?, &mut files)?;
            emit_monitor_csv(&report.compliant, create(dir, "monitor_compliant.csv", &mut files)?)?;
            emit_monitor_csv(&report.violating, create(dir, "monitor_violating.csv", &mut files)?)?;
            let text = toml::to_string(&report).map_err(|e| Error::InvalidArgument(e.to_string()))?;
            write_text(dir, "stability.toml", &text, &mut files)?;
            Ok(())
        })();
        stage(r, "output")?;
    }
    Ok(report)
}
