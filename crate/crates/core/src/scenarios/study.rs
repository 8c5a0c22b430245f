//! Self-convergence studies in time and space. All runs of a study advance
//! in lockstep so no history has to be stored.

use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use super::config::ScenarioConfig;
use super::run::{create, manifest, stage, write_text};
use crate::assembly::{form_operator, BoxedOperator, GradientForm};
use crate::fem::FunctionSpace;
use crate::io::emit_convergence_table;
use crate::mesh::{build_box_mesh, BoxDomain};
use crate::norms::{ErrorEntry, ErrorSeries, Injection};
use crate::sparse::LinearOperator;
use crate::timestepper::{check_cfl, CflReport, Discretization, SchemeConfig, Stepper};
use crate::{Error, Result};

struct Tracker {
    displacement: f64,
    stress: f64,
    run_seconds: f64,
    stress_seconds: f64,
}

impl Tracker {
    fn new() -> Self {
        Self {
            displacement: 0.0,
            stress: 0.0,
            run_seconds: 0.0,
            stress_seconds: 0.0,
        }
    }

    fn record(&mut self, e: &[f64], mass: &dyn LinearOperator, stress: &dyn LinearOperator) {
        let c = Instant::now();
        self.displacement = self.displacement.max(mass.quadratic_form(e, e).max(0.0).sqrt());
        self.stress = self.stress.max(stress.quadratic_form(e, e).max(0.0).sqrt());
        self.stress_seconds += c.elapsed().as_secs_f64();
    }

    fn entry(&self, resolution: f64) -> ErrorEntry {
        ErrorEntry {
            resolution,
            displacement_error: self.displacement,
            displacement_seconds: self.run_seconds,
            stress_error: self.stress,
            stress_seconds: self.stress_seconds,
        }
    }
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn require_cfl(scheme: &SchemeConfig, h: f64) -> Result<CflReport> {
    let r = check_cfl(scheme.k, h, scheme.c_sr, scheme.params.nu);
    if !r.passed {
        if scheme.allow_cfl_violation {
            log::warn!("running with violated CFL restriction: {r}");
        } else {
            return Err(Error::Cfl(r));
        }
    }
    Ok(r)
}

fn stress_operator(space: &Arc<FunctionSpace>, disc: &Discretization, cfg: &ScenarioConfig) -> Result<BoxedOperator> {
    form_operator(space, &GradientForm::stress_energy(&cfg.params), disc.backend)
}

/// Writes the table, or a partial one when `failure` is set, and returns
/// the series or the failure.
fn finish(
    cfg: &ScenarioConfig,
    command: &str,
    table_name: &str,
    series: ErrorSeries,
    out: Option<&Path>,
    info: (&crate::mesh::MeshStatistics, CflReport, usize, usize, crate::assembly::OperatorBackend),
    failure: Option<Error>,
) -> Result<ErrorSeries> {
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        let mut files = Vec::new();
        let r: Result<()> = (|| {
            write_text(dir, "config.toml", &cfg.to_toml()?, &mut files)?;
            if series.entries.len() >= 2 {
                let name = if failure.is_some() { format!("partial_{table_name}") } else { table_name.to_string() };
                emit_convergence_table(&series, create(dir, &name, &mut files)?)?;
            }
            let mut m = manifest(cfg, command, info.0, info.1, info.2, info.3, info.4, Vec::new())?;
            if let Some(f) = &failure {
                m.notes.push(format!("study aborted: {f}"));
            }
            m.outputs = files
                .iter()
                .map(|p| p.strip_prefix(dir).unwrap_or(p).to_string_lossy().into_owned())
                .collect();
            m.outputs.push("manifest.toml".into());
            fs::write(dir.join("manifest.toml"), m.to_toml()?)?;
            Ok(())
        })();
        stage(r, "output")?;
    }
    match failure {
        Some(e) => Err(e),
        None => Ok(series),
    }
}

/// Runs the reference step and every study step on the configured mesh and
/// records `max_n` of the displacement and stress differences at the shared
/// time levels.
pub fn cmd_convergence_time(cfg: &ScenarioConfig, out: Option<&Path>) -> Result<ErrorSeries> {
    let study = cfg
        .time_study
        .clone()
        .ok_or_else(|| Error::Config("configuration has no temporal study".into()))?;
    let mesh = Arc::new(stage(build_box_mesh(&cfg.domain), "mesh")?);
    let h = mesh.h();
    let space = Arc::new(stage(FunctionSpace::new(mesh, cfg.degree), "function space")?);
    let base = cfg.scheme_config();
    let disc = stage(Discretization::new(Arc::clone(&space), &base), "assembly")?;
    let stress_op = stage(stress_operator(&space, &disc, cfg), "assembly")?;
    let data = cfg.initial_data(&space);

    let mut ref_cfg = base;
    ref_cfg.k = study.k_ref;
    let n_ref = stage(ref_cfg.num_steps(), "configuration")?;
    let mut worst_cfl = require_cfl(&ref_cfg, h)?;
    let mut reference = stage(Stepper::new(&disc, ref_cfg, &data), "initialisation")?;

    let mut runs = Vec::new();
    for &k in &study.ks {
        let mut c = base;
        c.k = k;
        let cfl = require_cfl(&c, h)?;
        if cfl.ratio > worst_cfl.ratio {
            worst_cfl = cfl;
        }
        let ratio = (k / study.k_ref).round() as usize;
        let t = Instant::now();
        let stepper = stage(Stepper::new(&disc, c, &data), "initialisation")?;
        let mut tr = Tracker::new();
        tr.run_seconds += t.elapsed().as_secs_f64();
        runs.push((ratio, stepper, tr));
    }
    for (_, s, tr) in runs.iter_mut() {
        let e = diff(&reference.state().w_prev, &s.state().w_prev);
        tr.record(&e, &*disc.mass, &*stress_op);
    }

    let mut failure = None;
    'levels: for m in 1..=n_ref {
        if m >= 2 {
            if let Err(e) = reference.step() {
                failure = Some(e.in_stage("reference run"));
                break;
            }
        }
        for (ratio, s, tr) in runs.iter_mut() {
            if m % *ratio != 0 {
                continue;
            }
            if m / *ratio >= 2 {
                let t = Instant::now();
                if let Err(e) = s.step() {
                    failure = Some(e.in_stage("study run"));
                    break 'levels;
                }
                tr.run_seconds += t.elapsed().as_secs_f64();
            }
            let e = diff(&reference.state().w_curr, &s.state().w_curr);
            tr.record(&e, &*disc.mass, &*stress_op);
        }
    }

    let series = ErrorSeries {
        parameter: "k".into(),
        reference: format!("k = {:e}", study.k_ref),
        factor: 3.0,
        entries: study.ks.iter().zip(&runs).map(|(&k, r)| r.2.entry(k)).collect(),
    };
    let stats = space.mesh().statistics();
    let info = (&stats, worst_cfl, n_ref, space.num_vector_dofs(), disc.backend);
    finish(cfg, "convergence-time", "convergence_time.csv", series, out, info, failure)
}

fn cube_space(domain: &BoxDomain, cells: usize, degree: usize) -> Result<Arc<FunctionSpace>> {
    let d = BoxDomain::new(domain.lo, domain.hi, [cells; 3])?;
    let mesh = build_box_mesh(&d)?;
    Ok(Arc::new(FunctionSpace::new(Arc::new(mesh), degree)?))
}

/// Runs every study mesh and the reference mesh with the same step and
/// compares them on the reference space after exact injection.
pub fn cmd_convergence_space(cfg: &ScenarioConfig, out: Option<&Path>) -> Result<ErrorSeries> {
    let study = cfg
        .space_study
        .clone()
        .ok_or_else(|| Error::Config("configuration has no spatial study".into()))?;
    let mut scheme = cfg.scheme_config();
    scheme.k = study.k;
    let steps = stage(scheme.num_steps(), "configuration")?;

    let ref_space = stage(cube_space(&cfg.domain, study.cells_ref, cfg.degree), "reference space")?;
    let mut worst_cfl = require_cfl(&scheme, ref_space.mesh().h())?;
    let ref_disc = stage(Discretization::new(Arc::clone(&ref_space), &scheme), "reference assembly")?;
    let stress_op = stage(stress_operator(&ref_space, &ref_disc, cfg), "reference assembly")?;
    let ref_data = cfg.initial_data(&ref_space);

    let mut spaces = Vec::new();
    for &c in &study.cells {
        let t = Instant::now();
        let sp = stage(cube_space(&cfg.domain, c, cfg.degree), "study space")?;
        let cfl = require_cfl(&scheme, sp.mesh().h())?;
        if cfl.ratio > worst_cfl.ratio {
            worst_cfl = cfl;
        }
        let disc = stage(Discretization::new(Arc::clone(&sp), &scheme), "study assembly")?;
        let inj = stage(Injection::new(&sp, &ref_space), "injection")?;
        spaces.push((sp, disc, inj, t.elapsed().as_secs_f64()));
    }
    let mut reference = stage(Stepper::new(&ref_disc, scheme, &ref_data), "initialisation")?;
    let mut runs = Vec::new();
    for (sp, disc, _, setup) in &spaces {
        let data = cfg.initial_data(sp);
        let mut tr = Tracker::new();
        tr.run_seconds = *setup;
        runs.push((stage(Stepper::new(disc, scheme, &data), "initialisation")?, tr));
    }
    let compare = |reference: &Stepper, runs: &mut Vec<(Stepper, Tracker)>, initial: bool| {
        for ((s, tr), (sp, _, inj, _)) in runs.iter_mut().zip(&spaces) {
            let (wr, wc) = if initial {
                (&reference.state().w_prev, &s.state().w_prev)
            } else {
                (&reference.state().w_curr, &s.state().w_curr)
            };
            let e = diff(wr, &inj.apply(sp, wc));
            tr.record(&e, &*ref_disc.mass, &*stress_op);
        }
    };
    compare(&reference, &mut runs, true);
    compare(&reference, &mut runs, false);
    let mut failure = None;
    'levels: for n in 2..=steps {
        if let Err(e) = reference.step() {
            failure = Some(e.in_stage("reference run"));
            break;
        }
        for (s, tr) in runs.iter_mut() {
            let t = Instant::now();
            if let Err(e) = s.step() {
                failure = Some(e.in_stage("study run"));
                break 'levels;
            }
            tr.run_seconds += t.elapsed().as_secs_f64();
        }
        compare(&reference, &mut runs, false);
        log::debug!("spatial study level {n}/{steps}");
    }
    let extent = (0..3).map(|i| cfg.domain.hi[i] - cfg.domain.lo[i]).fold(0.0, f64::max);
    let series = ErrorSeries {
        parameter: "h".into(),
        reference: format!("{} cells per axis", study.cells_ref),
        factor: 3.0,
        entries: study
            .cells
            .iter()
            .zip(&runs)
            .map(|(&c, r)| r.1.entry(extent / c as f64))
            .collect(),
    };
    let stats = ref_space.mesh().statistics();
    let info = (&stats, worst_cfl, steps, ref_space.num_vector_dofs(), ref_disc.backend);
    finish(cfg, "convergence-space", "convergence_space.csv", series, out, info, failure)
}
