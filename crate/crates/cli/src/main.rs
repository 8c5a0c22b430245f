use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use elastodyn::io::{emit_convergence_table, format_sci, format_stress_matrix};
use elastodyn::scenarios::{
    cmd_convergence_space, cmd_convergence_time, cmd_run, cmd_stability_demo, exit_code, load_config, mesh_info,
    Preset, ScenarioConfig,
};
use elastodyn::{Error, Result};

/// Explicit finite-element solver for three-dimensional linear elastodynamics.
#[derive(Debug, Parser)]
#[command(name = "elastodyn", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one scenario and write its artifacts.
    Run(Common),
    /// Temporal self-convergence study.
    ConvergenceTime(Common),
    /// Spatial self-convergence study.
    ConvergenceSpace(Common),
    /// Compare a stable run with one that violates the time-step restriction.
    StabilityDemo(Common),
    /// Print mesh, space and time-step information without running.
    MeshInfo(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// TOML scenario file.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Built-in scenario.
    #[arg(long, value_parser = parse_preset)]
    preset: Option<Preset>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Polynomial degree (1-4), overriding the scenario.
    #[arg(long)]
    degree: Option<usize>,
    /// Use the full reference resolution instead of the reduced one.
    #[arg(long)]
    full: bool,
    /// Run even when the time-step restriction is violated.
    #[arg(long)]
    allow_cfl_violation: bool,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn parse_preset(s: &str) -> std::result::Result<Preset, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Run,
    Time,
    Space,
    Stability,
    Info,
}

impl Kind {
    fn label(self) -> &'static str {
        match self {
            Kind::Run => "run",
            Kind::Time => "convergence-time",
            Kind::Space => "convergence-space",
            Kind::Stability => "stability-demo",
            Kind::Info => "mesh-info",
        }
    }
}

fn resolve(c: &Common, kind: Kind) -> Result<ScenarioConfig> {
    let mut cfg = match (&c.config, c.preset) {
        (Some(path), _) => {
            if c.full {
                log::warn!("--full only applies to presets; using the resolution in {}", path.display());
            }
            let cfg = load_config(path)?;
            match kind {
                Kind::Time if cfg.time_study.is_none() => {
                    return Err(Error::Config("config has no [study] k / k_ref".into()))
                }
                Kind::Space if cfg.space_study.is_none() => {
                    return Err(Error::Config("config has no [study] cells / cells_ref".into()))
                }
                _ => cfg,
            }
        }
        (None, Some(p)) => match kind {
            Kind::Time => p.time_study(c.full)?,
            Kind::Space => p.space_study(c.full)?,
            _ => p.config(c.full)?,
        },
        (None, None) => return Err(Error::Config("give --config or --preset".into())),
    };
    if let Some(d) = c.degree {
        cfg.degree = d;
        if !(1..=4).contains(&d) {
            return Err(Error::Config(format!("--degree must be in 1..=4, got {d}")));
        }
    }
    if c.allow_cfl_violation {
        cfg.numerics.allow_cfl_violation = true;
    }
    cfg.validate()?;
    if c.full {
        let cells: usize = match (&cfg.space_study, kind) {
            (Some(s), Kind::Space) => s.cells_ref,
            _ => cfg.domain.cells.into_iter().max().unwrap_or(1),
        };
        let dofs = 3 * (cfg.degree * cells + 1).pow(3);
        log::warn!(
            "--full: the largest system has about {dofs} unknowns; expect hours of run time and several GB of memory"
        );
        eprintln!("warning: full reference resolution requested ({dofs} unknowns in the largest system)");
    }
    Ok(cfg)
}

fn out_dir(c: &Common, cfg: &ScenarioConfig, kind: Kind) -> PathBuf {
    c.out
        .clone()
        .unwrap_or_else(|| Path::new("output").join(format!("{}-{}", cfg.name, kind.label())))
}

fn execute(c: &Common, kind: Kind) -> Result<()> {
    if let Some(n) = c.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("--threads: {e}")))?;
    }
    let cfg = resolve(c, kind)?;
    match kind {
        Kind::Info => {
            let info = mesh_info(&cfg)?;
            let text = toml::to_string(&info).map_err(|e| Error::InvalidArgument(e.to_string()))?;
            print!("{text}");
        }
        Kind::Run => {
            let dir = out_dir(c, &cfg, kind);
            let r = cmd_run(&cfg, Some(&dir))?;
            let s = &r.summary;
            println!("scenario {}  (h = {}, degree {})", s.name, format_sci(s.h), cfg.degree);
            println!("max displacement norm  {}", format_sci(s.displacement));
            println!("max stress component norms:");
            print!("{}", format_stress_matrix(&s.stress));
            for note in &r.manifest.notes {
                println!("note: {note}");
            }
            if let Some(target) = c.preset.and_then(|p| p.parameters().reference) {
                let ours = [s.stress[0][0], s.stress[1][1], s.stress[2][2], s.stress[0][1], s.stress[0][2], s.stress[1][2]];
                println!("reference values (informational): displacement {}", target.displacement);
                for (name, (p, o)) in ["11", "22", "33", "12", "13", "23"].iter().zip(target.stress.iter().zip(ours)) {
                    println!("  kappa_{name}: reference {p}, computed {}", format_sci(o));
                }
            }
            println!("artifacts in {}", dir.display());
        }
        Kind::Time | Kind::Space => {
            let dir = out_dir(c, &cfg, kind);
            let series = if kind == Kind::Time {
                cmd_convergence_time(&cfg, Some(&dir))?
            } else {
                cmd_convergence_space(&cfg, Some(&dir))?
            };
            let mut buf = Vec::new();
            emit_convergence_table(&series, &mut buf)?;
            print!("{}", String::from_utf8_lossy(&buf));
            println!("reference: {}; artifacts in {}", series.reference, dir.display());
        }
        Kind::Stability => {
            let dir = out_dir(c, &cfg, kind);
            let r = cmd_stability_demo(&cfg, Some(&dir))?;
            println!("compliant run:  {}", r.compliant_cfl);
            println!(
                "  max norm {} (pulse window max {}), bounded: {}",
                format_sci(r.compliant_max),
                format_sci(r.window_max),
                r.bounded
            );
            if let Some(d) = r.post_pulse_energy_drift {
                println!("  energy drift after the pulse {}", format_sci(d));
            }
            println!("violating run:  {}", r.violating_cfl);
            match (&r.violating_abort_step, &r.violating_abort_reason) {
                (Some(n), Some(why)) => println!("  aborted at step {n}: {why}"),
                _ => println!("  growth factor {}", format_sci(r.growth)),
            }
            println!("  unstable: {}", r.unstable);
            println!("artifacts in {}", dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (common, kind) = match &cli.command {
        Command::Run(c) => (c, Kind::Run),
        Command::ConvergenceTime(c) => (c, Kind::Time),
        Command::ConvergenceSpace(c) => (c, Kind::Space),
        Command::StabilityDemo(c) => (c, Kind::Stability),
        Command::MeshInfo(c) => (c, Kind::Info),
    };
    match execute(common, kind) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
