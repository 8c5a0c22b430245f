//! Configuration, presets and the command drivers behind the CLI.

pub mod config;
pub mod presets;
pub mod run;
pub mod study;

pub use config::{
    load_config, parse_config, ConfigFile, InitialKind, Num, Numerics, ScenarioConfig, SpaceStudy, TimeStudy,
};
pub use presets::{site_kappa0, ReferenceTargets, Preset, ScenarioPreset};
pub use run::{cmd_run, cmd_stability_demo, mesh_info, MeshInfo, RunReport, StabilityReport};
pub use study::{cmd_convergence_space, cmd_convergence_time};

use crate::Error;

/// Process exit status for an error: 2 configuration, 3 solver or
/// non-finite values, 4 refused time step, 1 anything else.
pub fn exit_code(e: &Error) -> i32 {
    match e.root() {
        Error::Config(_) | Error::InvalidDomain(_) | Error::UnsupportedDegree(_) => 2,
        Error::Solver(_) | Error::NonFinite { .. } => 3,
        Error::Cfl(_) => 4,
        _ => 1,
    }
}
