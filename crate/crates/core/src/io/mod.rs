//! Run artifacts: CSV tables, legacy VTK files and run manifests.

pub mod manifest;
pub mod table;
pub mod vtk;

pub use manifest::{content_hash, RunManifest, Timings};
pub use table::{
    emit_convergence_table, emit_monitor_csv, emit_scenario_table, format_sci, format_stress_matrix,
    ScenarioSummary,
};
pub use vtk::{emit_vtk, read_vtk_points, VtkFields};
