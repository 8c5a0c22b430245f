//! Run manifest: everything needed to repeat a run, in stable key order.

use std::collections::BTreeMap;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::mesh::MeshStatistics;
use crate::timestepper::CflReport;
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub program: String,
    pub version: String,
    pub command: String,
    /// Hash of the resolved configuration, see [`content_hash`].
    pub input_hash: String,
    /// `λ + μ > 0`
    pub coercive: bool,
    pub lambda_plus_mu: f64,
    pub num_steps: usize,
    pub num_vector_dofs: usize,
    pub backend: String,
    pub outputs: Vec<String>,
    pub notes: Vec<String>,
    /// `‖κ_h - κ⁰‖` on the boundary at the final level.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary_stress_mismatch: Option<f64>,
    pub mesh: MeshStatistics,
    pub cfl: CflReport,
    pub config: toml::Value,
}

impl RunManifest {
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidArgument(format!("manifest: {e}")))
    }
}

/// Wall-clock seconds per stage; kept apart from the manifest because they
/// change from run to run.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Timings {
    pub seconds: BTreeMap<String, f64>,
}

impl Timings {
    pub fn record(&mut self, stage: &str, seconds: f64) {
        *self.seconds.entry(stage.to_string()).or_insert(0.0) += seconds;
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidArgument(format!("timings: {e}")))
    }
}

/// SHA-256 over `blob <len>\0<content>`, hex encoded.
pub fn content_hash(content: &str) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", content.len()).as_bytes());
    h.update(content.as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}
