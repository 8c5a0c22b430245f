//! Explicit finite-element solver for the three-dimensional linear
//! elastodynamic system
//!
//! ```text
//! ν w_tt − (λ+μ) ∇(∇·w) − μ ∇·∇̄w = g        in Ω × [0, T_f]
//! κ = κ⁰ + λ (∇·w) I + 2μ ψ(w)
//! w = 0                                        on ∂Ω
//! ```
//!
//! Space is discretized with continuous Lagrange tetrahedra of degree 1–4 on
//! structured Kuhn meshes of a box; time is advanced with a three-level
//! Lax-Wendroff/interpolation scheme that needs one mass-matrix solve per step.
//!
//! The crate is organized bottom-up:
//!
//! - [`mesh`]: Kuhn subdivision of a box into tetrahedra.
//! - [`fem`]: reference elements, quadrature, function spaces, point evaluation.
//! - [`sparse`] / [`assembly`]: CSR and element-template operators, mass,
//!   stiffness and load assembly, Dirichlet elimination.
//! - [`solver`]: Jacobi-preconditioned conjugate gradients.
//! - [`source`]: the ball-localized Ricker-type driving force.
//! - [`timestepper`]: CFL check, initialization, the two-step update, energy.
//! - [`stress`]: stress recovery and stress norms.
//! - [`norms`]: norms, cross-mesh differences and convergence orders.
//! - [`io`]: CSV tables, legacy VTK and run manifests.
//! - [`scenarios`]: configuration, presets and study drivers.

pub mod assembly;
pub mod error;
pub mod fem;
pub mod io;
pub mod mesh;
pub mod norms;
pub mod scenarios;
pub mod solver;
pub mod source;
pub mod sparse;
pub mod stress;
pub mod timestepper;

pub use error::{Error, Result};

/// A point or vector in physical space.
pub type Point3 = [f64; 3];
