//! Lagrange finite elements on tetrahedra.

mod geometry;
mod quadrature;
mod reference;
mod space;

pub use geometry::TetGeometry;
pub use quadrature::{gauss_jacobi, QuadratureRule};
pub use reference::{ReferenceElement, Tabulation, MAX_DEGREE};
pub use space::{FunctionSpace, PointLocation};
