use nalgebra::{Matrix3, Vector3};

use crate::Point3;

/// Affine map `x = x0 + J ξ` from the reference tetrahedron
/// `{ξ ≥ 0, ξ₁+ξ₂+ξ₃ ≤ 1}` onto a physical tetrahedron.
#[derive(Debug, Clone, Copy)]
pub struct TetGeometry {
    pub origin: Vector3<f64>,
    pub jacobian: Matrix3<f64>,
    /// `J⁻ᵀ`, mapping reference gradients to physical gradients.
    pub inverse_transpose: Matrix3<f64>,
    pub det: f64,
}

impl TetGeometry {
    pub fn new(v: &[Point3; 4]) -> Self {
        let origin = Vector3::from(v[0]);
        let col = |i: usize| Vector3::from(v[i]) - origin;
        let jacobian = Matrix3::from_columns(&[col(1), col(2), col(3)]);
        let det = jacobian.determinant();
        let inverse_transpose = jacobian
            .try_inverse()
            .expect("degenerate tetrahedron")
            .transpose();
        Self {
            origin,
            jacobian,
            inverse_transpose,
            det,
        }
    }

    pub fn volume(&self) -> f64 {
        self.det.abs() / 6.0
    }

    pub fn to_physical(&self, xi: &[f64; 3]) -> Point3 {
        let x = self.origin + self.jacobian * Vector3::from(*xi);
        [x[0], x[1], x[2]]
    }

    pub fn to_reference(&self, p: &Point3) -> [f64; 3] {
        let rhs = Vector3::from(*p) - self.origin;
        // J⁻¹ = (J⁻ᵀ)ᵀ
        let xi = self.inverse_transpose.transpose() * rhs;
        [xi[0], xi[1], xi[2]]
    }

    pub fn physical_gradient(&self, g: &[f64; 3]) -> [f64; 3] {
        let r = self.inverse_transpose * Vector3::from(*g);
        [r[0], r[1], r[2]]
    }
}
