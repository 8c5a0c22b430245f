//! Continuous Lagrange spaces on Kuhn meshes.
//!
//! On a structured Kuhn mesh the degree-`d` Lagrange nodes of every
//! tetrahedron fall on the `d`-times refined vertex lattice, so a node's
//! global index is its refined-lattice index (x fastest). Shared faces and
//! edges therefore get identical DOFs without any hashing.

use std::sync::Arc;

use crate::fem::{QuadratureRule, ReferenceElement, Tabulation, TetGeometry};
use crate::mesh::{Mesh, TETS_PER_CELL};
use crate::{Error, Point3, Result};

#[derive(Debug, Clone)]
pub struct FunctionSpace {
    mesh: Arc<Mesh>,
    element: ReferenceElement,
    lattice: [usize; 3],
    /// `cell_dofs[t * nb + i]`: global scalar DOF of local basis `i` on tet `t`.
    cell_dofs: Vec<usize>,
    node_positions: Vec<Point3>,
    boundary_dofs: Vec<usize>,
    is_boundary: Vec<bool>,
    geometry: Vec<TetGeometry>,
}

/// A point located inside a tetrahedron of the mesh.
#[derive(Debug, Clone, Copy)]
pub struct PointLocation {
    pub tet: usize,
    pub reference: [f64; 3],
}

impl FunctionSpace {
    pub fn new(mesh: Arc<Mesh>, degree: usize) -> Result<Self> {
        let element = ReferenceElement::new(degree)?;
        let nb = element.num_basis();
        let cells = mesh.domain().cells;
        let lattice = [
            degree * cells[0] + 1,
            degree * cells[1] + 1,
            degree * cells[2] + 1,
        ];
        let num_dofs = lattice[0] * lattice[1] * lattice[2];

        let mut cell_dofs = Vec::with_capacity(mesh.num_tets() * nb);
        for tet in mesh.tets() {
            let grid = tet.map(|v| mesh.vertex_grid_index(v));
            for alpha in element.nodes() {
                let mut idx = [0usize; 3];
                for (corner, &a) in grid.iter().zip(alpha) {
                    for c in 0..3 {
                        idx[c] += a * corner[c];
                    }
                }
                cell_dofs.push(idx[0] + lattice[0] * (idx[1] + lattice[1] * idx[2]));
            }
        }

        let domain = mesh.domain();
        let step = domain.cell_size().map(|s| s / degree as f64);
        let mut node_positions = Vec::with_capacity(num_dofs);
        let mut is_boundary = Vec::with_capacity(num_dofs);
        let mut boundary_dofs = Vec::new();
        for k in 0..lattice[2] {
            for j in 0..lattice[1] {
                for i in 0..lattice[0] {
                    let idx = [i, j, k];
                    let mut p = [0.0; 3];
                    let mut on = false;
                    for a in 0..3 {
                        p[a] = if idx[a] + 1 == lattice[a] {
                            domain.hi[a]
                        } else {
                            domain.lo[a] + idx[a] as f64 * step[a]
                        };
                        on |= idx[a] == 0 || idx[a] + 1 == lattice[a];
                    }
                    if on {
                        boundary_dofs.push(node_positions.len());
                    }
                    node_positions.push(p);
                    is_boundary.push(on);
                }
            }
        }

        let geometry = (0..mesh.num_tets())
            .map(|t| TetGeometry::new(&mesh.tet_vertices(t)))
            .collect();

        Ok(Self {
            mesh,
            element,
            lattice,
            cell_dofs,
            node_positions,
            boundary_dofs,
            is_boundary,
            geometry,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> Arc<Mesh> {
        Arc::clone(&self.mesh)
    }

    pub fn element(&self) -> &ReferenceElement {
        &self.element
    }

    pub fn degree(&self) -> usize {
        self.element.degree()
    }

    pub fn num_basis(&self) -> usize {
        self.element.num_basis()
    }

    /// Number of scalar DOFs.
    pub fn num_dofs(&self) -> usize {
        self.node_positions.len()
    }

    /// Length of a displacement coefficient vector (three stacked blocks).
    pub fn num_vector_dofs(&self) -> usize {
        3 * self.num_dofs()
    }

    pub fn lattice_shape(&self) -> [usize; 3] {
        self.lattice
    }

    pub fn tet_dofs(&self, t: usize) -> &[usize] {
        let nb = self.num_basis();
        &self.cell_dofs[t * nb..(t + 1) * nb]
    }

    pub fn node_positions(&self) -> &[Point3] {
        &self.node_positions
    }

    /// Scalar DOF sitting on each mesh vertex.
    pub fn vertex_dofs(&self) -> Vec<usize> {
        let d = self.degree();
        (0..self.mesh.num_vertices())
            .map(|v| {
                let g = self.mesh.vertex_grid_index(v);
                d * g[0] + self.lattice[0] * (d * g[1] + self.lattice[1] * d * g[2])
            })
            .collect()
    }

    pub fn boundary_dofs(&self) -> &[usize] {
        &self.boundary_dofs
    }

    pub fn is_boundary_dof(&self, i: usize) -> bool {
        self.is_boundary[i]
    }

    /// Scalar DOFs not on the boundary, in increasing order.
    pub fn interior_dofs(&self) -> Vec<usize> {
        (0..self.num_dofs()).filter(|&i| !self.is_boundary[i]).collect()
    }

    /// Vector DOFs (component-major) that lie on the boundary.
    pub fn boundary_vector_dofs(&self) -> Vec<usize> {
        let n = self.num_dofs();
        (0..3)
            .flat_map(|c| self.boundary_dofs.iter().map(move |&i| c * n + i))
            .collect()
    }

    pub fn geometry(&self, t: usize) -> &TetGeometry {
        &self.geometry[t]
    }

    /// Volume rule exact for products of two shape functions.
    pub fn mass_rule(&self) -> QuadratureRule {
        QuadratureRule::with_order(2 * self.degree())
    }

    pub fn tabulate_rule(&self, rule: &QuadratureRule) -> Tabulation {
        let pts: Vec<[f64; 3]> = (0..rule.len()).map(|i| rule.reference_point(i)).collect();
        self.element.tabulate(&pts)
    }

    /// Scalar nodal interpolant.
    pub fn interpolate_scalar(&self, f: impl Fn(&Point3) -> f64) -> Vec<f64> {
        self.node_positions.iter().map(f).collect()
    }

    /// Vector nodal interpolant in component-major layout.
    pub fn interpolate(&self, f: impl Fn(&Point3) -> [f64; 3]) -> Vec<f64> {
        let n = self.num_dofs();
        let mut out = vec![0.0; 3 * n];
        for (i, p) in self.node_positions.iter().enumerate() {
            let v = f(p);
            for c in 0..3 {
                out[c * n + i] = v[c];
            }
        }
        out
    }

    /// Zeroes the boundary entries of a vector field.
    pub fn zero_boundary(&self, coeffs: &mut [f64]) {
        let n = self.num_dofs();
        for c in 0..coeffs.len() / n {
            for &i in &self.boundary_dofs {
                coeffs[c * n + i] = 0.0;
            }
        }
    }

    /// Finds the tetrahedron containing `p` by inverting the structured grid.
    pub fn locate(&self, p: &Point3) -> Result<PointLocation> {
        let cell = self.mesh.locate_cell(p)?;
        let first = TETS_PER_CELL * self.mesh.cell_index(cell);
        let mut best: Option<(f64, PointLocation)> = None;
        for t in first..first + TETS_PER_CELL {
            let xi = self.geometry[t].to_reference(p);
            let lam0 = 1.0 - xi[0] - xi[1] - xi[2];
            let worst = lam0.min(xi[0]).min(xi[1]).min(xi[2]);
            if best.as_ref().map_or(true, |(w, _)| worst > *w) {
                best = Some((worst, PointLocation { tet: t, reference: xi }));
            }
            if worst >= 0.0 {
                break;
            }
        }
        let (_, loc) = best.expect("cell has tetrahedra");
        Ok(loc)
    }

    pub fn evaluate_scalar(&self, coeffs: &[f64], p: &Point3) -> Result<f64> {
        check_len(coeffs.len(), self.num_dofs())?;
        let loc = self.locate(p)?;
        let phi = self.element.values_at(&loc.reference);
        Ok(self
            .tet_dofs(loc.tet)
            .iter()
            .zip(&phi)
            .map(|(&g, v)| coeffs[g] * v)
            .sum())
    }

    /// Value of a displacement field at `p`.
    pub fn evaluate_field(&self, coeffs: &[f64], p: &Point3) -> Result<[f64; 3]> {
        check_len(coeffs.len(), self.num_vector_dofs())?;
        let loc = self.locate(p)?;
        Ok(self.evaluate_located(coeffs, &loc))
    }

    pub fn evaluate_located(&self, coeffs: &[f64], loc: &PointLocation) -> [f64; 3] {
        let n = self.num_dofs();
        let phi = self.element.values_at(&loc.reference);
        let mut out = [0.0; 3];
        for (&g, v) in self.tet_dofs(loc.tet).iter().zip(&phi) {
            for c in 0..3 {
                out[c] += coeffs[c * n + g] * v;
            }
        }
        out
    }

    /// Value and Jacobian `∂w_a/∂x_b` of a displacement field at a located point.
    pub fn evaluate_with_jacobian(
        &self,
        coeffs: &[f64],
        loc: &PointLocation,
    ) -> ([f64; 3], [[f64; 3]; 3]) {
        let n = self.num_dofs();
        let nb = self.num_basis();
        let mut phi = vec![0.0; nb];
        let mut grad = vec![[0.0; 3]; nb];
        self.element.evaluate(&loc.reference, &mut phi, &mut grad);
        let geo = &self.geometry[loc.tet];
        let mut value = [0.0; 3];
        let mut jac = [[0.0; 3]; 3];
        for (i, &g) in self.tet_dofs(loc.tet).iter().enumerate() {
            let dphi = geo.physical_gradient(&grad[i]);
            for a in 0..3 {
                let c = coeffs[a * n + g];
                value[a] += c * phi[i];
                for b in 0..3 {
                    jac[a][b] += c * dphi[b];
                }
            }
        }
        (value, jac)
    }
}

fn check_len(got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::InvalidArgument(format!(
            "coefficient vector has length {got}, expected {expected}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_box_mesh, BoxDomain};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn space(n: usize, d: usize) -> FunctionSpace {
        let mesh = build_box_mesh(&BoxDomain::unit_cube(n).unwrap()).unwrap();
        FunctionSpace::new(Arc::new(mesh), d).unwrap()
    }

    #[test]
    fn dof_counts() {
        assert_eq!(space(1, 1).num_dofs(), 8);
        assert_eq!(space(1, 2).num_dofs(), 27);
        assert_eq!(space(3, 4).num_dofs(), 2197);
    }

    #[test]
    fn quadratic_dofs_match_brute_force_dedup() {
        // independent count: dedup every tet's lattice nodes by coordinates
        let sp = space(1, 2);
        let mesh = sp.mesh();
        let mut seen: Vec<[i64; 3]> = Vec::new();
        for t in 0..mesh.num_tets() {
            let v = mesh.tet_vertices(t);
            for a in sp.element().nodes() {
                let mut p = [0.0; 3];
                for (corner, &w) in v.iter().zip(a) {
                    for c in 0..3 {
                        p[c] += w as f64 * corner[c] / 2.0;
                    }
                }
                let key = p.map(|x| (x * 1e9).round() as i64);
                if !seen.contains(&key) {
                    seen.push(key);
                }
            }
        }
        assert_eq!(seen.len(), 27);
    }

    #[test]
    fn local_nodes_match_global_positions() {
        let sp = space(2, 3);
        for t in 0..sp.mesh().num_tets() {
            let geo = sp.geometry(t);
            for (i, &g) in sp.tet_dofs(t).iter().enumerate() {
                let p = geo.to_physical(&sp.element().node_point(i));
                let q = sp.node_positions()[g];
                for c in 0..3 {
                    assert!((p[c] - q[c]).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_degree() {
        let mesh = build_box_mesh(&BoxDomain::unit_cube(1).unwrap()).unwrap();
        assert!(FunctionSpace::new(Arc::new(mesh.clone()), 0).is_err());
        assert!(FunctionSpace::new(Arc::new(mesh), 5).is_err());
    }

    #[test]
    fn boundary_dofs_are_on_faces() {
        let sp = space(3, 2);
        let interior = sp.interior_dofs().len();
        assert_eq!(interior, 5 * 5 * 5);
        for &b in sp.boundary_dofs() {
            let p = sp.node_positions()[b];
            assert!(p.iter().any(|&x| x.abs() < 1e-14 || (x - 1.0).abs() < 1e-14));
        }
    }

    #[test]
    fn interpolation_reproduces_linear_and_constant_fields() {
        let sp = space(3, 1);
        let ones = vec![1.0; sp.num_vector_dofs()];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = sp.interpolate(|p| [p[0], 0.0, 0.0]);
        let y = sp.interpolate(|p| [p[1], p[1], p[1]]);
        for _ in 0..50 {
            let p = [rng.gen(), rng.gen(), rng.gen()];
            assert!((sp.evaluate_field(&ones, &p).unwrap()[1] - 1.0).abs() < 1e-12);
            assert!((sp.evaluate_field(&u, &p).unwrap()[0] - p[0]).abs() < 1e-12);
        }
        let v = sp.evaluate_field(&y, &[0.25, 0.5, 0.75]).unwrap();
        assert!((v[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn quartic_interpolation_is_exact_for_quartics() {
        let sp = space(2, 4);
        let f = |p: &Point3| p[0] * p[0] * p[1] * p[1];
        let c = sp.interpolate_scalar(f);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut worst = 0.0_f64;
        for _ in 0..100 {
            let p = [rng.gen(), rng.gen(), rng.gen()];
            worst = worst.max((sp.evaluate_scalar(&c, &p).unwrap() - f(&p)).abs());
        }
        assert!(worst < 1e-11, "{worst}");
    }

    #[test]
    fn evaluation_at_a_node_returns_its_coefficient() {
        let sp = space(2, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let c: Vec<f64> = (0..sp.num_vector_dofs()).map(|_| rng.gen()).collect();
        let n = sp.num_dofs();
        for i in (0..n).step_by(7) {
            let v = sp.evaluate_field(&c, &sp.node_positions()[i]).unwrap();
            for a in 0..3 {
                assert!((v[a] - c[a * n + i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn shared_face_values_agree() {
        // Evaluate on the face shared by two tets from both sides.
        let sp = space(2, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let c: Vec<f64> = (0..sp.num_dofs()).map(|_| rng.gen()).collect();
        let mesh = sp.mesh();
        let tets = mesh.tets();
        let mut checked = 0;
        for a in 0..tets.len() {
            for b in a + 1..tets.len().min(a + 12) {
                let shared: Vec<usize> =
                    tets[a].iter().copied().filter(|v| tets[b].contains(v)).collect();
                if shared.len() != 3 {
                    continue;
                }
                let (w0, w1): (f64, f64) = (rng.gen(), rng.gen());
                let (w0, w1) = if w0 + w1 > 1.0 { (1.0 - w0, 1.0 - w1) } else { (w0, w1) };
                let w2 = 1.0 - w0 - w1;
                let vs = shared.iter().map(|&v| mesh.vertices()[v]).collect::<Vec<_>>();
                let p: Point3 =
                    std::array::from_fn(|i| w0 * vs[0][i] + w1 * vs[1][i] + w2 * vs[2][i]);
                let eval = |t: usize| {
                    let xi = sp.geometry(t).to_reference(&p);
                    let phi = sp.element().values_at(&xi);
                    sp.tet_dofs(t).iter().zip(&phi).map(|(&g, v)| c[g] * v).sum::<f64>()
                };
                assert!((eval(a) - eval(b)).abs() < 1e-12);
                checked += 1;
            }
        }
        assert!(checked > 10);
    }

    #[test]
    fn evaluation_outside_domain_fails() {
        let sp = space(1, 1);
        let c = vec![0.0; sp.num_vector_dofs()];
        assert!(matches!(
            sp.evaluate_field(&c, &[2.0, 0.5, 0.5]),
            Err(Error::PointOutsideDomain(_))
        ));
    }
}
