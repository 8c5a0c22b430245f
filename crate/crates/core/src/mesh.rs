//! Structured tetrahedral meshes of axis-aligned boxes.
//!
//! Every hexahedral cell is split into six tetrahedra by the Kuhn
//! (Freudenthal) subdivision: one tetrahedron per monotone lattice path from
//! the cell's lower corner to its upper corner. All cells share the same
//! split, so the mesh is conforming and every cell carries translated copies
//! of the same six tetrahedra.

use serde::Serialize;

use crate::{Error, Point3, Result};

/// Tetrahedra per hexahedral cell.
pub const TETS_PER_CELL: usize = 6;

/// Axis permutations defining the six Kuhn tetrahedra, in tet-local order.
const KUHN_PATHS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

/// Tolerance for classifying vertices onto the box faces.
const BOUNDARY_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxDomain {
    pub lo: Point3,
    pub hi: Point3,
    pub cells: [usize; 3],
}

impl BoxDomain {
    pub fn new(lo: Point3, hi: Point3, cells: [usize; 3]) -> Result<Self> {
        for i in 0..3 {
            if !(hi[i] > lo[i]) || !lo[i].is_finite() || !hi[i].is_finite() {
                return Err(Error::InvalidDomain(format!(
                    "axis {i}: need lo < hi, got [{}, {}]",
                    lo[i], hi[i]
                )));
            }
            if cells[i] == 0 {
                return Err(Error::InvalidDomain(format!(
                    "axis {i}: cell count must be positive"
                )));
            }
        }
        Ok(Self { lo, hi, cells })
    }

    /// Box with per-axis cell counts `round((hi - lo) / spacing)`.
    pub fn with_spacing(lo: Point3, hi: Point3, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0) {
            return Err(Error::InvalidDomain(format!(
                "mesh spacing must be positive, got {spacing}"
            )));
        }
        let mut cells = [0usize; 3];
        for i in 0..3 {
            let n = ((hi[i] - lo[i]) / spacing).round();
            if !(n >= 1.0) {
                return Err(Error::InvalidDomain(format!(
                    "axis {i}: spacing {spacing} exceeds the box extent"
                )));
            }
            cells[i] = n as usize;
        }
        Self::new(lo, hi, cells)
    }

    pub fn unit_cube(n: usize) -> Result<Self> {
        Self::new([0.0; 3], [1.0; 3], [n; 3])
    }

    pub fn volume(&self) -> f64 {
        (0..3).map(|i| self.hi[i] - self.lo[i]).product()
    }

    pub fn cell_size(&self) -> Point3 {
        let mut s = [0.0; 3];
        for i in 0..3 {
            s[i] = (self.hi[i] - self.lo[i]) / self.cells[i] as f64;
        }
        s
    }

    pub fn num_cells(&self) -> usize {
        self.cells.iter().product()
    }

    /// Same box and cell counts up to floating point noise.
    pub fn same_box(&self, other: &BoxDomain) -> bool {
        (0..3).all(|i| {
            let scale = (self.hi[i] - self.lo[i]).abs();
            (self.lo[i] - other.lo[i]).abs() <= 1e-12 * scale
                && (self.hi[i] - other.hi[i]).abs() <= 1e-12 * scale
        })
    }

    pub fn contains(&self, p: &Point3, tol: f64) -> bool {
        (0..3).all(|i| {
            let slack = tol * (self.hi[i] - self.lo[i]);
            p[i] >= self.lo[i] - slack && p[i] <= self.hi[i] + slack
        })
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    domain: BoxDomain,
    vertices: Vec<Point3>,
    tets: Vec<[usize; 4]>,
    boundary: Vec<bool>,
    h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeshStatistics {
    pub num_vertices: usize,
    pub num_tets: usize,
    pub h: f64,
    pub min_volume: f64,
    pub max_volume: f64,
}

/// Builds the Kuhn tetrahedralization of `domain`.
///
/// Vertices are numbered lexicographically with x fastest; the tets of cell
/// `c` occupy indices `6c..6c+6`.
pub fn build_box_mesh(domain: &BoxDomain) -> Result<Mesh> {
    let domain = BoxDomain::new(domain.lo, domain.hi, domain.cells)?;
    let [n1, n2, n3] = domain.cells;
    let (v1, v2) = (n1 + 1, n2 + 1);
    let size = domain.cell_size();

    let mut vertices = Vec::with_capacity(v1 * v2 * (n3 + 1));
    let mut boundary = Vec::with_capacity(vertices.capacity());
    for k in 0..=n3 {
        for j in 0..=n2 {
            for i in 0..=n1 {
                let idx = [i, j, k];
                let mut p = [0.0; 3];
                for a in 0..3 {
                    // Snap the last lattice plane onto hi exactly.
                    p[a] = if idx[a] == domain.cells[a] {
                        domain.hi[a]
                    } else {
                        domain.lo[a] + idx[a] as f64 * size[a]
                    };
                }
                let on_face = (0..3).any(|a| {
                    (p[a] - domain.lo[a]).abs() <= BOUNDARY_TOL
                        || (p[a] - domain.hi[a]).abs() <= BOUNDARY_TOL
                });
                vertices.push(p);
                boundary.push(on_face);
            }
        }
    }

    let vid = |i: usize, j: usize, k: usize| i + v1 * (j + v2 * k);
    let mut tets = Vec::with_capacity(TETS_PER_CELL * domain.num_cells());
    for k in 0..n3 {
        for j in 0..n2 {
            for i in 0..n1 {
                for path in KUHN_PATHS.iter() {
                    let mut corner = [0usize; 3];
                    let mut tet = [vid(i, j, k), 0, 0, 0];
                    for (step, &axis) in path.iter().enumerate() {
                        corner[axis] = 1;
                        tet[step + 1] = vid(i + corner[0], j + corner[1], k + corner[2]);
                    }
                    if signed_volume(&vertices, &tet) < 0.0 {
                        tet.swap(2, 3);
                    }
                    tets.push(tet);
                }
            }
        }
    }

    let h = tets
        .iter()
        .map(|t| diameter(&vertices, t))
        .fold(0.0_f64, f64::max);

    Ok(Mesh {
        domain,
        vertices,
        tets,
        boundary,
        h,
    })
}

fn signed_volume(vertices: &[Point3], tet: &[usize; 4]) -> f64 {
    let p0 = vertices[tet[0]];
    let e = |v: usize| {
        let p = vertices[tet[v]];
        [p[0] - p0[0], p[1] - p0[1], p[2] - p0[2]]
    };
    let (a, b, c) = (e(1), e(2), e(3));
    let det = a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
        + a[2] * (b[0] * c[1] - b[1] * c[0]);
    det / 6.0
}

fn diameter(vertices: &[Point3], tet: &[usize; 4]) -> f64 {
    let mut d2 = 0.0_f64;
    for a in 0..4 {
        for b in a + 1..4 {
            let (p, q) = (vertices[tet[a]], vertices[tet[b]]);
            let s: f64 = (0..3).map(|i| (p[i] - q[i]).powi(2)).sum();
            d2 = d2.max(s);
        }
    }
    d2.sqrt()
}

impl Mesh {
    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    pub fn tets(&self) -> &[[usize; 4]] {
        &self.tets
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    /// Maximum tetrahedron diameter.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_tets(&self) -> usize {
        self.tets.len()
    }

    pub fn tet_vertices(&self, t: usize) -> [Point3; 4] {
        let tet = &self.tets[t];
        [
            self.vertices[tet[0]],
            self.vertices[tet[1]],
            self.vertices[tet[2]],
            self.vertices[tet[3]],
        ]
    }

    pub fn tet_volume(&self, t: usize) -> f64 {
        signed_volume(&self.vertices, &self.tets[t])
    }

    /// Integer lattice coordinates of a vertex.
    pub fn vertex_grid_index(&self, v: usize) -> [usize; 3] {
        let v1 = self.domain.cells[0] + 1;
        let v2 = self.domain.cells[1] + 1;
        [v % v1, (v / v1) % v2, v / (v1 * v2)]
    }

    /// Cell containing `p`, clamped onto the closed box. Errors when `p` is
    /// outside the box by more than a relative 1e-12.
    pub fn locate_cell(&self, p: &Point3) -> Result<[usize; 3]> {
        if !self.domain.contains(p, 1e-12) {
            return Err(Error::PointOutsideDomain(*p));
        }
        let size = self.domain.cell_size();
        let mut c = [0usize; 3];
        for a in 0..3 {
            let s = ((p[a] - self.domain.lo[a]) / size[a]).floor();
            c[a] = (s.max(0.0) as usize).min(self.domain.cells[a] - 1);
        }
        Ok(c)
    }

    pub fn cell_index(&self, c: [usize; 3]) -> usize {
        let [n1, n2, _] = self.domain.cells;
        c[0] + n1 * (c[1] + n2 * c[2])
    }

    pub fn statistics(&self) -> MeshStatistics {
        mesh_statistics(self)
    }
}

pub fn mesh_statistics(mesh: &Mesh) -> MeshStatistics {
    let (mut vmin, mut vmax) = (f64::INFINITY, 0.0_f64);
    for t in 0..mesh.num_tets() {
        let v = mesh.tet_volume(t);
        vmin = vmin.min(v);
        vmax = vmax.max(v);
    }
    MeshStatistics {
        num_vertices: mesh.num_vertices(),
        num_tets: mesh.num_tets(),
        h: mesh.h,
        min_volume: vmin,
        max_volume: vmax,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn counts_on_unit_cube() {
        let mesh = build_box_mesh(&BoxDomain::unit_cube(3).unwrap()).unwrap();
        assert_eq!(mesh.num_vertices(), 64);
        assert_eq!(mesh.num_tets(), 162);
        let stats = mesh_statistics(&build_box_mesh(&BoxDomain::unit_cube(2).unwrap()).unwrap());
        assert_eq!(stats.num_vertices, 27);
        assert!(stats.min_volume > 0.0);
    }

    #[test]
    fn single_cell_diameter_is_cube_diagonal() {
        let mesh = build_box_mesh(&BoxDomain::unit_cube(1).unwrap()).unwrap();
        assert!((mesh.h() - 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(mesh.num_tets(), 6);
    }

    #[test]
    fn volumes_partition_the_box() {
        let d = BoxDomain::new([-1.0; 3], [1.0; 3], [3, 3, 3]).unwrap();
        let mesh = build_box_mesh(&d).unwrap();
        let total: f64 = (0..mesh.num_tets()).map(|t| mesh.tet_volume(t)).sum();
        assert!((total - 8.0).abs() <= 1e-12 * 8.0);
        let d = BoxDomain::new([0.0, -2.0, 1.0], [0.5, 1.0, 4.0], [2, 5, 3]).unwrap();
        let mesh = build_box_mesh(&d).unwrap();
        let total: f64 = (0..mesh.num_tets()).map(|t| mesh.tet_volume(t)).sum();
        assert!((total - d.volume()).abs() <= 1e-12 * d.volume());
        assert!(mesh.statistics().min_volume > 0.0);
    }

    #[test]
    fn rejects_degenerate_domains() {
        assert!(BoxDomain::new([0.0; 3], [1.0; 3], [0, 1, 1]).is_err());
        assert!(BoxDomain::new([0.0; 3], [1.0, 0.0, 1.0], [1, 1, 1]).is_err());
        assert!(BoxDomain::with_spacing([0.0; 3], [1.0; 3], -0.5).is_err());
    }

    #[test]
    fn spacing_rounds_to_cell_counts() {
        let d = BoxDomain::with_spacing([-1.0; 3], [1.0; 3], 3f64.powi(-2)).unwrap();
        assert_eq!(d.cells, [18, 18, 18]);
    }

    #[test]
    fn doubling_resolution_halves_h() {
        let h1 = build_box_mesh(&BoxDomain::unit_cube(2).unwrap()).unwrap().h();
        let h2 = build_box_mesh(&BoxDomain::unit_cube(4).unwrap()).unwrap().h();
        assert!((h1 - 2.0 * h2).abs() < 1e-15);
    }

    #[test]
    fn faces_are_shared_by_at_most_two_tets() {
        let mesh = build_box_mesh(&BoxDomain::new([0.0; 3], [1.0; 3], [2, 3, 2]).unwrap()).unwrap();
        let mut faces: HashMap<[usize; 3], usize> = HashMap::new();
        for tet in mesh.tets() {
            for skip in 0..4 {
                let mut f = [0usize; 3];
                let mut m = 0;
                for (i, &v) in tet.iter().enumerate() {
                    if i != skip {
                        f[m] = v;
                        m += 1;
                    }
                }
                f.sort_unstable();
                *faces.entry(f).or_default() += 1;
            }
        }
        for (f, count) in faces {
            let on_boundary = f.iter().all(|&v| mesh.boundary_flags()[v]) && {
                // A face with all vertices on the boundary is a boundary face
                // only if they share a common box plane.
                let d = mesh.domain();
                (0..3).any(|a| {
                    [d.lo[a], d.hi[a]].iter().any(|&plane| {
                        f.iter().all(|&v| (mesh.vertices()[v][a] - plane).abs() < 1e-14)
                    })
                })
            };
            let expected = if on_boundary { 1 } else { 2 };
            assert_eq!(count, expected, "face {f:?}");
        }
    }

    #[test]
    fn boundary_flags_match_faces() {
        let mesh = build_box_mesh(&BoxDomain::unit_cube(3).unwrap()).unwrap();
        let interior = mesh.boundary_flags().iter().filter(|b| !**b).count();
        assert_eq!(interior, 8);
        for (v, p) in mesh.vertices().iter().enumerate() {
            let on = p.iter().any(|&x| x.abs() < 1e-14 || (x - 1.0).abs() < 1e-14);
            assert_eq!(mesh.boundary_flags()[v], on);
        }
    }

    #[test]
    fn locate_cell_clamps_upper_faces() {
        let mesh = build_box_mesh(&BoxDomain::unit_cube(3).unwrap()).unwrap();
        assert_eq!(mesh.locate_cell(&[1.0, 1.0, 1.0]).unwrap(), [2, 2, 2]);
        assert_eq!(mesh.locate_cell(&[0.0, 0.5, 0.34]).unwrap(), [0, 1, 1]);
        assert!(mesh.locate_cell(&[1.1, 0.5, 0.5]).is_err());
    }
}
