//! Stress recovery `κ = κ⁰ + λ(∇·w)I + 2μψ(w)` and its norms.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::{assemble_scalar_mass, MaterialParams};
use crate::fem::{gauss_jacobi, FunctionSpace, QuadratureRule};
use crate::solver::{cg_solve, SolverConfig};
use crate::{Error, Point3, Result};

/// Symmetric 3×3 tensor stored by its six independent components.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SymTensor {
    pub xx: f64,
    pub yy: f64,
    pub zz: f64,
    pub xy: f64,
    pub xz: f64,
    pub yz: f64,
}

/// Component order used for arrays of six: 11, 22, 33, 12, 13, 23.
pub const COMPONENTS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];
pub const COMPONENT_NAMES: [&str; 6] = ["kappa_11", "kappa_22", "kappa_33", "kappa_12", "kappa_13", "kappa_23"];

impl SymTensor {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn identity() -> Self {
        Self {
            xx: 1.0,
            yy: 1.0,
            zz: 1.0,
            ..Self::default()
        }
    }

    pub fn from_array(c: [f64; 6]) -> Self {
        Self {
            xx: c[0],
            yy: c[1],
            zz: c[2],
            xy: c[3],
            xz: c[4],
            yz: c[5],
        }
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.xx, self.yy, self.zz, self.xy, self.xz, self.yz]
    }

    /// Builds from a full matrix; fails unless it is symmetric to `tol`.
    pub fn from_matrix(m: &[[f64; 3]; 3], tol: f64) -> Result<Self> {
        for i in 0..3 {
            for j in 0..i {
                if (m[i][j] - m[j][i]).abs() > tol {
                    return Err(Error::InvalidArgument(format!(
                        "matrix not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(Self::from_array([m[0][0], m[1][1], m[2][2], m[0][1], m[0][2], m[1][2]]))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match (i.min(j), i.max(j)) {
            (0, 0) => self.xx,
            (1, 1) => self.yy,
            (2, 2) => self.zz,
            (0, 1) => self.xy,
            (0, 2) => self.xz,
            (1, 2) => self.yz,
            _ => panic!("index ({i},{j}) out of range"),
        }
    }

    pub fn to_matrix(&self) -> [[f64; 3]; 3] {
        std::array::from_fn(|i| std::array::from_fn(|j| self.get(i, j)))
    }

    /// `Σ_ij κ_ij²` with off-diagonals counted twice.
    pub fn frobenius2(&self) -> f64 {
        self.xx * self.xx
            + self.yy * self.yy
            + self.zz * self.zz
            + 2.0 * (self.xy * self.xy + self.xz * self.xz + self.yz * self.yz)
    }

    pub fn add(&self, o: &SymTensor) -> SymTensor {
        let (a, b) = (self.to_array(), o.to_array());
        SymTensor::from_array(std::array::from_fn(|i| a[i] + b[i]))
    }
}

/// `κ⁰ + λ tr(G) I + μ (G + Gᵀ)` for a displacement Jacobian `G[a][b] = ∂_b w_a`.
pub fn constitutive(kappa0: &SymTensor, params: &MaterialParams, g: &[[f64; 3]; 3]) -> SymTensor {
    let div = g[0][0] + g[1][1] + g[2][2];
    let (l, m) = (params.lambda, params.mu);
    SymTensor {
        xx: kappa0.xx + l * div + 2.0 * m * g[0][0],
        yy: kappa0.yy + l * div + 2.0 * m * g[1][1],
        zz: kappa0.zz + l * div + 2.0 * m * g[2][2],
        xy: kappa0.xy + m * (g[0][1] + g[1][0]),
        xz: kappa0.xz + m * (g[0][2] + g[2][0]),
        yz: kappa0.yz + m * (g[1][2] + g[2][1]),
    }
}

/// Stress at the volume quadrature points of every tet.
#[derive(Debug, Clone)]
pub struct StressField {
    pub rule: QuadratureRule,
    /// `values[t * nq + q]`
    pub values: Vec<SymTensor>,
    /// Physical quadrature weights, same layout.
    pub weights: Vec<f64>,
    pub points: Vec<Point3>,
    pub kappa0: SymTensor,
}

/// Jacobian `∂_b w_a` at every quadrature point of tet `t`.
fn tet_jacobians(space: &FunctionSpace, coeffs: &[f64], t: usize, rule: &QuadratureRule, tab: &crate::fem::Tabulation) -> Vec<[[f64; 3]; 3]> {
    let n = space.num_dofs();
    let nb = space.num_basis();
    let geo = space.geometry(t);
    let dofs = space.tet_dofs(t);
    let mut out = vec![[[0.0; 3]; 3]; rule.len()];
    let mut dphi = vec![[0.0; 3]; nb];
    for (q, g) in out.iter_mut().enumerate() {
        for i in 0..nb {
            dphi[i] = geo.physical_gradient(tab.gradient(q, i));
        }
        for a in 0..3 {
            for (i, &d) in dofs.iter().enumerate() {
                let c = coeffs[a * n + d];
                if c != 0.0 {
                    for b in 0..3 {
                        g[a][b] += c * dphi[i][b];
                    }
                }
            }
        }
    }
    out
}

fn check_len(space: &FunctionSpace, coeffs: &[f64]) -> Result<()> {
    if coeffs.len() != space.num_vector_dofs() {
        return Err(Error::InvalidArgument(format!(
            "displacement has length {}, expected {}",
            coeffs.len(),
            space.num_vector_dofs()
        )));
    }
    Ok(())
}

pub fn recover_stress(
    space: &FunctionSpace,
    coeffs: &[f64],
    kappa0: &SymTensor,
    params: &MaterialParams,
) -> Result<StressField> {
    check_len(space, coeffs)?;
    let rule = space.mass_rule();
    let tab = space.tabulate_rule(&rule);
    let nq = rule.len();
    let ntets = space.mesh().num_tets();
    let per_tet: Vec<(Vec<SymTensor>, Vec<f64>, Vec<Point3>)> = (0..ntets)
        .into_par_iter()
        .map(|t| {
            let geo = space.geometry(t);
            let jac = tet_jacobians(space, coeffs, t, &rule, &tab);
            let vals = jac.iter().map(|g| constitutive(kappa0, params, g)).collect();
            let w = rule.weights.iter().map(|w| w * geo.det.abs()).collect();
            let p = (0..nq).map(|q| geo.to_physical(&rule.reference_point(q))).collect();
            (vals, w, p)
        })
        .collect();
    let mut values = Vec::with_capacity(ntets * nq);
    let mut weights = Vec::with_capacity(ntets * nq);
    let mut points = Vec::with_capacity(ntets * nq);
    for (v, w, p) in per_tet {
        values.extend(v);
        weights.extend(w);
        points.extend(p);
    }
    Ok(StressField {
        rule,
        values,
        weights,
        points,
        kappa0: *kappa0,
    })
}

impl StressField {
    /// `‖κ‖_* = √(Σ_ij ∫ κ_ij²)`.
    pub fn norm(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.weights)
            .map(|(k, w)| w * k.frobenius2())
            .sum::<f64>()
            .sqrt()
    }

    /// L² norm of one component (indices 0-based).
    pub fn component_norm(&self, i: usize, j: usize) -> f64 {
        self.values
            .iter()
            .zip(&self.weights)
            .map(|(k, w)| w * k.get(i, j).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn component_norms(&self) -> [[f64; 3]; 3] {
        std::array::from_fn(|i| std::array::from_fn(|j| self.component_norm(i, j)))
    }
}

pub fn stress_norm(field: &StressField) -> f64 {
    field.norm()
}

pub fn stress_component_norm(field: &StressField, i: usize, j: usize) -> Result<f64> {
    if i >= 3 || j >= 3 {
        return Err(Error::InvalidArgument(format!("component ({i},{j}) out of range")));
    }
    Ok(field.component_norm(i, j))
}

/// Component norms of the recovered stress without storing the field.
pub fn stress_component_norms(
    space: &FunctionSpace,
    coeffs: &[f64],
    kappa0: &SymTensor,
    params: &MaterialParams,
) -> Result<[[f64; 3]; 3]> {
    check_len(space, coeffs)?;
    let rule = space.mass_rule();
    let tab = space.tabulate_rule(&rule);
    let sums: Vec<[f64; 6]> = (0..space.mesh().num_tets())
        .into_par_iter()
        .map(|t| {
            let det = space.geometry(t).det.abs();
            let mut s = [0.0; 6];
            for (q, g) in tet_jacobians(space, coeffs, t, &rule, &tab).iter().enumerate() {
                let k = constitutive(kappa0, params, g).to_array();
                let w = rule.weights[q] * det;
                for c in 0..6 {
                    s[c] += w * k[c] * k[c];
                }
            }
            s
        })
        .collect();
    let mut total = [0.0; 6];
    for s in sums {
        for c in 0..6 {
            total[c] += s[c];
        }
    }
    let t = SymTensor::from_array(total.map(f64::sqrt));
    Ok(t.to_matrix())
}

/// L² projection of each stress component onto continuous P1 on the mesh
/// vertices, in [`COMPONENTS`] order.
pub fn project_to_vertices(
    space: &FunctionSpace,
    coeffs: &[f64],
    kappa0: &SymTensor,
    params: &MaterialParams,
) -> Result<[Vec<f64>; 6]> {
    check_len(space, coeffs)?;
    let p1 = FunctionSpace::new(space.mesh_arc(), 1)?;
    let mass = assemble_scalar_mass(&p1);
    let rule = QuadratureRule::with_order(2 * space.degree());
    let tab = space.tabulate_rule(&rule);
    let tab1 = p1.tabulate_rule(&rule);
    let nv = p1.num_dofs();
    let mut rhs: [Vec<f64>; 6] = std::array::from_fn(|_| vec![0.0; nv]);
    for t in 0..space.mesh().num_tets() {
        let det = space.geometry(t).det.abs();
        let jac = tet_jacobians(space, coeffs, t, &rule, &tab);
        for (q, g) in jac.iter().enumerate() {
            let k = constitutive(kappa0, params, g).to_array();
            let w = rule.weights[q] * det;
            for (i, &v) in p1.tet_dofs(t).iter().enumerate() {
                let phi = tab1.value(q, i) * w;
                for c in 0..6 {
                    rhs[c][v] += k[c] * phi;
                }
            }
        }
    }
    let cfg = SolverConfig::default();
    let mut out: [Vec<f64>; 6] = std::array::from_fn(|_| Vec::new());
    for c in 0..6 {
        out[c] = cg_solve(&mass, &rhs[c], cfg, None)?.0;
    }
    Ok(out)
}

/// Local vertex indices of the four faces; face `f` is opposite vertex `f`.
const FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];

/// `‖κ_h - κ⁰‖` in L²(Γ): how far the recovered stress is from the
/// boundary value `κ⁰`.
pub fn boundary_mismatch(
    space: &FunctionSpace,
    coeffs: &[f64],
    params: &MaterialParams,
) -> Result<f64> {
    check_len(space, coeffs)?;
    let mesh = space.mesh();
    let dom = mesh.domain();
    let q = space.degree() + 1;
    let (xu, wu) = gauss_jacobi(q, 1.0);
    let (xv, wv) = gauss_jacobi(q, 0.0);
    let ref_corners = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let zero = SymTensor::zero();
    let n = space.num_dofs();
    let nb = space.num_basis();
    let mut phi = vec![0.0; nb];
    let mut grad = vec![[0.0; 3]; nb];
    let mut total = 0.0;
    for t in 0..mesh.num_tets() {
        let tet = mesh.tets()[t];
        let verts = mesh.tet_vertices(t);
        for face in FACES {
            let on_plane = (0..3).any(|a| {
                [dom.lo[a], dom.hi[a]].iter().any(|&c| {
                    face.iter().all(|&v| (verts[v][a] - c).abs() <= 1e-12 * (1.0 + c.abs()))
                })
            });
            if !on_plane || !face.iter().all(|&v| mesh.boundary_flags()[tet[v]]) {
                continue;
            }
            let p: [Point3; 3] = face.map(|v| verts[v]);
            let e1: Point3 = std::array::from_fn(|i| p[1][i] - p[0][i]);
            let e2: Point3 = std::array::from_fn(|i| p[2][i] - p[0][i]);
            let cross = [
                e1[1] * e2[2] - e1[2] * e2[1],
                e1[2] * e2[0] - e1[0] * e2[2],
                e1[0] * e2[1] - e1[1] * e2[0],
            ];
            let area2 = (cross[0].powi(2) + cross[1].powi(2) + cross[2].powi(2)).sqrt();
            let geo = space.geometry(t);
            for (a, &u) in xu.iter().enumerate() {
                for (b, &v) in xv.iter().enumerate() {
                    let (s, r) = (u, v * (1.0 - u));
                    let w = wu[a] * wv[b] * area2;
                    let xi: [f64; 3] = std::array::from_fn(|c| {
                        (1.0 - s - r) * ref_corners[face[0]][c]
                            + s * ref_corners[face[1]][c]
                            + r * ref_corners[face[2]][c]
                    });
                    space.element().evaluate(&xi, &mut phi, &mut grad);
                    let mut g = [[0.0; 3]; 3];
                    for (i, &d) in space.tet_dofs(t).iter().enumerate() {
                        let dp = geo.physical_gradient(&grad[i]);
                        for comp in 0..3 {
                            let c = coeffs[comp * n + d];
                            for col in 0..3 {
                                g[comp][col] += c * dp[col];
                            }
                        }
                    }
                    total += w * constitutive(&zero, params, &g).frobenius2();
                }
            }
        }
    }
    Ok(total.sqrt())
}
