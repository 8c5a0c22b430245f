//! Mass, stiffness and load assembly.
//!
//! Vector fields use the component-major layout `a * n + i` where `n` is the
//! scalar DOF count. All bilinear forms in first derivatives are expressed as
//! a [`GradientForm`] with a 9×9 coefficient tensor, which covers the
//! elasticity operator, the stress energy used for stress error norms and the
//! plain vector Laplacian.

use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fem::{FunctionSpace, QuadratureRule, ReferenceElement, Tabulation, TetGeometry};
use crate::mesh::TETS_PER_CELL;
use crate::sparse::{CsrMatrix, DiagonalOperator, LinearOperator};
use crate::{Error, Point3, Result};

/// Density and Lamé parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    pub nu: f64,
    pub lambda: f64,
    pub mu: f64,
}

impl MaterialParams {
    pub fn new(nu: f64, lambda: f64, mu: f64) -> Result<Self> {
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(Error::InvalidArgument(format!("density must be positive, got {nu}")));
        }
        if !(mu > 0.0) || !mu.is_finite() || !lambda.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "need finite lambda and mu > 0, got lambda={lambda}, mu={mu}"
            )));
        }
        Ok(Self { nu, lambda, mu })
    }

    /// Lamé parameters from the elastic modulus `e` and Poisson ratio `alpha`.
    pub fn from_young(nu: f64, e: f64, alpha: f64) -> Result<Self> {
        if (1.0 + alpha) == 0.0 || (1.0 - 2.0 * alpha) == 0.0 {
            return Err(Error::InvalidArgument(format!(
                "Poisson ratio {alpha} makes the Lamé conversion singular"
            )));
        }
        let lambda = alpha * e / ((1.0 + alpha) * (1.0 - 2.0 * alpha));
        let mu = e / (2.0 * (1.0 + alpha));
        Self::new(nu, lambda, mu)
    }

    /// True when `λ + μ > 0`, i.e. the operator is coercive on the constrained space.
    pub fn is_coercive(&self) -> bool {
        self.lambda + self.mu > 0.0
    }

    /// The continuity constant `λ + 4μ`.
    pub fn continuity_constant(&self) -> f64 {
        self.lambda + 4.0 * self.mu
    }
}

/// `B(u, v) = ∫ Σ C[a][p][b][q] ∂_p u_a ∂_q v_b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientForm {
    pub coeff: [[[[f64; 3]; 3]; 3]; 3],
}

fn kron(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

impl GradientForm {
    pub fn from_fn(f: impl Fn(usize, usize, usize, usize) -> f64) -> Self {
        let mut coeff = [[[[0.0; 3]; 3]; 3]; 3];
        for a in 0..3 {
            for p in 0..3 {
                for b in 0..3 {
                    for q in 0..3 {
                        coeff[a][p][b][q] = f(a, p, b, q);
                    }
                }
            }
        }
        Self { coeff }
    }

    /// `A(w, z) = (λ+μ)(∇̄w, ∇̄z)_* + μ(∇·w, ∇·z)`.
    pub fn elasticity(params: &MaterialParams) -> Self {
        let (l, m) = (params.lambda, params.mu);
        Self::from_fn(|a, p, b, q| (l + m) * kron(a, b) * kron(p, q) + m * kron(a, p) * kron(b, q))
    }

    /// Block-diagonal vector Laplacian `(∇̄w, ∇̄z)_*`.
    pub fn vector_laplacian() -> Self {
        Self::from_fn(|a, p, b, q| kron(a, b) * kron(p, q))
    }

    /// `(σ(w), σ(z))_*` with `σ(w) = λ(∇·w)I + 2μψ(w)`.
    pub fn stress_energy(params: &MaterialParams) -> Self {
        let (l, m) = (params.lambda, params.mu);
        let e = |i: usize, j: usize, a: usize, p: usize| {
            l * kron(i, j) * kron(a, p) + m * (kron(i, a) * kron(j, p) + kron(j, a) * kron(i, p))
        };
        Self::from_fn(|a, p, b, q| {
            let mut s = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    s += e(i, j, a, p) * e(i, j, b, q);
                }
            }
            s
        })
    }

    pub fn is_symmetric(&self) -> bool {
        (0..81).all(|k| {
            let (a, p, b, q) = (k / 27, (k / 9) % 3, (k / 3) % 3, k % 3);
            self.coeff[a][p][b][q] == self.coeff[b][q][a][p]
        })
    }
}

/// Local scalar mass matrix `∫_T φ_i φ_j`, row-major `nb × nb`.
pub fn local_mass_matrix(tab: &Tabulation, rule: &QuadratureRule, geo: &TetGeometry) -> Vec<f64> {
    let nb = tab.num_basis;
    let jac = geo.det.abs();
    let mut m = vec![0.0; nb * nb];
    for (q, w) in rule.weights.iter().enumerate() {
        let wq = w * jac;
        let row = &tab.values[q * nb..(q + 1) * nb];
        for i in 0..nb {
            let wi = wq * row[i];
            for j in 0..nb {
                m[i * nb + j] += wi * row[j];
            }
        }
    }
    m
}

/// `G[p * 3 + q][i * nb + j] = ∫_T ∂_p φ_i ∂_q φ_j`.
pub fn local_gradient_products(
    tab: &Tabulation,
    rule: &QuadratureRule,
    geo: &TetGeometry,
) -> [Vec<f64>; 9] {
    let nb = tab.num_basis;
    let jac = geo.det.abs();
    let mut g: [Vec<f64>; 9] = std::array::from_fn(|_| vec![0.0; nb * nb]);
    let mut dphi = vec![[0.0; 3]; nb];
    for (q, w) in rule.weights.iter().enumerate() {
        let wq = w * jac;
        for i in 0..nb {
            dphi[i] = geo.physical_gradient(tab.gradient(q, i));
        }
        for p in 0..3 {
            for r in 0..3 {
                let block = &mut g[p * 3 + r];
                for i in 0..nb {
                    let wi = wq * dphi[i][p];
                    if wi == 0.0 {
                        continue;
                    }
                    for j in 0..nb {
                        block[i * nb + j] += wi * dphi[j][r];
                    }
                }
            }
        }
    }
    g
}

/// Local vector matrix of a gradient form, row-major `3nb × 3nb` with local
/// index `a * nb + i`.
pub fn local_form_matrix(form: &GradientForm, g: &[Vec<f64>; 9], nb: usize) -> Vec<f64> {
    let n3 = 3 * nb;
    let mut out = vec![0.0; n3 * n3];
    for a in 0..3 {
        for b in 0..3 {
            for p in 0..3 {
                for q in 0..3 {
                    let c = form.coeff[a][p][b][q];
                    if c == 0.0 {
                        continue;
                    }
                    let block = &g[p * 3 + q];
                    for i in 0..nb {
                        let row = (a * nb + i) * n3 + b * nb;
                        for j in 0..nb {
                            out[row + j] += c * block[i * nb + j];
                        }
                    }
                }
            }
        }
    }
    out
}

/// Local elastic stiffness matrix on one tetrahedron.
pub fn local_stiffness_matrix(
    tab: &Tabulation,
    rule: &QuadratureRule,
    geo: &TetGeometry,
    params: &MaterialParams,
) -> Vec<f64> {
    let g = local_gradient_products(tab, rule, geo);
    local_form_matrix(&GradientForm::elasticity(params), &g, tab.num_basis)
}

/// Rule and tabulation exact for the bilinear forms on a degree-`d` element.
pub fn form_rule(element: &ReferenceElement) -> (QuadratureRule, Tabulation) {
    let rule = QuadratureRule::with_order(2 * element.degree());
    let pts: Vec<[f64; 3]> = (0..rule.len()).map(|i| rule.reference_point(i)).collect();
    let tab = element.tabulate(&pts);
    (rule, tab)
}

fn scalar_pattern(space: &FunctionSpace) -> Vec<Vec<u32>> {
    let n = space.num_dofs();
    let mut rows: Vec<Vec<u32>> = vec![Vec::new(); n];
    for t in 0..space.mesh().num_tets() {
        let dofs = space.tet_dofs(t);
        for &i in dofs {
            rows[i].extend(dofs.iter().map(|&j| j as u32));
        }
    }
    rows.par_iter_mut().for_each(|r| {
        r.sort_unstable();
        r.dedup();
    });
    rows
}

fn vector_pattern(scalar: &[Vec<u32>], coupled: bool) -> Vec<Vec<u32>> {
    let n = scalar.len() as u32;
    let mut rows = Vec::with_capacity(3 * scalar.len());
    for a in 0..3u32 {
        for r in scalar {
            if coupled {
                let mut row = Vec::with_capacity(3 * r.len());
                for b in 0..3u32 {
                    row.extend(r.iter().map(|&c| b * n + c));
                }
                rows.push(row);
            } else {
                rows.push(r.iter().map(|&c| a * n + c).collect());
            }
        }
    }
    rows
}

const ASSEMBLY_CHUNK: usize = 2048;

/// Runs `local` over all tets in parallel chunks and scatters the results in
/// tet order, so the assembled values do not depend on the thread count.
fn scatter_in_order(
    space: &FunctionSpace,
    mut target: CsrMatrix,
    local: impl Fn(usize) -> Vec<f64> + Sync,
    vector: bool,
) -> CsrMatrix {
    let n = space.num_dofs();
    let nb = space.num_basis();
    let ntets = space.mesh().num_tets();
    let mut start = 0;
    while start < ntets {
        let end = (start + ASSEMBLY_CHUNK).min(ntets);
        let locals: Vec<Vec<f64>> = (start..end).into_par_iter().map(&local).collect();
        for (t, lm) in (start..end).zip(locals) {
            let dofs = space.tet_dofs(t);
            if vector {
                let n3 = 3 * nb;
                for a in 0..3 {
                    for (i, &gi) in dofs.iter().enumerate() {
                        let row = (a * nb + i) * n3;
                        for b in 0..3 {
                            for (j, &gj) in dofs.iter().enumerate() {
                                let v = lm[row + b * nb + j];
                                if v != 0.0 {
                                    target.add(a * n + gi, b * n + gj, v);
                                }
                            }
                        }
                    }
                }
            } else {
                for (i, &gi) in dofs.iter().enumerate() {
                    for (j, &gj) in dofs.iter().enumerate() {
                        target.add(gi, gj, lm[i * nb + j]);
                    }
                }
            }
        }
        start = end;
    }
    target
}

/// Scalar mass matrix `∫ φ_i φ_j`.
pub fn assemble_scalar_mass(space: &FunctionSpace) -> CsrMatrix {
    let (rule, tab) = form_rule(space.element());
    let pattern = CsrMatrix::from_pattern(space.num_dofs(), scalar_pattern(space));
    scatter_in_order(
        space,
        pattern,
        |t| local_mass_matrix(&tab, &rule, space.geometry(t)),
        false,
    )
}

/// Vector mass matrix: three copies of the scalar mass on the diagonal blocks.
pub fn assemble_mass(space: &FunctionSpace) -> CsrMatrix {
    let scalar = assemble_scalar_mass(space);
    let n = space.num_dofs();
    let mut rows = Vec::with_capacity(3 * n);
    let mut vals = Vec::with_capacity(3 * n);
    for a in 0..3u32 {
        for r in 0..n {
            let (c, v) = scalar.row(r);
            rows.push(c.iter().map(|&c| a * n as u32 + c).collect::<Vec<_>>());
            vals.push(v.to_vec());
        }
    }
    let mut m = CsrMatrix::from_pattern(3 * n, rows);
    for (r, v) in vals.iter().enumerate() {
        let cols: Vec<u32> = m.row(r).0.to_vec();
        for (c, x) in cols.iter().zip(v) {
            m.add(r, *c as usize, *x);
        }
    }
    m
}

/// Assembled matrix of an arbitrary gradient form.
pub fn assemble_gradient_form(space: &FunctionSpace, form: &GradientForm) -> CsrMatrix {
    let (rule, tab) = form_rule(space.element());
    let nb = space.num_basis();
    let coupled = (0..3).any(|a| {
        (0..3).any(|b| {
            a != b && (0..3).any(|p| (0..3).any(|q| form.coeff[a][p][b][q] != 0.0))
        })
    });
    let pattern = CsrMatrix::from_pattern(
        3 * space.num_dofs(),
        vector_pattern(&scalar_pattern(space), coupled),
    );
    scatter_in_order(
        space,
        pattern,
        |t| {
            let g = local_gradient_products(&tab, &rule, space.geometry(t));
            local_form_matrix(form, &g, nb)
        },
        true,
    )
}

/// Stiffness matrix `K` with `uᵀ K v = A(u, v)`.
pub fn assemble_stiffness(space: &FunctionSpace, params: &MaterialParams) -> CsrMatrix {
    assemble_gradient_form(space, &GradientForm::elasticity(params))
}

/// Vector load `b_i = ∫ g · φ_i` with a rule of the given order.
pub fn assemble_load(
    space: &FunctionSpace,
    g: &(dyn Fn(&Point3) -> [f64; 3] + Sync),
    order: usize,
) -> Vec<f64> {
    let rule = QuadratureRule::with_order(order);
    let tab = space.tabulate_rule(&rule);
    let n = space.num_dofs();
    let nb = space.num_basis();
    let ntets = space.mesh().num_tets();
    let locals: Vec<Vec<f64>> = (0..ntets)
        .into_par_iter()
        .map(|t| {
            let geo = space.geometry(t);
            let jac = geo.det.abs();
            let mut out = vec![0.0; 3 * nb];
            for q in 0..rule.len() {
                let x = geo.to_physical(&rule.reference_point(q));
                let gv = g(&x);
                if gv == [0.0; 3] {
                    continue;
                }
                let w = rule.weights[q] * jac;
                for i in 0..nb {
                    let phi = tab.value(q, i) * w;
                    for a in 0..3 {
                        out[a * nb + i] += gv[a] * phi;
                    }
                }
            }
            out
        })
        .collect();
    let mut b = vec![0.0; 3 * n];
    for (t, lv) in locals.iter().enumerate() {
        for (i, &gi) in space.tet_dofs(t).iter().enumerate() {
            for a in 0..3 {
                b[a * n + gi] += lv[a * nb + i];
            }
        }
    }
    b
}

/// How the indicator of a ball is integrated on tets cut by its surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BallQuadrature {
    /// Indicator sampled at the volume rule's points.
    Pointwise,
    /// Indicator sampled with a rule of twice the order on cut tets.
    Refined,
    /// Cut tets are recursively subdivided until the pieces are small
    /// compared with the ball radius.
    #[default]
    Subdivided,
}

const SUBDIVISION_LEVELS: usize = 10;
const LEAF_FRACTION: f64 = 1.0 / 16.0;

/// Scalar load `b_i = ∫_{B(center, radius)} profile · φ_i`.
pub fn assemble_ball_load(
    space: &FunctionSpace,
    center: &Point3,
    radius: f64,
    profile: &(dyn Fn(&Point3) -> f64 + Sync),
    method: BallQuadrature,
) -> Vec<f64> {
    let d = space.degree();
    let rule = QuadratureRule::with_order(2 * d + 2);
    let fine = QuadratureRule::with_order(4 * d + 4);
    let nb = space.num_basis();
    let n = space.num_dofs();
    let ntets = space.mesh().num_tets();
    let dist = |p: &Point3| {
        ((p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2) + (p[2] - center[2]).powi(2))
            .sqrt()
    };
    let locals: Vec<Option<Vec<f64>>> = (0..ntets)
        .into_par_iter()
        .map(|t| {
            let geo = space.geometry(t);
            let verts = space.mesh().tet_vertices(t);
            let class = classify(&verts, center, radius);
            if class == Side::Outside {
                return None;
            }
            let mut out = vec![0.0; nb];
            let element = space.element();
            let mut add = |rule: &QuadratureRule, sub: &[[f64; 3]; 4], check: bool| {
                let sub_jac = sub_det(sub).abs() * geo.det.abs();
                for q in 0..rule.len() {
                    let lam = &rule.points[q];
                    let xi: [f64; 3] = std::array::from_fn(|c| {
                        lam[0] * sub[0][c] + lam[1] * sub[1][c] + lam[2] * sub[2][c] + lam[3] * sub[3][c]
                    });
                    let x = geo.to_physical(&xi);
                    if check && dist(&x) >= radius {
                        continue;
                    }
                    let w = rule.weights[q] * sub_jac * profile(&x);
                    if w == 0.0 {
                        continue;
                    }
                    for (o, v) in out.iter_mut().zip(element.values_at(&xi)) {
                        *o += w * v;
                    }
                }
            };
            let whole = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
            match (class, method) {
                (Side::Inside, _) => add(&rule, &whole, false),
                (_, BallQuadrature::Pointwise) => add(&rule, &whole, true),
                (_, BallQuadrature::Refined) => add(&fine, &whole, true),
                (_, BallQuadrature::Subdivided) => {
                    let leaf = radius * LEAF_FRACTION;
                    let mut stack = vec![(whole, 0usize)];
                    while let Some((sub, level)) = stack.pop() {
                        let pv = sub.map(|xi| geo.to_physical(&xi));
                        match classify(&pv, center, radius) {
                            Side::Outside => {}
                            Side::Inside => add(&rule, &sub, false),
                            Side::Cut => {
                                if level >= SUBDIVISION_LEVELS || diameter(&pv) <= leaf {
                                    add(&rule, &sub, true);
                                } else {
                                    for child in red_refine(&sub) {
                                        stack.push((child, level + 1));
                                    }
                                }
                            }
                        }
                    }
                }
            }
            Some(out)
        })
        .collect();
    let mut b = vec![0.0; n];
    for (t, lv) in locals.iter().enumerate() {
        if let Some(lv) = lv {
            for (i, &gi) in space.tet_dofs(t).iter().enumerate() {
                b[gi] += lv[i];
            }
        }
    }
    b
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Inside,
    Outside,
    Cut,
}

fn classify(v: &[Point3; 4], center: &Point3, radius: f64) -> Side {
    let d = |p: &Point3, q: &Point3| {
        ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt()
    };
    if v.iter().all(|p| d(p, center) < radius) {
        return Side::Inside;
    }
    let c: Point3 = std::array::from_fn(|i| 0.25 * (v[0][i] + v[1][i] + v[2][i] + v[3][i]));
    let r = v.iter().map(|p| d(p, &c)).fold(0.0, f64::max);
    if d(&c, center) >= radius + r {
        Side::Outside
    } else {
        Side::Cut
    }
}

fn diameter(v: &[Point3; 4]) -> f64 {
    let mut m = 0.0_f64;
    for a in 0..4 {
        for b in a + 1..4 {
            let s: f64 = (0..3).map(|i| (v[a][i] - v[b][i]).powi(2)).sum();
            m = m.max(s);
        }
    }
    m.sqrt()
}

/// Six times the volume of a sub-tetrahedron in reference coordinates.
fn sub_det(s: &[[f64; 3]; 4]) -> f64 {
    let e = |k: usize| [s[k][0] - s[0][0], s[k][1] - s[0][1], s[k][2] - s[0][2]];
    let (a, b, c) = (e(1), e(2), e(3));
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
        + a[2] * (b[0] * c[1] - b[1] * c[0])
}

fn red_refine(s: &[[f64; 3]; 4]) -> [[[f64; 3]; 4]; 8] {
    let mid = |a: usize, b: usize| -> [f64; 3] {
        std::array::from_fn(|c| 0.5 * (s[a][c] + s[b][c]))
    };
    let (m01, m02, m03) = (mid(0, 1), mid(0, 2), mid(0, 3));
    let (m12, m13, m23) = (mid(1, 2), mid(1, 3), mid(2, 3));
    [
        [s[0], m01, m02, m03],
        [m01, s[1], m12, m13],
        [m02, m12, s[2], m23],
        [m03, m13, m23, s[3]],
        [m01, m02, m03, m13],
        [m01, m02, m12, m13],
        [m02, m03, m13, m23],
        [m02, m12, m13, m23],
    ]
}

/// Element-wise diagonal (HRZ) lumping of the scalar mass, expanded to the
/// vector layout.
pub fn lumped_mass(space: &FunctionSpace) -> DiagonalOperator {
    let (rule, tab) = form_rule(space.element());
    let n = space.num_dofs();
    let nb = space.num_basis();
    let mut diag = vec![0.0; n];
    for t in 0..space.mesh().num_tets() {
        let geo = space.geometry(t);
        let m = local_mass_matrix(&tab, &rule, geo);
        let trace: f64 = (0..nb).map(|i| m[i * nb + i]).sum();
        let scale = geo.volume() / trace;
        for (i, &g) in space.tet_dofs(t).iter().enumerate() {
            diag[g] += m[i * nb + i] * scale;
        }
    }
    let mut full = Vec::with_capacity(3 * n);
    for _ in 0..3 {
        full.extend_from_slice(&diag);
    }
    DiagonalOperator(full)
}

/// A Dirichlet-constrained linear system over the interior DOFs.
#[derive(Debug, Clone)]
pub struct ConstrainedSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub interior: Vec<usize>,
    pub full_dim: usize,
}

impl ConstrainedSystem {
    /// Re-expands a reduced solution with exact zeros on the constrained DOFs.
    pub fn expand(&self, reduced: &[f64]) -> Vec<f64> {
        expand(&self.interior, reduced, self.full_dim)
    }
}

/// Eliminates homogeneous Dirichlet rows and columns.
pub fn apply_dirichlet(op: &CsrMatrix, rhs: &[f64], boundary: &[usize]) -> ConstrainedSystem {
    let interior = complement(boundary, op.nrows());
    ConstrainedSystem {
        matrix: op.submatrix(&interior),
        rhs: restrict(&interior, rhs),
        full_dim: op.nrows(),
        interior,
    }
}

/// Sorted indices in `0..n` not present in `removed`.
pub fn complement(removed: &[usize], n: usize) -> Vec<usize> {
    let mut keep = vec![true; n];
    for &i in removed {
        keep[i] = false;
    }
    (0..n).filter(|&i| keep[i]).collect()
}

pub fn restrict(index: &[usize], full: &[f64]) -> Vec<f64> {
    index.iter().map(|&i| full[i]).collect()
}

pub fn expand(index: &[usize], reduced: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (&i, &v) in index.iter().zip(reduced) {
        out[i] = v;
    }
    out
}

/// Restriction of an operator to a subset of its DOFs, applied without
/// forming the submatrix.
pub struct RestrictedOperator<O> {
    op: O,
    index: Vec<usize>,
    work: Mutex<(Vec<f64>, Vec<f64>)>,
}

impl<O: LinearOperator> RestrictedOperator<O> {
    pub fn new(op: O, index: Vec<usize>) -> Self {
        let n = op.dim();
        Self {
            op,
            index,
            work: Mutex::new((vec![0.0; n], vec![0.0; n])),
        }
    }

    pub fn index(&self) -> &[usize] {
        &self.index
    }
}

impl<O: LinearOperator> LinearOperator for RestrictedOperator<O> {
    fn dim(&self) -> usize {
        self.index.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let mut guard = self.work.lock().expect("poisoned work buffer");
        let (full_x, full_y) = &mut *guard;
        full_x.iter_mut().for_each(|v| *v = 0.0);
        for (&i, &v) in self.index.iter().zip(x) {
            full_x[i] = v;
        }
        self.op.apply(full_x, full_y);
        for (&i, yv) in self.index.iter().zip(y.iter_mut()) {
            *yv = full_y[i];
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        restrict(&self.index, &self.op.diagonal())
    }
}

/// Matrix-free operator for Kuhn meshes: every tet of a given Kuhn type is a
/// translate of the same reference shape, so six local matrices describe the
/// whole operator.
pub struct StructuredOperator {
    space: Arc<FunctionSpace>,
    kind: TemplateKind,
    locals: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TemplateKind {
    /// The same scalar matrix acts on each component.
    Replicated,
    /// Full `3nb × 3nb` coupling.
    Coupled,
}

impl StructuredOperator {
    /// Vector mass operator.
    pub fn mass(space: Arc<FunctionSpace>) -> Result<Self> {
        let (rule, tab) = form_rule(space.element());
        let locals = (0..TETS_PER_CELL)
            .map(|t| local_mass_matrix(&tab, &rule, space.geometry(t)))
            .collect();
        Self::checked(space, TemplateKind::Replicated, locals)
    }

    pub fn gradient_form(space: Arc<FunctionSpace>, form: &GradientForm) -> Result<Self> {
        let (rule, tab) = form_rule(space.element());
        let nb = space.num_basis();
        let locals = (0..TETS_PER_CELL)
            .map(|t| local_form_matrix(form, &local_gradient_products(&tab, &rule, space.geometry(t)), nb))
            .collect();
        Self::checked(space, TemplateKind::Coupled, locals)
    }

    pub fn stiffness(space: Arc<FunctionSpace>, params: &MaterialParams) -> Result<Self> {
        Self::gradient_form(space, &GradientForm::elasticity(params))
    }

    fn checked(space: Arc<FunctionSpace>, kind: TemplateKind, locals: Vec<Vec<f64>>) -> Result<Self> {
        let ntets = space.mesh().num_tets();
        let scale = space.geometry(0).jacobian.abs().max();
        for t in (0..ntets).step_by(ntets / 64 * TETS_PER_CELL + TETS_PER_CELL) {
            for k in 0..TETS_PER_CELL {
                let diff = (space.geometry(t + k).jacobian - space.geometry(k).jacobian).abs().max();
                if diff > 1e-10 * scale {
                    return Err(Error::InvalidArgument(
                        "mesh is not translation invariant; use assembled operators".into(),
                    ));
                }
            }
        }
        Ok(Self { space, kind, locals })
    }

    pub fn space(&self) -> &FunctionSpace {
        &self.space
    }
}

impl LinearOperator for StructuredOperator {
    fn dim(&self) -> usize {
        3 * self.space.num_dofs()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let sp = &*self.space;
        let n = sp.num_dofs();
        let nb = sp.num_basis();
        y.iter_mut().for_each(|v| *v = 0.0);
        let mut xl = vec![0.0; 3 * nb];
        let mut yl = vec![0.0; 3 * nb];
        for t in 0..sp.mesh().num_tets() {
            let dofs = sp.tet_dofs(t);
            let lm = &self.locals[t % TETS_PER_CELL];
            for a in 0..3 {
                for (i, &g) in dofs.iter().enumerate() {
                    xl[a * nb + i] = x[a * n + g];
                }
            }
            match self.kind {
                TemplateKind::Replicated => {
                    for i in 0..nb {
                        let row = &lm[i * nb..(i + 1) * nb];
                        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
                        for j in 0..nb {
                            s0 += row[j] * xl[j];
                            s1 += row[j] * xl[nb + j];
                            s2 += row[j] * xl[2 * nb + j];
                        }
                        yl[i] = s0;
                        yl[nb + i] = s1;
                        yl[2 * nb + i] = s2;
                    }
                }
                TemplateKind::Coupled => {
                    let n3 = 3 * nb;
                    for r in 0..n3 {
                        let row = &lm[r * n3..(r + 1) * n3];
                        yl[r] = row.iter().zip(&xl).map(|(m, v)| m * v).sum();
                    }
                }
            }
            for a in 0..3 {
                for (i, &g) in dofs.iter().enumerate() {
                    y[a * n + g] += yl[a * nb + i];
                }
            }
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        let sp = &*self.space;
        let n = sp.num_dofs();
        let nb = sp.num_basis();
        let mut d = vec![0.0; 3 * n];
        for t in 0..sp.mesh().num_tets() {
            let lm = &self.locals[t % TETS_PER_CELL];
            for (i, &g) in sp.tet_dofs(t).iter().enumerate() {
                for a in 0..3 {
                    d[a * n + g] += match self.kind {
                        TemplateKind::Replicated => lm[i * nb + i],
                        TemplateKind::Coupled => {
                            let r = a * nb + i;
                            lm[r * 3 * nb + r]
                        }
                    };
                }
            }
        }
        d
    }
}

/// Storage strategy for the global operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorBackend {
    /// Assembled CSR below a size threshold, structured above it.
    #[default]
    Auto,
    Csr,
    Structured,
}

/// Above this many estimated nonzeros in the coupled vector operator the
/// automatic backend switches to structured operators.
pub const CSR_NNZ_LIMIT: usize = 20_000_000;

impl OperatorBackend {
    pub fn resolve(self, space: &FunctionSpace) -> OperatorBackend {
        match self {
            OperatorBackend::Auto => {
                if estimated_vector_nnz(space) <= CSR_NNZ_LIMIT {
                    OperatorBackend::Csr
                } else {
                    OperatorBackend::Structured
                }
            }
            other => other,
        }
    }
}

/// Nonzeros of a fully coupled vector operator, estimated from the widest
/// scalar row (interior vertex stencil).
pub fn estimated_vector_nnz(space: &FunctionSpace) -> usize {
    let d = space.degree();
    // interior vertex stencil: lattice points of the 2x2x2 cell block touching it
    let row = (2 * d + 1).pow(3);
    9 * row.min(space.num_dofs()) * space.num_dofs()
}

pub type BoxedOperator = Box<dyn LinearOperator>;

pub fn mass_operator(space: &Arc<FunctionSpace>, backend: OperatorBackend) -> Result<BoxedOperator> {
    Ok(match backend.resolve(space) {
        OperatorBackend::Structured => Box::new(StructuredOperator::mass(Arc::clone(space))?),
        _ => Box::new(assemble_mass(space)),
    })
}

pub fn form_operator(
    space: &Arc<FunctionSpace>,
    form: &GradientForm,
    backend: OperatorBackend,
) -> Result<BoxedOperator> {
    Ok(match backend.resolve(space) {
        OperatorBackend::Structured => {
            Box::new(StructuredOperator::gradient_form(Arc::clone(space), form)?)
        }
        _ => Box::new(assemble_gradient_form(space, form)),
    })
}

/// Interior-restricted mass operator for the time-step solves.
pub fn constrained_mass(
    space: &Arc<FunctionSpace>,
    backend: OperatorBackend,
    lumped: bool,
) -> Result<(BoxedOperator, Vec<usize>)> {
    let interior = complement(&space.boundary_vector_dofs(), space.num_vector_dofs());
    let op: BoxedOperator = if lumped {
        let d = lumped_mass(space);
        Box::new(DiagonalOperator(restrict(&interior, &d.0)))
    } else {
        match backend.resolve(space) {
            OperatorBackend::Structured => Box::new(RestrictedOperator::new(
                StructuredOperator::mass(Arc::clone(space))?,
                interior.clone(),
            )),
            _ => Box::new(assemble_mass(space).submatrix(&interior)),
        }
    };
    Ok((op, interior))
}
