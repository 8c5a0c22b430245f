//! Equispaced Lagrange elements on the reference tetrahedron.
//!
//! Shape functions use the barycentric product form: for a node with
//! multi-index `α` (`|α| = d`),
//!
//! ```text
//! φ_α(λ) = Π_i Π_{j<α_i} (d λ_i − j) / (j + 1)
//! ```
//!
//! which is one at its own node and vanishes at every other lattice node.

use crate::{Error, Result};

pub const MAX_DEGREE: usize = 4;

#[derive(Debug, Clone)]
pub struct ReferenceElement {
    degree: usize,
    /// Barycentric multi-indices `(α₀, α₁, α₂, α₃)` summing to `degree`.
    nodes: Vec<[usize; 4]>,
}

/// Basis values and reference gradients at a set of points.
#[derive(Debug, Clone)]
pub struct Tabulation {
    pub num_points: usize,
    pub num_basis: usize,
    /// `values[q * num_basis + i]`
    pub values: Vec<f64>,
    /// Gradients with respect to reference coordinates, same layout.
    pub gradients: Vec<[f64; 3]>,
}

impl Tabulation {
    pub fn value(&self, q: usize, i: usize) -> f64 {
        self.values[q * self.num_basis + i]
    }

    pub fn gradient(&self, q: usize, i: usize) -> &[f64; 3] {
        &self.gradients[q * self.num_basis + i]
    }
}

impl ReferenceElement {
    pub fn new(degree: usize) -> Result<Self> {
        if !(1..=MAX_DEGREE).contains(&degree) {
            return Err(Error::UnsupportedDegree(degree));
        }
        let mut nodes = Vec::new();
        for a3 in 0..=degree {
            for a2 in 0..=degree - a3 {
                for a1 in 0..=degree - a3 - a2 {
                    nodes.push([degree - a1 - a2 - a3, a1, a2, a3]);
                }
            }
        }
        Ok(Self { degree, nodes })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn num_basis(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[[usize; 4]] {
        &self.nodes
    }

    /// Reference coordinates of node `i`.
    pub fn node_point(&self, i: usize) -> [f64; 3] {
        let d = self.degree as f64;
        let a = &self.nodes[i];
        [a[1] as f64 / d, a[2] as f64 / d, a[3] as f64 / d]
    }

    /// Evaluates all shape functions and their reference gradients at `xi`.
    pub fn evaluate(&self, xi: &[f64; 3], values: &mut [f64], gradients: &mut [[f64; 3]]) {
        let d = self.degree;
        let df = d as f64;
        let lambda = [1.0 - xi[0] - xi[1] - xi[2], xi[0], xi[1], xi[2]];
        // factor[i][m] = Π_{j<m} (dλ_i − j)/(j+1) and its λ-derivative
        let mut factor = [[0.0; MAX_DEGREE + 1]; 4];
        let mut dfactor = [[0.0; MAX_DEGREE + 1]; 4];
        for i in 0..4 {
            factor[i][0] = 1.0;
            dfactor[i][0] = 0.0;
            for m in 1..=d {
                let j = (m - 1) as f64;
                let s = (df * lambda[i] - j) / (j + 1.0);
                let ds = df / (j + 1.0);
                factor[i][m] = factor[i][m - 1] * s;
                dfactor[i][m] = dfactor[i][m - 1] * s + factor[i][m - 1] * ds;
            }
        }
        for (n, a) in self.nodes.iter().enumerate() {
            let f = [
                factor[0][a[0]],
                factor[1][a[1]],
                factor[2][a[2]],
                factor[3][a[3]],
            ];
            values[n] = f[0] * f[1] * f[2] * f[3];
            let mut dl = [0.0; 4];
            for i in 0..4 {
                let mut p = dfactor[i][a[i]];
                for m in 0..4 {
                    if m != i {
                        p *= f[m];
                    }
                }
                dl[i] = p;
            }
            // λ₀ = 1 − x − y − z
            gradients[n] = [dl[1] - dl[0], dl[2] - dl[0], dl[3] - dl[0]];
        }
    }

    pub fn values_at(&self, xi: &[f64; 3]) -> Vec<f64> {
        let mut v = vec![0.0; self.num_basis()];
        let mut g = vec![[0.0; 3]; self.num_basis()];
        self.evaluate(xi, &mut v, &mut g);
        v
    }

    pub fn tabulate(&self, points: &[[f64; 3]]) -> Tabulation {
        let nb = self.num_basis();
        let mut values = vec![0.0; points.len() * nb];
        let mut gradients = vec![[0.0; 3]; points.len() * nb];
        for (q, xi) in points.iter().enumerate() {
            self.evaluate(
                xi,
                &mut values[q * nb..(q + 1) * nb],
                &mut gradients[q * nb..(q + 1) * nb],
            );
        }
        Tabulation {
            num_points: points.len(),
            num_basis: nb,
            values,
            gradients,
        }
    }
}
