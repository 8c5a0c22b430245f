//! Conical-product (Stroud) quadrature on the reference tetrahedron.
//!
//! The collapsed map `x = u, y = v(1-u), z = w(1-u)(1-v)` turns the tetrahedron
//! into the unit cube with Jacobian `(1-u)²(1-v)`. Gauss–Jacobi rules with
//! weights `(1-u)²` and `(1-v)` plus Gauss–Legendre in `w`, each with `q`
//! points, integrate every polynomial of total degree `2q - 1` exactly. All
//! weights are positive.

use nalgebra::{DMatrix, SymmetricEigen};

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    /// Barycentric coordinates `(λ₀, λ₁, λ₂, λ₃)` with `λ₁..λ₃ = (x, y, z)`.
    pub points: Vec<[f64; 4]>,
    /// Weights summing to the reference volume 1/6.
    pub weights: Vec<f64>,
    /// Highest total polynomial degree integrated exactly.
    pub order: usize,
}

impl QuadratureRule {
    /// Smallest conical-product rule exact to at least `order`.
    pub fn with_order(order: usize) -> Self {
        let q = (order + 2) / 2;
        Self::conical_product(q.max(1))
    }

    /// Rule with `q³` points, exact to degree `2q - 1`.
    pub fn conical_product(q: usize) -> Self {
        let (xu, wu) = gauss_jacobi(q, 2.0);
        let (xv, wv) = gauss_jacobi(q, 1.0);
        let (xw, ww) = gauss_jacobi(q, 0.0);
        let mut points = Vec::with_capacity(q * q * q);
        let mut weights = Vec::with_capacity(q * q * q);
        for a in 0..q {
            for b in 0..q {
                for c in 0..q {
                    let (u, v, w) = (xu[a], xv[b], xw[c]);
                    let x = u;
                    let y = v * (1.0 - u);
                    let z = w * (1.0 - u) * (1.0 - v);
                    points.push([1.0 - x - y - z, x, y, z]);
                    weights.push(wu[a] * wv[b] * ww[c]);
                }
            }
        }
        Self {
            points,
            weights,
            order: 2 * q - 1,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Reference coordinates `(x, y, z)` of point `i`.
    pub fn reference_point(&self, i: usize) -> [f64; 3] {
        let p = &self.points[i];
        [p[1], p[2], p[3]]
    }
}

/// Gauss–Jacobi nodes and weights on `[0, 1]` for the weight `(1 - x)^alpha`,
/// computed with the Golub–Welsch eigenvalue method.
pub fn gauss_jacobi(n: usize, alpha: f64) -> (Vec<f64>, Vec<f64>) {
    let beta = 0.0;
    let ab = alpha + beta;
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let k = i as f64;
        let diag = if i == 0 {
            (beta - alpha) / (ab + 2.0)
        } else {
            (beta * beta - alpha * alpha) / ((2.0 * k + ab) * (2.0 * k + ab + 2.0))
        };
        jacobi[(i, i)] = diag;
        if i + 1 < n {
            let m = k + 1.0;
            let num = 4.0 * m * (m + alpha) * (m + beta) * (m + ab);
            let s = 2.0 * m + ab;
            let off = (num / (s * s * (s + 1.0) * (s - 1.0))).sqrt();
            jacobi[(i, i + 1)] = off;
            jacobi[(i + 1, i)] = off;
        }
    }
    let eig = SymmetricEigen::new(jacobi);
    // ∫_{-1}^{1} (1-t)^α dt = 2^{α+1} / (α+1)
    let mu0 = 2f64.powf(ab + 1.0) / (alpha + 1.0);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let t = eig.eigenvalues[i];
            let v0 = eig.eigenvectors[(0, i)];
            // map t ∈ [-1, 1] to x ∈ [0, 1]: (1-t)^α dt = 2^{α+1} (1-x)^α dx
            ((1.0 + t) / 2.0, mu0 * v0 * v0 / 2f64.powf(alpha + 1.0))
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}
