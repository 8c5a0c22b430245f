//! Norms, error measurement between resolutions and convergence orders.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::fem::{FunctionSpace, PointLocation};
use crate::solver::{CgSolver, SolverConfig};
use crate::sparse::{dot, LinearOperator};
use crate::{Error, Result};

/// `‖u‖₀̄ = √(uᵀ M u)`.
pub fn l2_vector_norm(mass: &dyn LinearOperator, u: &[f64]) -> f64 {
    mass.quadratic_form(u, u).max(0.0).sqrt()
}

/// `|||u|||_A` as a signed square root: negative when the quadratic form is
/// negative, which can only happen for `λ + μ < 0`.
pub fn a_norm(stiffness: &dyn LinearOperator, u: &[f64]) -> f64 {
    signed_sqrt(stiffness.quadratic_form(u, u))
}

pub fn signed_sqrt(q: f64) -> f64 {
    if q < 0.0 {
        log::warn!("A-form is negative ({q:e}); reporting a signed value");
        -(-q).sqrt()
    } else {
        q.sqrt()
    }
}

pub fn max_in_time(series: &[f64]) -> Result<f64> {
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    Ok(series.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

fn check_same_domain(a: &FunctionSpace, b: &FunctionSpace) -> Result<()> {
    if !a.mesh().domain().same_box(b.mesh().domain()) {
        return Err(Error::DomainMismatch(format!(
            "{:?}..{:?} vs {:?}..{:?}",
            a.mesh().domain().lo,
            a.mesh().domain().hi,
            b.mesh().domain().lo,
            b.mesh().domain().hi
        )));
    }
    Ok(())
}

/// L² norm of `u_fine - u_coarse`, integrated with the fine space's volume
/// rule; the coarse field is evaluated at the fine quadrature points.
pub fn field_difference_norm(
    fine: &FunctionSpace,
    fine_coeffs: &[f64],
    coarse: &FunctionSpace,
    coarse_coeffs: &[f64],
) -> Result<f64> {
    check_same_domain(fine, coarse)?;
    if fine_coeffs.len() != fine.num_vector_dofs() || coarse_coeffs.len() != coarse.num_vector_dofs() {
        return Err(Error::InvalidArgument("coefficient length does not match space".into()));
    }
    let rule = fine.mass_rule();
    let tab = fine.tabulate_rule(&rule);
    let n = fine.num_dofs();
    let nb = fine.num_basis();
    let same_space = fine.degree() == coarse.degree()
        && fine.mesh().domain().cells == coarse.mesh().domain().cells;
    let partial: Result<Vec<f64>> = (0..fine.mesh().num_tets())
        .into_par_iter()
        .map(|t| {
            let geo = fine.geometry(t);
            let dofs = fine.tet_dofs(t);
            let mut s = 0.0;
            for q in 0..rule.len() {
                let mut uf = [0.0; 3];
                for i in 0..nb {
                    let v = tab.value(q, i);
                    for a in 0..3 {
                        uf[a] += fine_coeffs[a * n + dofs[i]] * v;
                    }
                }
                let uc = if same_space {
                    let mut u = [0.0; 3];
                    for i in 0..nb {
                        let v = tab.value(q, i);
                        for a in 0..3 {
                            u[a] += coarse_coeffs[a * n + dofs[i]] * v;
                        }
                    }
                    u
                } else {
                    coarse.evaluate_field(coarse_coeffs, &geo.to_physical(&rule.reference_point(q)))?
                };
                let e2: f64 = (0..3).map(|a| (uf[a] - uc[a]).powi(2)).sum();
                s += rule.weights[q] * geo.det.abs() * e2;
            }
            Ok(s)
        })
        .collect();
    Ok(partial?.iter().sum::<f64>().sqrt())
}

/// Exact transfer of a coarse field into a nested fine space of equal or
/// higher degree by evaluating it at the fine nodes.
pub struct Injection {
    locations: Vec<PointLocation>,
    fine_dofs: usize,
    coarse_dofs: usize,
}

impl Injection {
    pub fn new(coarse: &FunctionSpace, fine: &FunctionSpace) -> Result<Self> {
        check_same_domain(fine, coarse)?;
        let cc = coarse.mesh().domain().cells;
        let fc = fine.mesh().domain().cells;
        let nested = (0..3).all(|a| fc[a] % cc[a] == 0) && fine.degree() >= coarse.degree();
        if !nested {
            return Err(Error::InvalidArgument(format!(
                "spaces are not nested: coarse cells {cc:?} degree {}, fine cells {fc:?} degree {}",
                coarse.degree(),
                fine.degree()
            )));
        }
        let locations: Result<Vec<_>> = fine
            .node_positions()
            .par_iter()
            .map(|p| coarse.locate(p))
            .collect();
        Ok(Self {
            locations: locations?,
            fine_dofs: fine.num_dofs(),
            coarse_dofs: coarse.num_dofs(),
        })
    }

    pub fn apply(&self, coarse: &FunctionSpace, coarse_coeffs: &[f64]) -> Vec<f64> {
        assert_eq!(coarse.num_dofs(), self.coarse_dofs);
        let n = self.fine_dofs;
        let vals: Vec<[f64; 3]> = self
            .locations
            .par_iter()
            .map(|loc| coarse.evaluate_located(coarse_coeffs, loc))
            .collect();
        let mut out = vec![0.0; 3 * n];
        for (i, v) in vals.iter().enumerate() {
            for a in 0..3 {
                out[a * n + i] = v[a];
            }
        }
        out
    }
}

/// `log(e_coarse / e_fine) / log(factor)`; `None` when undefined.
pub fn convergence_order(e_coarse: f64, e_fine: f64, factor: f64) -> Option<f64> {
    if e_coarse > 0.0 && e_fine > 0.0 && e_coarse.is_finite() && e_fine.is_finite() && factor > 1.0 {
        Some((e_coarse / e_fine).ln() / factor.ln())
    } else {
        None
    }
}

/// Least-squares slope of `log e` against `log r`.
pub fn least_squares_order(resolutions: &[f64], errors: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = resolutions
        .iter()
        .zip(errors)
        .filter(|(r, e)| **r > 0.0 && **e > 0.0)
        .map(|(r, e)| (r.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorEntry {
    pub resolution: f64,
    pub displacement_error: f64,
    pub displacement_seconds: f64,
    pub stress_error: f64,
    pub stress_seconds: f64,
}

/// Errors of a convergence study, ordered from coarse to fine.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorSeries {
    pub parameter: String,
    pub reference: String,
    pub factor: f64,
    pub entries: Vec<ErrorEntry>,
}

impl ErrorSeries {
    pub fn displacement_orders(&self) -> Vec<Option<f64>> {
        self.orders(|e| e.displacement_error)
    }

    pub fn stress_orders(&self) -> Vec<Option<f64>> {
        self.orders(|e| e.stress_error)
    }

    fn orders(&self, f: impl Fn(&ErrorEntry) -> f64) -> Vec<Option<f64>> {
        let mut out = vec![None];
        for w in self.entries.windows(2) {
            let ratio = w[0].resolution / w[1].resolution;
            let factor = if ratio.is_finite() && ratio > 1.0 { ratio } else { self.factor };
            out.push(convergence_order(f(&w[0]), f(&w[1]), factor));
        }
        out
    }

    pub fn fitted_displacement_order(&self) -> Option<f64> {
        let r: Vec<f64> = self.entries.iter().map(|e| e.resolution).collect();
        let e: Vec<f64> = self.entries.iter().map(|e| e.displacement_error).collect();
        least_squares_order(&r, &e)
    }
}

/// Largest eigenvalue of `B⁻¹A` for symmetric `A` and SPD `B` by Lanczos
/// iteration in the `B` inner product with full reorthogonalisation.
pub fn max_generalized_eigenvalue(
    a: &dyn LinearOperator,
    b: &dyn LinearOperator,
    steps: usize,
    seed: u64,
) -> Result<f64> {
    let n = a.dim();
    if n == 0 {
        return Ok(0.0);
    }
    let m = steps.min(n).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
    let mut bq = vec![0.0; n];
    b.apply(&q, &mut bq);
    let s = dot(&q, &bq).sqrt();
    q.iter_mut().for_each(|v| *v /= s);
    bq.iter_mut().for_each(|v| *v /= s);

    let cfg = SolverConfig {
        rel_tol: 1e-13,
        abs_tol: 0.0,
        max_iter: None,
    };
    let mut solver = CgSolver::new(b, cfg)?;
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut bbasis: Vec<Vec<f64>> = Vec::new();
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut aq = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut bw = vec![0.0; n];
    for j in 0..m {
        a.apply(&q, &mut aq);
        let aj = dot(&q, &aq);
        alpha.push(aj);
        basis.push(q.clone());
        bbasis.push(bq.clone());
        w.iter_mut().for_each(|v| *v = 0.0);
        solver.solve(b, &aq, &mut w)?;
        for _ in 0..2 {
            for (v, bv) in basis.iter().zip(&bbasis) {
                let c = dot(&w, bv);
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= c * vi;
                }
            }
        }
        b.apply(&w, &mut bw);
        let bj = dot(&w, &bw).max(0.0).sqrt();
        if j + 1 == m || bj <= 1e-12 * aj.abs().max(1e-300) {
            break;
        }
        beta.push(bj);
        for i in 0..n {
            q[i] = w[i] / bj;
            bq[i] = bw[i] / bj;
        }
    }
    let k = alpha.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    Ok(eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_mass, assemble_stiffness, MaterialParams};
    use crate::mesh::{build_box_mesh, BoxDomain};
    use crate::sparse::{CsrMatrix, DiagonalOperator};
    use std::sync::Arc;

    fn space(n: usize, d: usize) -> FunctionSpace {
        let mesh = build_box_mesh(&BoxDomain::unit_cube(n).unwrap()).unwrap();
        FunctionSpace::new(Arc::new(mesh), d).unwrap()
    }

    #[test]
    fn l2_and_a_norms() {
        let sp = space(2, 2);
        let m = assemble_mass(&sp);
        let ones = vec![1.0; sp.num_vector_dofs()];
        assert!((l2_vector_norm(&m, &ones) - 3f64.sqrt()).abs() < 1e-12);
        assert_eq!(l2_vector_norm(&m, &vec![0.0; ones.len()]), 0.0);
        let k = assemble_stiffness(&sp, &MaterialParams::new(1.0, 1.0, 1.0).unwrap());
        assert!(a_norm(&k, &ones).abs() < 1e-6);
        let u = sp.interpolate(|p| [p[0], 0.0, 0.0]);
        assert!((a_norm(&k, &u) - 3f64.sqrt()).abs() < 1e-10);
        let u2: Vec<f64> = u.iter().map(|v| 2.0 * v).collect();
        assert!((a_norm(&k, &u2) - 2.0 * a_norm(&k, &u)).abs() < 1e-12);
    }

    #[test]
    fn max_in_time_cases() {
        assert!(matches!(max_in_time(&[]), Err(Error::EmptySeries)));
        assert_eq!(max_in_time(&[2.0, 2.0]).unwrap(), 2.0);
        assert_eq!(max_in_time(&[1.0, 2.0, 3.0]).unwrap(), 3.0);
        assert_eq!(max_in_time(&[0.0; 4]).unwrap(), 0.0);
    }

    #[test]
    fn orders() {
        assert!((convergence_order(27.0, 1.0, 3.0).unwrap() - 3.0).abs() < 1e-14);
        assert!((convergence_order(9.0, 1.0, 3.0).unwrap() - 2.0).abs() < 1e-14);
        assert!(convergence_order(0.0, 1.0, 3.0).is_none());
        let a = convergence_order(5.0, 0.7, 3.0).unwrap();
        let b = convergence_order(5.0 * 13.0, 0.7 * 13.0, 3.0).unwrap();
        assert!((a - b).abs() < 1e-14);
        let tab = convergence_order(1.0521e-3, 2.5119e-4, 3.0).unwrap();
        assert!((tab - 1.3036).abs() < 1e-3);
        let fit = least_squares_order(&[1.0, 1.0 / 3.0, 1.0 / 9.0], &[1.0, 1.0 / 9.0, 1.0 / 81.0]).unwrap();
        assert!((fit - 2.0).abs() < 1e-12);
    }

    #[test]
    fn difference_norm_same_space_equals_mass_norm() {
        let sp = space(2, 2);
        let m = assemble_mass(&sp);
        let a = sp.interpolate(|p| [p[0].sin(), p[1] * p[2], 1.0]);
        let b = sp.interpolate(|p| [p[1], p[0].cos(), p[2]]);
        let diff: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        let d1 = field_difference_norm(&sp, &a, &sp, &b).unwrap();
        let d2 = field_difference_norm(&sp, &b, &sp, &a).unwrap();
        assert!((d1 - l2_vector_norm(&m, &diff)).abs() < 1e-12);
        assert!((d1 - d2).abs() < 1e-12);
        assert_eq!(field_difference_norm(&sp, &a, &sp, &a).unwrap(), 0.0);
    }

    #[test]
    fn nested_polynomial_difference_vanishes() {
        let coarse = space(1, 2);
        let fine = space(3, 2);
        let f = |p: &[f64; 3]| [p[0] * p[1], p[2] * p[2] - p[0], 0.5];
        let c = coarse.interpolate(f);
        let fv = fine.interpolate(f);
        assert!(field_difference_norm(&fine, &fv, &coarse, &c).unwrap() < 1e-11);
        let inj = Injection::new(&coarse, &fine).unwrap();
        let injected = inj.apply(&coarse, &c);
        for (a, b) in injected.iter().zip(&fv) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn injection_matches_quadrature_difference() {
        let coarse = space(1, 2);
        let fine = space(3, 2);
        let c = coarse.interpolate(|p| [(3.0 * p[0]).sin(), p[1].exp(), 0.0]);
        let fv = fine.interpolate(|p| [(3.0 * p[0]).sin(), p[1].exp(), p[2]]);
        let inj = Injection::new(&coarse, &fine).unwrap().apply(&coarse, &c);
        let e: Vec<f64> = fv.iter().zip(&inj).map(|(a, b)| a - b).collect();
        let m = assemble_mass(&fine);
        let via_injection = l2_vector_norm(&m, &e);
        let via_quadrature = field_difference_norm(&fine, &fv, &coarse, &c).unwrap();
        assert!((via_injection - via_quadrature).abs() < 1e-12 * via_quadrature.max(1.0));
    }

    #[test]
    fn mismatched_domains_rejected() {
        let a = space(1, 1);
        let mesh = build_box_mesh(&BoxDomain::new([-1.0; 3], [1.0; 3], [1; 3]).unwrap()).unwrap();
        let b = FunctionSpace::new(Arc::new(mesh), 1).unwrap();
        let z = vec![0.0; 24];
        assert!(matches!(
            field_difference_norm(&a, &z, &b, &z),
            Err(Error::DomainMismatch(_))
        ));
    }

    #[test]
    fn lanczos_finds_largest_eigenvalue() {
        let a = DiagonalOperator((1..=30).map(|i| i as f64).collect());
        let b = CsrMatrix::identity(30);
        let l = max_generalized_eigenvalue(&a, &b, 30, 1).unwrap();
        assert!((l - 30.0).abs() < 1e-8);
        let b2 = DiagonalOperator(vec![2.0; 30]);
        let l2 = max_generalized_eigenvalue(&a, &b2, 30, 1).unwrap();
        assert!((l2 - 15.0).abs() < 1e-8);
    }
}
