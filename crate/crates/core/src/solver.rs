//! Jacobi-preconditioned conjugate gradients.

use serde::Serialize;
use thiserror::Error;

use crate::sparse::{axpy, dot, norm2, LinearOperator};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    /// Stop when `‖r‖ ≤ rel_tol ‖b‖ + abs_tol`.
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Defaults to ten times the system dimension.
    pub max_iter: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            abs_tol: 0.0,
            max_iter: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// True residual `‖b - A x‖₂` of the returned solution.
    pub residual: f64,
    pub rhs_norm: f64,
}

#[derive(Debug, Clone, Error)]
pub enum SolverError {
    #[error("CG did not converge in {iterations} iterations (residual {residual:.3e}, target {target:.3e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        target: f64,
        history: Vec<f64>,
    },
    #[error("non-finite value in CG at iteration {iteration}")]
    NonFinite { iteration: usize },
    #[error("operator is not positive definite (pᵀAp = {curvature:e} at iteration {iteration})")]
    NotPositiveDefinite { iteration: usize, curvature: f64 },
    #[error("dimension mismatch: operator {op}, vector {vec}")]
    DimensionMismatch { op: usize, vec: usize },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
}

/// Reusable CG solver that caches the inverse diagonal and work vectors.
#[derive(Debug, Clone)]
pub struct CgSolver {
    config: SolverConfig,
    inv_diag: Vec<f64>,
    r: Vec<f64>,
    z: Vec<f64>,
    p: Vec<f64>,
    ap: Vec<f64>,
}

impl CgSolver {
    pub fn new(op: &dyn LinearOperator, config: SolverConfig) -> Result<Self, SolverError> {
        if !(config.rel_tol > 0.0) || config.abs_tol < 0.0 {
            return Err(SolverError::InvalidConfig(format!(
                "rel_tol {} abs_tol {}",
                config.rel_tol, config.abs_tol
            )));
        }
        let n = op.dim();
        let inv_diag = op
            .diagonal()
            .into_iter()
            .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
            .collect();
        Ok(Self {
            config,
            inv_diag,
            r: vec![0.0; n],
            z: vec![0.0; n],
            p: vec![0.0; n],
            ap: vec![0.0; n],
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    /// Solves `A x = b`, using the incoming `x` as the initial guess.
    pub fn solve(
        &mut self,
        op: &dyn LinearOperator,
        b: &[f64],
        x: &mut [f64],
    ) -> Result<SolveReport, SolverError> {
        let n = op.dim();
        if b.len() != n || x.len() != n || self.inv_diag.len() != n {
            return Err(SolverError::DimensionMismatch {
                op: n,
                vec: b.len(),
            });
        }
        let bnorm = norm2(b);
        if !bnorm.is_finite() {
            return Err(SolverError::NonFinite { iteration: 0 });
        }
        if bnorm == 0.0 {
            x.iter_mut().for_each(|v| *v = 0.0);
            return Ok(SolveReport {
                iterations: 0,
                residual: 0.0,
                rhs_norm: 0.0,
            });
        }
        let target = self.config.rel_tol * bnorm + self.config.abs_tol;
        let max_iter = self.config.max_iter.unwrap_or(10 * n).max(1);
        let mut history = Vec::new();
        let mut iterations = 0;

        // An outer loop re-seeds from the true residual if the recurrence drifted.
        for _restart in 0..4 {
            self.true_residual(op, b, x);
            let mut rnorm = norm2(&self.r);
            history.push(rnorm);
            if rnorm <= target {
                return Ok(SolveReport {
                    iterations,
                    residual: rnorm,
                    rhs_norm: bnorm,
                });
            }
            precondition(&self.inv_diag, &self.r, &mut self.z);
            self.p.copy_from_slice(&self.z);
            let mut rz = dot(&self.r, &self.z);
            while rnorm > target {
                if iterations >= max_iter {
                    return Err(SolverError::NotConverged {
                        iterations,
                        residual: rnorm,
                        target,
                        history,
                    });
                }
                iterations += 1;
                op.apply(&self.p, &mut self.ap);
                let pap = dot(&self.p, &self.ap);
                if !pap.is_finite() {
                    return Err(SolverError::NonFinite {
                        iteration: iterations,
                    });
                }
                if pap <= 0.0 {
                    return Err(SolverError::NotPositiveDefinite {
                        iteration: iterations,
                        curvature: pap,
                    });
                }
                let alpha = rz / pap;
                axpy(alpha, &self.p, x);
                axpy(-alpha, &self.ap, &mut self.r);
                rnorm = norm2(&self.r);
                history.push(rnorm);
                if !rnorm.is_finite() {
                    return Err(SolverError::NonFinite {
                        iteration: iterations,
                    });
                }
                precondition(&self.inv_diag, &self.r, &mut self.z);
                let rz_new = dot(&self.r, &self.z);
                let beta = rz_new / rz;
                rz = rz_new;
                for (p, z) in self.p.iter_mut().zip(&self.z) {
                    *p = z + beta * *p;
                }
            }
        }
        self.true_residual(op, b, x);
        let residual = norm2(&self.r);
        if residual <= target {
            Ok(SolveReport {
                iterations,
                residual,
                rhs_norm: bnorm,
            })
        } else {
            Err(SolverError::NotConverged {
                iterations,
                residual,
                target,
                history,
            })
        }
    }

    fn true_residual(&mut self, op: &dyn LinearOperator, b: &[f64], x: &[f64]) {
        op.apply(x, &mut self.ap);
        for ((r, b), ax) in self.r.iter_mut().zip(b).zip(&self.ap) {
            *r = b - ax;
        }
    }
}

fn precondition(inv_diag: &[f64], r: &[f64], z: &mut [f64]) {
    for ((z, r), d) in z.iter_mut().zip(r).zip(inv_diag) {
        *z = r * d;
    }
}

/// One-shot solve of `A x = b`.
pub fn cg_solve(
    op: &dyn LinearOperator,
    b: &[f64],
    config: SolverConfig,
    warm_start: Option<&[f64]>,
) -> Result<(Vec<f64>, SolveReport), SolverError> {
    let mut x = match warm_start {
        Some(w) if w.len() == b.len() => w.to_vec(),
        Some(w) => {
            return Err(SolverError::DimensionMismatch {
                op: b.len(),
                vec: w.len(),
            })
        }
        None => vec![0.0; b.len()],
    };
    let mut solver = CgSolver::new(op, config)?;
    let report = solver.solve(op, b, &mut x)?;
    Ok((x, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::{CsrMatrix, DiagonalOperator};

    fn laplace_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, &t).unwrap()
    }

    #[test]
    fn zero_rhs_returns_zero_without_iterating() {
        let a = laplace_1d(5);
        let (x, rep) = cg_solve(&a, &[0.0; 5], SolverConfig::default(), Some(&[1.0; 5])).unwrap();
        assert_eq!(x, vec![0.0; 5]);
        assert_eq!(rep.iterations, 0);
    }

    #[test]
    fn diagonal_system() {
        let d = DiagonalOperator(vec![2.0, 4.0, 8.0, 0.5]);
        let b = [1.0, 2.0, 3.0, 4.0];
        let (x, rep) = cg_solve(&d, &b, SolverConfig::default(), None).unwrap();
        for i in 0..4 {
            assert!((x[i] - b[i] / d.0[i]).abs() < 1e-15);
        }
        assert!(rep.iterations <= 4);
    }

    #[test]
    fn tridiagonal_residual_contract() {
        let n = 50;
        let a = laplace_1d(n);
        let u: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut b = vec![0.0; n];
        a.apply(&u, &mut b);
        let cfg = SolverConfig::default();
        let (x, rep) = cg_solve(&a, &b, cfg, None).unwrap();
        assert!(rep.residual <= cfg.rel_tol * norm2(&b) + cfg.abs_tol);
        for i in 0..n {
            assert!((x[i] - u[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn reports_non_convergence_with_history() {
        let a = laplace_1d(40);
        let b = vec![1.0; 40];
        let cfg = SolverConfig {
            max_iter: Some(3),
            ..Default::default()
        };
        match cg_solve(&a, &b, cfg, None) {
            Err(SolverError::NotConverged { iterations, history, .. }) => {
                assert_eq!(iterations, 3);
                assert_eq!(history.len(), 4);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nan_rhs_aborts() {
        let a = laplace_1d(3);
        let r = cg_solve(&a, &[1.0, f64::NAN, 0.0], SolverConfig::default(), None);
        assert!(matches!(r, Err(SolverError::NonFinite { .. })));
    }

    #[test]
    fn indefinite_operator_detected() {
        let d = DiagonalOperator(vec![1.0, -1.0]);
        let r = cg_solve(&d, &[1.0, 1.0], SolverConfig::default(), None);
        assert!(matches!(r, Err(SolverError::NotPositiveDefinite { .. })));
    }

    #[test]
    fn serial_solves_are_bit_identical() {
        let a = laplace_1d(30);
        let b: Vec<f64> = (0..30).map(|i| (i as f64).cos()).collect();
        let x1 = cg_solve(&a, &b, SolverConfig::default(), None).unwrap().0;
        let x2 = cg_solve(&a, &b, SolverConfig::default(), None).unwrap().0;
        assert_eq!(x1, x2);
    }
}
