use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use elastodyn::assembly::{assemble_mass, assemble_scalar_mass, assemble_stiffness, MaterialParams};
use elastodyn::fem::FunctionSpace;
use elastodyn::mesh::{build_box_mesh, BoxDomain};
use elastodyn::solver::SolverConfig;
use elastodyn::source::{SourceConfig, SpatialProfile};
use elastodyn::sparse::CsrMatrix;
use elastodyn::stress::SymTensor;
use elastodyn::timestepper::{Discretization, InitialData, InitialField, SchemeConfig, Stepper};

fn dense(a: &CsrMatrix, keep: &[usize]) -> DMatrix<f64> {
    let d = a.to_dense();
    DMatrix::from_fn(keep.len(), keep.len(), |i, j| d[keep[i]][keep[j]])
}

fn apply_dense(a: &CsrMatrix, x: &[f64]) -> Vec<f64> {
    a.to_dense().iter().map(|row| row.iter().zip(x).map(|(r, v)| r * v).sum()).collect()
}

/// `∫ s` in closed form for `s(u) = (1 − a²u²) e^{−a²u²}`.
fn time_integral(src: &SourceConfig, t_a: f64, t_b: f64) -> f64 {
    let a = PI * src.g_c;
    let anti = |t: f64| {
        let u = t - src.t0;
        PI.sqrt() / (4.0 * a) * libm::erf(a * u) + 0.5 * u * (-(a * u).powi(2)).exp()
    };
    anti(t_b) - anti(t_a)
}

#[test]
fn stepper_matches_dense_recurrence() {
    let mesh = Arc::new(build_box_mesh(&BoxDomain::unit_cube(2).unwrap()).unwrap());
    let space = Arc::new(FunctionSpace::new(mesh, 2).unwrap());
    let params = MaterialParams::new(1.3, 0.8, 0.6).unwrap();
    let mut source = SourceConfig::new(0.9, 0.05, [0.5; 3], 2.0).unwrap();
    source.profile = SpatialProfile::Uniform;
    let k = 0.01;
    let mut cfg = SchemeConfig::new(k, 5.0 * k, 1.0 / 3.0, params, source);
    cfg.solver = SolverConfig {
        rel_tol: 1e-14,
        abs_tol: 0.0,
        max_iter: None,
    };
    let f0 = |x: &[f64; 3]| [x[0] * (1.0 - x[0]), 0.3 * x[1] * x[2], -(x[2] - 0.5).powi(2)];
    let f1 = |x: &[f64; 3]| [x[1], -x[0], 0.2];
    let data = InitialData {
        w0: InitialField::Function(Arc::new(f0)),
        w1: InitialField::Function(Arc::new(f1)),
        kappa0: SymTensor::zero(),
    };
    let disc = Discretization::new(Arc::clone(&space), &cfg).unwrap();
    let mut st = Stepper::new(&disc, cfg, &data).unwrap();
    for _ in 0..4 {
        st.step().unwrap();
    }

    let n = space.num_dofs();
    let nv = space.num_vector_dofs();
    let interior: Vec<usize> = (0..nv).filter(|i| !space.is_boundary_dof(i % n)).collect();
    let m = assemble_mass(&space);
    let kk = assemble_stiffness(&space, &params);
    let chol = dense(&m, &interior).cholesky().unwrap();
    let ones = vec![1.0; n];
    let load = apply_dense(&assemble_scalar_mass(&space), &ones);

    let mut w_prev = space.interpolate(f0);
    space.zero_boundary(&mut w_prev);
    let v = space.interpolate(f1);
    let mut w_curr: Vec<f64> = w_prev.iter().zip(&v).map(|(a, b)| a + k * b).collect();
    space.zero_boundary(&mut w_curr);
    for step in 1..=4 {
        let (tn, tp) = (step as f64 * k, (step - 1) as f64 * k);
        let fac = k * k / (2.0 * params.nu) * (source.time_factor(tn) - source.time_factor(tp))
            + k / params.nu * time_integral(&source, tp, tn);
        let kw = apply_dense(&kk, &w_curr);
        let rhs = DVector::from_iterator(
            interior.len(),
            interior.iter().map(|&i| -k * k / params.nu * kw[i] + fac * load[i % n]),
        );
        let delta = chol.solve(&rhs);
        let mut next: Vec<f64> = w_curr.iter().zip(&w_prev).map(|(c, p)| 2.0 * c - p).collect();
        for (r, &i) in interior.iter().enumerate() {
            next[i] += delta[r];
        }
        w_prev = std::mem::replace(&mut w_curr, next);
    }
    let got = &st.state().w_curr;
    let scale = w_curr.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let err = got.iter().zip(&w_curr).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert_eq!(st.state().n, 5);
    assert!(err <= 1e-10 * scale, "error {err:e}, scale {scale:e}");
}

fn random_interior(space: &FunctionSpace, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut u: Vec<f64> = (0..space.num_vector_dofs()).map(|_| rng.gen::<f64>() - 0.5).collect();
    space.zero_boundary(&mut u);
    u
}

fn energy_run(k: f64, steps: usize) -> (f64, Vec<f64>) {
    let mesh = Arc::new(build_box_mesh(&BoxDomain::unit_cube(3).unwrap()).unwrap());
    let space = Arc::new(FunctionSpace::new(mesh, 2).unwrap());
    let params = MaterialParams::new(1.0, 1.0, 1.0).unwrap();
    let mut cfg = SchemeConfig::new(k, steps as f64 * k, 1.0 / 3.0, params, SourceConfig::zero());
    cfg.solver = SolverConfig {
        rel_tol: 1e-14,
        abs_tol: 0.0,
        max_iter: None,
    };
    let disc = Discretization::new(Arc::clone(&space), &cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let data = InitialData {
        w0: InitialField::Coefficients(random_interior(&space, &mut rng)),
        w1: InitialField::Coefficients(random_interior(&space, &mut rng)),
        kappa0: SymTensor::zero(),
    };
    let lmax = disc.max_eigenvalue(60).unwrap();
    let mut st = Stepper::new(&disc, cfg, &data).unwrap();
    let mut energies = vec![st.discrete_energy()];
    for _ in 0..steps {
        energies.push(st.step().unwrap().energy.unwrap());
    }
    (lmax, energies)
}

#[test]
fn energy_is_conserved_below_the_spectral_limit() {
    // k² λ_max / ν ≈ 1.7 on this mesh
    let (lmax, e) = energy_run(0.02, 200);
    assert!(0.02f64.powi(2) * lmax <= 2.0, "lambda_max {lmax}");
    let drift = e.iter().map(|v| (v - e[0]).abs()).fold(0.0, f64::max) / e[0];
    assert!(drift < 1e-8, "relative drift {drift:e}");
    assert!(e.iter().all(|v| *v > 0.0));
}

#[test]
fn stated_ratio_exceeds_the_spectral_limit() {
    let mesh = build_box_mesh(&BoxDomain::unit_cube(3).unwrap()).unwrap();
    let k = mesh.h() / 3.0;
    let (lmax, _) = energy_run(0.02, 1);
    assert!(k * k * lmax > 4.0 * 30.0, "k^2 lambda_max = {}", k * k * lmax);
}
