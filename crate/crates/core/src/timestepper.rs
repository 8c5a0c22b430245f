//! Explicit three-level time stepping.
//!
//! Each step solves
//!
//! ```text
//! M w^{n+1} = M (2w^n - w^{n-1}) - (k²/ν) K w^n
//!           + (k²/2ν)(b(t_n) - b(t_{n-1})) + (k/ν) ∫_{t_{n-1}}^{t_n} b dt
//! ```
//!
//! for the increment `δ = w^{n+1} - 2w^n + w^{n-1}` on the interior DOFs.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::assembly::{
    assemble_ball_load, assemble_mass, complement, expand, form_operator, lumped_mass, restrict,
    BallQuadrature, BoxedOperator, GradientForm, MaterialParams, OperatorBackend,
    RestrictedOperator, StructuredOperator,
};
use crate::fem::FunctionSpace;
use crate::norms::{max_generalized_eigenvalue, signed_sqrt};
use crate::solver::{CgSolver, SolverConfig};
use crate::source::{integrate_source_in_time, SourceConfig};
use crate::sparse::{dot, DiagonalOperator, LinearOperator};
use crate::stress::SymTensor;
use crate::{Error, Point3, Result};

/// Outcome of the time-step restriction check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CflReport {
    pub k: f64,
    pub h: f64,
    pub c_sr: f64,
    pub nu: f64,
    /// `k / h`
    pub ratio: f64,
    /// `√(2ν)`
    pub constant_limit: f64,
    pub ratio_ok: bool,
    pub constant_ok: bool,
    pub passed: bool,
}

impl fmt::Display for CflReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "k/h = {:.6e} {} C_sr = {:.6e}, C_sr {} sqrt(2 nu) = {:.6e}",
            self.ratio,
            if self.ratio_ok { "<=" } else { ">" },
            self.c_sr,
            if self.constant_ok { "<" } else { ">=" },
            self.constant_limit
        )
    }
}

pub fn check_cfl(k: f64, h: f64, c_sr: f64, nu: f64) -> CflReport {
    let ratio = k / h;
    let constant_limit = (2.0 * nu).sqrt();
    let ratio_ok = ratio <= c_sr * (1.0 + 1e-12);
    let constant_ok = c_sr > 0.0 && c_sr < constant_limit;
    CflReport {
        k,
        h,
        c_sr,
        nu,
        ratio,
        constant_limit,
        ratio_ok,
        constant_ok,
        passed: ratio_ok && constant_ok,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchemeConfig {
    pub k: f64,
    pub t_final: f64,
    pub c_sr: f64,
    pub params: MaterialParams,
    pub source: SourceConfig,
    pub allow_cfl_violation: bool,
    pub solver: SolverConfig,
    pub lumped_mass: bool,
    pub backend: OperatorBackend,
    pub ball_quadrature: BallQuadrature,
}

impl SchemeConfig {
    pub fn new(k: f64, t_final: f64, c_sr: f64, params: MaterialParams, source: SourceConfig) -> Self {
        Self {
            k,
            t_final,
            c_sr,
            params,
            source,
            allow_cfl_violation: false,
            solver: SolverConfig::default(),
            lumped_mass: false,
            backend: OperatorBackend::Auto,
            ball_quadrature: BallQuadrature::default(),
        }
    }

    /// `N = T_f / k`, which must be an integer to within 1e-9.
    pub fn num_steps(&self) -> Result<usize> {
        if !(self.k > 0.0) || !(self.t_final > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "need k > 0 and T_f > 0, got k={}, T_f={}",
                self.k, self.t_final
            )));
        }
        let r = self.t_final / self.k;
        let n = r.round();
        if (r - n).abs() > 1e-9 * n.max(1.0) || n < 1.0 {
            return Err(Error::InvalidArgument(format!(
                "T_f / k = {r} is not an integer"
            )));
        }
        Ok(n as usize)
    }
}

/// A displacement-like initial field.
#[derive(Clone, Default)]
pub enum InitialField {
    #[default]
    Zero,
    Function(Arc<dyn Fn(&Point3) -> [f64; 3] + Send + Sync>),
    /// Coefficients in the vector layout of the target space.
    Coefficients(Vec<f64>),
}

impl fmt::Debug for InitialField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialField::Zero => write!(f, "Zero"),
            InitialField::Function(_) => write!(f, "Function"),
            InitialField::Coefficients(c) => write!(f, "Coefficients(len {})", c.len()),
        }
    }
}

impl InitialField {
    fn coefficients(&self, space: &FunctionSpace) -> Result<Vec<f64>> {
        let n = space.num_vector_dofs();
        match self {
            InitialField::Zero => Ok(vec![0.0; n]),
            InitialField::Function(f) => Ok(space.interpolate(|p| f(p))),
            InitialField::Coefficients(c) if c.len() == n => Ok(c.clone()),
            InitialField::Coefficients(c) => Err(Error::InvalidArgument(format!(
                "initial coefficients have length {}, expected {n}",
                c.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct InitialData {
    pub w0: InitialField,
    pub w1: InitialField,
    pub kappa0: SymTensor,
}

/// The two trailing displacement levels.
#[derive(Debug, Clone)]
pub struct TimeState {
    pub w_prev: Vec<f64>,
    pub w_curr: Vec<f64>,
    /// Index of `w_curr`.
    pub n: usize,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonitorRecord {
    pub n: usize,
    pub t: f64,
    pub l2_norm: f64,
    pub a_norm: f64,
    /// Undefined at `n = 0`.
    pub energy: Option<f64>,
    pub cg_iterations: usize,
    pub residual: f64,
}

/// Operators and source vector for one space and parameter set.
pub struct Discretization {
    pub space: Arc<FunctionSpace>,
    pub backend: OperatorBackend,
    pub mass: BoxedOperator,
    pub stiffness: BoxedOperator,
    /// Mass restricted to the interior, used for the step solves.
    pub step_mass: BoxedOperator,
    pub interior: Vec<usize>,
    /// Spatial ball load per component (scalar layout), if the source is active.
    pub ball_load: Option<Vec<f64>>,
}

impl Discretization {
    pub fn new(space: Arc<FunctionSpace>, cfg: &SchemeConfig) -> Result<Self> {
        let backend = cfg.backend.resolve(&space);
        let interior = complement(&space.boundary_vector_dofs(), space.num_vector_dofs());
        let (mass, mut step_mass): (BoxedOperator, BoxedOperator) = match backend {
            OperatorBackend::Structured => {
                let m = Arc::new(StructuredOperator::mass(Arc::clone(&space))?);
                let r = RestrictedOperator::new(Arc::clone(&m), interior.clone());
                (Box::new(m), Box::new(r))
            }
            _ => {
                let m = assemble_mass(&space);
                let r = m.submatrix(&interior);
                (Box::new(m), Box::new(r))
            }
        };
        if cfg.lumped_mass {
            step_mass = Box::new(DiagonalOperator(restrict(&interior, &lumped_mass(&space).0)));
        }
        let stiffness = form_operator(&space, &GradientForm::elasticity(&cfg.params), backend)?;
        let ball_load = if cfg.source.is_zero() {
            None
        } else {
            let src = cfg.source;
            Some(assemble_ball_load(
                &space,
                &src.center,
                src.radius,
                &move |x: &Point3| src.profile.eval(x),
                cfg.ball_quadrature,
            ))
        };
        Ok(Self {
            space,
            backend,
            mass,
            stiffness,
            step_mass,
            interior,
            ball_load,
        })
    }

    /// Largest eigenvalue of `M⁻¹K` on the interior DOFs.
    pub fn max_eigenvalue(&self, steps: usize) -> Result<f64> {
        let k = RestrictedOperator::new(&*self.stiffness, self.interior.clone());
        max_generalized_eigenvalue(&k, &*self.step_mass, steps, 17)
    }
}

/// Advances the scheme one level at a time.
pub struct Stepper<'a> {
    disc: &'a Discretization,
    cfg: SchemeConfig,
    solver: CgSolver,
    state: TimeState,
    kw_prev: Vec<f64>,
    kw_curr: Vec<f64>,
    mw_prev: Vec<f64>,
    mw_curr: Vec<f64>,
    delta: Vec<f64>,
    delta_prev: Option<Vec<f64>>,
    rhs: Vec<f64>,
    last: MonitorRecord,
}

impl<'a> Stepper<'a> {
    /// Sets `w⁰ = I(w₀)` and `w¹ = I(w₀ + k w₁)` with zero boundary values.
    pub fn new(disc: &'a Discretization, cfg: SchemeConfig, data: &InitialData) -> Result<Self> {
        let sp = &disc.space;
        let mut w0 = data.w0.coefficients(sp)?;
        let w1 = data.w1.coefficients(sp)?;
        sp.zero_boundary(&mut w0);
        let mut wc: Vec<f64> = w0.iter().zip(&w1).map(|(a, b)| a + cfg.k * b).collect();
        sp.zero_boundary(&mut wc);
        let n = sp.num_vector_dofs();
        let solver = CgSolver::new(&*disc.step_mass, cfg.solver)?;
        let mut s = Self {
            disc,
            cfg,
            solver,
            state: TimeState {
                w_prev: w0,
                w_curr: wc,
                n: 1,
                t: cfg.k,
            },
            kw_prev: vec![0.0; n],
            kw_curr: vec![0.0; n],
            mw_prev: vec![0.0; n],
            mw_curr: vec![0.0; n],
            delta: vec![0.0; disc.interior.len()],
            delta_prev: None,
            rhs: vec![0.0; n],
            last: MonitorRecord {
                n: 0,
                t: 0.0,
                l2_norm: 0.0,
                a_norm: 0.0,
                energy: None,
                cg_iterations: 0,
                residual: 0.0,
            },
        };
        disc.stiffness.apply(&s.state.w_prev, &mut s.kw_prev);
        disc.mass.apply(&s.state.w_prev, &mut s.mw_prev);
        disc.stiffness.apply(&s.state.w_curr, &mut s.kw_curr);
        disc.mass.apply(&s.state.w_curr, &mut s.mw_curr);
        Ok(s)
    }

    pub fn state(&self) -> &TimeState {
        &self.state
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.cfg
    }

    /// Monitors of `w⁰`.
    pub fn initial_monitor(&self) -> MonitorRecord {
        let w = &self.state.w_prev;
        MonitorRecord {
            n: 0,
            t: 0.0,
            l2_norm: dot(w, &self.mw_prev).max(0.0).sqrt(),
            a_norm: signed_sqrt(dot(w, &self.kw_prev)),
            energy: None,
            cg_iterations: 0,
            residual: 0.0,
        }
    }

    /// Monitors of the current level.
    pub fn monitor(&self) -> MonitorRecord {
        let w = &self.state.w_curr;
        MonitorRecord {
            n: self.state.n,
            t: self.state.t,
            l2_norm: dot(w, &self.mw_curr).max(0.0).sqrt(),
            a_norm: signed_sqrt(dot(w, &self.kw_curr)),
            energy: Some(self.discrete_energy()),
            cg_iterations: self.last.cg_iterations,
            residual: self.last.residual,
        }
    }

    /// `E^n = ‖d‖² - (k²/2ν)|||d|||² + (k²/2ν)(|||w^n|||² + |||w^{n-1}|||²)`
    /// with `d = w^n - w^{n-1}`.
    pub fn discrete_energy(&self) -> f64 {
        let (wc, wp) = (&self.state.w_curr, &self.state.w_prev);
        let c = self.cfg.k * self.cfg.k / (2.0 * self.cfg.params.nu);
        let mut dmd = 0.0;
        let mut dkd = 0.0;
        for i in 0..wc.len() {
            let d = wc[i] - wp[i];
            dmd += d * (self.mw_curr[i] - self.mw_prev[i]);
            dkd += d * (self.kw_curr[i] - self.kw_prev[i]);
        }
        dmd - c * dkd + c * (dot(wc, &self.kw_curr) + dot(wp, &self.kw_prev))
    }

    /// Scalar multiplying the ball load on the right-hand side of the step
    /// from `t_{n-1}` to `t_{n+1}`.
    fn source_factor(&self) -> f64 {
        let (k, nu) = (self.cfg.k, self.cfg.params.nu);
        let tn = self.state.t;
        let tp = tn - k;
        let src = &self.cfg.source;
        k * k / (2.0 * nu) * (src.time_factor(tn) - src.time_factor(tp))
            + k / nu * integrate_source_in_time(src, tp, tn)
    }

    /// Computes `w^{n+1}` and shifts the state.
    pub fn step(&mut self) -> Result<MonitorRecord> {
        let step = self.state.n + 1;
        let sp = &self.disc.space;
        let n = sp.num_dofs();
        let c = -self.cfg.k * self.cfg.k / self.cfg.params.nu;
        for (r, kw) in self.rhs.iter_mut().zip(&self.kw_curr) {
            *r = c * kw;
        }
        if let Some(b) = &self.disc.ball_load {
            let f = self.source_factor();
            if f != 0.0 {
                for a in 0..3 {
                    for (r, bi) in self.rhs[a * n..(a + 1) * n].iter_mut().zip(b) {
                        *r += f * bi;
                    }
                }
            }
        }
        let rhs = restrict(&self.disc.interior, &self.rhs);
        // linear extrapolation of the two previous increments as initial guess
        let last = self.delta.clone();
        if let Some(prev) = &self.delta_prev {
            for (d, p) in self.delta.iter_mut().zip(prev) {
                *d = 2.0 * *d - p;
            }
        }
        self.delta_prev = Some(last);
        let report = self
            .solver
            .solve(&*self.disc.step_mass, &rhs, &mut self.delta)
            .map_err(|e| Error::Step {
                step,
                source: Box::new(e.into()),
            })?;
        let delta = expand(&self.disc.interior, &self.delta, sp.num_vector_dofs());
        let next: Vec<f64> = (0..delta.len())
            .map(|i| 2.0 * self.state.w_curr[i] - self.state.w_prev[i] + delta[i])
            .collect();
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step });
        }
        self.state.w_prev = std::mem::replace(&mut self.state.w_curr, next);
        std::mem::swap(&mut self.kw_prev, &mut self.kw_curr);
        std::mem::swap(&mut self.mw_prev, &mut self.mw_curr);
        self.disc.stiffness.apply(&self.state.w_curr, &mut self.kw_curr);
        self.disc.mass.apply(&self.state.w_curr, &mut self.mw_curr);
        self.state.n = step;
        self.state.t = step as f64 * self.cfg.k;
        self.last.cg_iterations = report.iterations;
        self.last.residual = report.residual;
        let m = self.monitor();
        if !m.l2_norm.is_finite() || m.energy.map_or(false, |e| !e.is_finite()) {
            return Err(Error::NonFinite { step });
        }
        Ok(m)
    }
}

/// Which levels a run keeps in memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SnapshotPolicy {
    None,
    /// First, last and every `⌈N/20⌉`-th level.
    #[default]
    Default,
    Stride(usize),
    All,
}

impl SnapshotPolicy {
    fn keeps(&self, n: usize, total: usize) -> bool {
        match *self {
            SnapshotPolicy::None => false,
            SnapshotPolicy::All => true,
            SnapshotPolicy::Default => {
                n == 0 || n == total || n % total.div_ceil(20).max(1) == 0
            }
            SnapshotPolicy::Stride(s) => n == 0 || n == total || n % s.max(1) == 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub n: usize,
    pub t: f64,
    pub coeffs: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub num_steps: usize,
    pub update_solves: usize,
    pub cfl: CflReport,
    pub monitors: Vec<MonitorRecord>,
    pub snapshots: Vec<Snapshot>,
    pub final_state: TimeState,
}

/// Called with every level `w^n`, `n = 0..=N`.
pub type Observer<'o> = dyn FnMut(usize, f64, &[f64]) -> Result<()> + 'o;

/// Runs the scheme from `t = 0` to `T_f`.
pub fn run(
    disc: &Discretization,
    cfg: &SchemeConfig,
    data: &InitialData,
    snapshots: SnapshotPolicy,
    observer: Option<&mut Observer<'_>>,
) -> Result<RunOutput> {
    let total = cfg.num_steps()?;
    let cfl = check_cfl(cfg.k, disc.space.mesh().h(), cfg.c_sr, cfg.params.nu);
    if !cfl.passed {
        if cfg.allow_cfl_violation {
            log::warn!("running with violated CFL restriction: {cfl}");
        } else {
            return Err(Error::Cfl(cfl));
        }
    }
    let mut noop = |_: usize, _: f64, _: &[f64]| Ok(());
    let observer: &mut Observer<'_> = match observer {
        Some(o) => o,
        None => &mut noop,
    };
    let mut stepper = Stepper::new(disc, *cfg, data)?;
    let mut monitors = Vec::with_capacity(total + 1);
    let mut kept = Vec::new();
    let keep = |n: usize, t: f64, w: &[f64], kept: &mut Vec<Snapshot>| {
        if snapshots.keeps(n, total) {
            kept.push(Snapshot {
                n,
                t,
                coeffs: w.to_vec(),
            });
        }
    };
    monitors.push(stepper.initial_monitor());
    observer(0, 0.0, &stepper.state().w_prev)?;
    keep(0, 0.0, &stepper.state().w_prev, &mut kept);
    monitors.push(stepper.monitor());
    observer(1, cfg.k, &stepper.state().w_curr)?;
    keep(1, cfg.k, &stepper.state().w_curr, &mut kept);
    let mut solves = 0;
    while stepper.state().n < total {
        let m = stepper.step()?;
        solves += 1;
        monitors.push(m);
        let st = stepper.state();
        observer(st.n, st.t, &st.w_curr)?;
        keep(st.n, st.t, &st.w_curr, &mut kept);
    }
    Ok(RunOutput {
        num_steps: total,
        update_solves: solves,
        cfl,
        monitors,
        snapshots: kept,
        final_state: stepper.state().clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_box_mesh, BoxDomain};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn space(n: usize, d: usize) -> Arc<FunctionSpace> {
        let mesh = build_box_mesh(&BoxDomain::unit_cube(n).unwrap()).unwrap();
        Arc::new(FunctionSpace::new(Arc::new(mesh), d).unwrap())
    }

    fn unit() -> MaterialParams {
        MaterialParams::new(1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn cfl_examples() {
        let third = 1.0 / 3.0;
        assert!(check_cfl(3f64.powi(-5), 3f64.powi(-3), third, 1.0).passed);
        assert!(check_cfl(3f64.powi(-5), 3f64.powi(-3), 1.0, 1.0).passed);
        let r = check_cfl(0.1, 0.1, third, 1.0);
        assert!(!r.passed && !r.ratio_ok && r.constant_ok);
        let r = check_cfl(0.01, 0.1, 1.5, 1.0);
        assert!(!r.passed && r.ratio_ok && !r.constant_ok);
        assert!(r.to_string().contains("sqrt(2 nu)"));
    }

    #[test]
    fn step_count() {
        let cfg = SchemeConfig::new(3f64.powi(-5), 1.0, 1.0, unit(), SourceConfig::zero());
        assert_eq!(cfg.num_steps().unwrap(), 243);
        let bad = SchemeConfig::new(0.3, 1.0, 1.0, unit(), SourceConfig::zero());
        assert!(bad.num_steps().is_err());
    }

    #[test]
    fn zero_data_zero_source_stays_zero() {
        let sp = space(2, 1);
        let cfg = SchemeConfig::new(0.1, 1.0, 1.0, unit(), SourceConfig::zero());
        let disc = Discretization::new(sp, &cfg).unwrap();
        let out = run(&disc, &cfg, &InitialData::default(), SnapshotPolicy::None, None).unwrap();
        assert_eq!(out.num_steps, 10);
        assert_eq!(out.update_solves, 9);
        assert_eq!(out.monitors.len(), 11);
        assert!(out.monitors.iter().all(|m| m.l2_norm == 0.0 && m.energy.unwrap_or(0.0) == 0.0));
        assert!(out.final_state.w_curr.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn initialisation() {
        let sp = space(3, 1);
        let cfg = SchemeConfig::new(0.05, 1.0, 1.0, unit(), SourceConfig::zero());
        let disc = Discretization::new(sp.clone(), &cfg).unwrap();
        let data = InitialData {
            w0: InitialField::Zero,
            w1: InitialField::Function(Arc::new(|_| [1.0, 1.0, 1.0])),
            kappa0: SymTensor::zero(),
        };
        let s = Stepper::new(&disc, cfg, &data).unwrap();
        let n = sp.num_dofs();
        for i in 0..n {
            let expected = if sp.is_boundary_dof(i) { 0.0 } else { 0.05 };
            assert_eq!(s.state().w_curr[i], expected);
            assert_eq!(s.state().w_prev[i], 0.0);
        }
        let data = InitialData {
            w0: InitialField::Function(Arc::new(|p| [p[0] * (1.0 - p[0]), 0.0, 0.0])),
            ..Default::default()
        };
        let s = Stepper::new(&disc, cfg, &data).unwrap();
        assert_eq!(s.state().w_curr, s.state().w_prev);
    }

    #[test]
    fn energy_is_conserved_without_source() {
        let sp = space(3, 1);
        let cfg = SchemeConfig::new(0.02, 1.0, 1.0, unit(), SourceConfig::zero());
        let disc = Discretization::new(sp.clone(), &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut w0: Vec<f64> = (0..sp.num_vector_dofs()).map(|_| rng.gen::<f64>() - 0.5).collect();
        sp.zero_boundary(&mut w0);
        let data = InitialData {
            w0: InitialField::Coefficients(w0),
            ..Default::default()
        };
        let out = run(&disc, &cfg, &data, SnapshotPolicy::None, None).unwrap();
        let e0 = out.monitors[1].energy.unwrap();
        assert!(e0 > 0.0);
        for m in &out.monitors[1..] {
            assert!((m.energy.unwrap() - e0).abs() < 1e-10 * e0);
        }
    }

    #[test]
    fn cfl_refusal_and_override() {
        let sp = space(1, 1);
        let mut cfg = SchemeConfig::new(1.0, 2.0, 0.5, unit(), SourceConfig::zero());
        let disc = Discretization::new(sp, &cfg).unwrap();
        let err = run(&disc, &cfg, &InitialData::default(), SnapshotPolicy::None, None).unwrap_err();
        assert!(matches!(err, Error::Cfl(_)));
        cfg.allow_cfl_violation = true;
        assert!(run(&disc, &cfg, &InitialData::default(), SnapshotPolicy::None, None).is_ok());
    }

    #[test]
    fn boundary_stays_zero_under_forcing() {
        let sp = space(3, 2);
        let src = SourceConfig::new(1.0 / std::f64::consts::PI, 0.0, [0.5; 3], 0.4).unwrap();
        let cfg = SchemeConfig::new(0.01, 0.1, 1.0, unit(), src);
        let disc = Discretization::new(sp.clone(), &cfg).unwrap();
        let out = run(&disc, &cfg, &InitialData::default(), SnapshotPolicy::All, None).unwrap();
        assert_eq!(out.snapshots.len(), 11);
        for s in &out.snapshots {
            for &b in &sp.boundary_vector_dofs() {
                assert_eq!(s.coeffs[b], 0.0);
            }
        }
        assert!(out.monitors.last().unwrap().l2_norm > 0.0);
    }

    #[test]
    fn snapshot_policy() {
        assert!(SnapshotPolicy::Default.keeps(0, 243));
        assert!(SnapshotPolicy::Default.keeps(243, 243));
        assert!(SnapshotPolicy::Default.keeps(13, 243));
        assert!(!SnapshotPolicy::Default.keeps(14, 243));
        assert!(!SnapshotPolicy::None.keeps(0, 5));
    }
}
