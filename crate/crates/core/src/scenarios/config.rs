//! TOML scenario configuration and its validation.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::assembly::{BallQuadrature, MaterialParams, OperatorBackend};
use crate::fem::{FunctionSpace, MAX_DEGREE};
use crate::mesh::BoxDomain;
use crate::solver::SolverConfig;
use crate::source::{SourceConfig, SpatialProfile};
use crate::stress::SymTensor;
use crate::timestepper::{InitialData, InitialField, SchemeConfig};
use crate::{Error, Point3, Result};

/// A number given literally or as a short expression: `"3^-5"`, `"1/3"`,
/// `"1/pi"`, `"2^0.5"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Int(i64),
    Float(f64),
    Expr(String),
}

impl From<f64> for Num {
    fn from(v: f64) -> Self {
        Num::Float(v)
    }
}

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Num::Int(i) => write!(f, "{i}"),
            Num::Float(v) => write!(f, "{v}"),
            Num::Expr(s) => write!(f, "\"{s}\""),
        }
    }
}

impl Num {
    pub fn value(&self) -> Result<f64> {
        match self {
            Num::Int(i) => Ok(*i as f64),
            Num::Float(v) => Ok(*v),
            Num::Expr(s) => eval_expr(s).ok_or_else(|| Error::Config(format!("cannot evaluate number {s:?}"))),
        }
    }
}

fn eval_atom(s: &str) -> Option<f64> {
    match s.trim() {
        "pi" | "π" => Some(PI),
        t => t.parse().ok(),
    }
}

fn eval_power(s: &str) -> Option<f64> {
    match s.split_once('^') {
        Some((b, e)) => Some(eval_atom(b)?.powf(e.trim().parse().ok()?)),
        None => eval_atom(s),
    }
}

fn eval_expr(s: &str) -> Option<f64> {
    let v = match s.split_once('/') {
        Some((a, b)) => eval_power(a)? / eval_power(b)?,
        None => eval_power(s)?,
    };
    v.is_finite().then_some(v)
}

fn vec3(v: &[Num; 3]) -> Result<Point3> {
    Ok([v[0].value()?, v[1].value()?, v[2].value()?])
}

fn nums(p: Point3) -> [Num; 3] {
    p.map(Num::from)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub lo: [Num; 3],
    pub hi: [Num; 3],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cells: Option<[usize; 3]>,
    /// Nominal grid spacing; cells per axis are `(hi - lo) / spacing` rounded.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spacing: Option<Num>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub k: Num,
    pub t_final: Num,
    pub c_sr: Num,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSection {
    pub nu: Num,
    #[serde(alias = "E", skip_serializing_if = "Option::is_none")]
    pub young_modulus: Option<Num>,
    #[serde(alias = "alpha", skip_serializing_if = "Option::is_none")]
    pub poisson_ratio: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<Num>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSection {
    pub g_c: Num,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t0: Option<Num>,
    pub center: [Num; 3],
    pub radius: Num,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile: Option<SpatialProfile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<Num>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InitialKind {
    #[default]
    Zero,
    /// Uniform random interior values for `w₀` and `w₁`.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Kappa0Section {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k11: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k22: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k33: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k12: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k13: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k23: Option<Num>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub displacement: Option<InitialKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa0: Option<Kappa0Section>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct NumericsSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub backend: Option<OperatorBackend>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lumped_mass: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ball_quadrature: Option<BallQuadrature>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abs_tol: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub allow_cfl_violation: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Number of VTK snapshots besides the initial one; 0 disables VTK.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vtk_snapshots: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<Vec<Num>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_ref: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cells: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cells_ref: Option<usize>,
    /// Time step of the spatial study; defaults to `time.k`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub space_k: Option<Num>,
}

/// The configuration file as written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
    pub domain: DomainSection,
    pub time: TimeSection,
    pub material: MaterialSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<SourceSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub numerics: Option<NumericsSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub study: Option<StudySection>,
}

/// Temporal self-convergence study: every `k` against `k_ref`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeStudy {
    pub ks: Vec<f64>,
    pub k_ref: f64,
}

/// Spatial self-convergence study on cubes of `cells` per axis against
/// `cells_ref`, all with time step `k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpaceStudy {
    pub cells: Vec<usize>,
    pub cells_ref: usize,
    pub k: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Numerics {
    pub backend: OperatorBackend,
    pub lumped_mass: bool,
    pub ball_quadrature: BallQuadrature,
    pub solver: SolverConfig,
    pub allow_cfl_violation: bool,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            backend: OperatorBackend::Auto,
            lumped_mass: false,
            ball_quadrature: BallQuadrature::default(),
            solver: SolverConfig::default(),
            allow_cfl_violation: false,
        }
    }
}

/// A fully validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub domain: BoxDomain,
    pub degree: usize,
    pub k: f64,
    pub t_final: f64,
    pub c_sr: f64,
    pub params: MaterialParams,
    /// `(E, α)` when the material was given that way.
    pub moduli: Option<(f64, f64)>,
    pub source: SourceConfig,
    pub kappa0: SymTensor,
    pub initial: InitialKind,
    pub seed: u64,
    pub initial_amplitude: f64,
    pub numerics: Numerics,
    pub vtk_snapshots: usize,
    pub time_study: Option<TimeStudy>,
    pub space_study: Option<SpaceStudy>,
}

fn cfg_err(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1e-12)
}

fn divides(k: f64, t: f64) -> bool {
    let r = t / k;
    r >= 1.0 - 1e-9 && (r - r.round()).abs() <= 1e-9 * r.round().max(1.0)
}

pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
    ScenarioConfig::from_file(&file)
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

impl ScenarioConfig {
    pub fn from_file(f: &ConfigFile) -> Result<Self> {
        let lo = vec3(&f.domain.lo)?;
        let hi = vec3(&f.domain.hi)?;
        let domain = match (&f.domain.cells, &f.domain.spacing) {
            (Some(c), None) => BoxDomain::new(lo, hi, *c),
            (None, Some(s)) => BoxDomain::with_spacing(lo, hi, s.value()?),
            _ => return Err(Error::Config("domain needs exactly one of `cells` or `spacing`".into())),
        }
        .map_err(cfg_err)?;
        let degree = f.degree.unwrap_or(2);
        if !(1..=MAX_DEGREE).contains(&degree) {
            return Err(Error::Config(format!("degree must be in 1..={MAX_DEGREE}, got {degree}")));
        }

        let m = &f.material;
        let nu = m.nu.value()?;
        let opt = |v: &Option<Num>| v.as_ref().map(Num::value).transpose();
        let (e, alpha, lambda, mu) = (opt(&m.young_modulus)?, opt(&m.poisson_ratio)?, opt(&m.lambda)?, opt(&m.mu)?);
        let from_moduli = match (e, alpha) {
            (Some(e), Some(a)) => Some(MaterialParams::from_young(nu, e, a).map_err(cfg_err)?),
            (None, None) => None,
            _ => return Err(Error::Config("give both `young_modulus` (E) and `poisson_ratio` (alpha)".into())),
        };
        let from_lame = match (lambda, mu) {
            (Some(l), Some(u)) => Some(MaterialParams::new(nu, l, u).map_err(cfg_err)?),
            (None, None) => None,
            _ => return Err(Error::Config("give both `lambda` and `mu`".into())),
        };
        let params = match (from_moduli, from_lame) {
            (Some(a), Some(b)) => {
                if !close(a.lambda, b.lambda) || !close(a.mu, b.mu) {
                    return Err(Error::Config(format!(
                        "E and alpha give lambda={}, mu={} but lambda={}, mu={} were given",
                        a.lambda, a.mu, b.lambda, b.mu
                    )));
                }
                a
            }
            (Some(a), None) | (None, Some(a)) => a,
            (None, None) => {
                return Err(Error::Config(
                    "material needs (young_modulus, poisson_ratio) or (lambda, mu)".into(),
                ))
            }
        };
        let moduli = e.zip(alpha);

        let k = f.time.k.value()?;
        let t_final = f.time.t_final.value()?;
        let c_sr = f.time.c_sr.value()?;

        let source = match &f.source {
            None => SourceConfig::zero(),
            Some(s) => {
                let mut src = SourceConfig::new(
                    s.g_c.value()?,
                    opt(&s.t0)?.unwrap_or(0.0),
                    vec3(&s.center)?,
                    s.radius.value()?,
                )
                .map_err(cfg_err)?;
                src.profile = s.profile.unwrap_or_default();
                src.amplitude = opt(&s.amplitude)?.unwrap_or(1.0);
                src.validate().map_err(cfg_err)?;
                src
            }
        };

        let init = f.initial.clone().unwrap_or_default();
        let kappa0 = match &init.kappa0 {
            None => SymTensor::zero(),
            Some(c) => SymTensor::from_array([
                opt(&c.k11)?.unwrap_or(0.0),
                opt(&c.k22)?.unwrap_or(0.0),
                opt(&c.k33)?.unwrap_or(0.0),
                opt(&c.k12)?.unwrap_or(0.0),
                opt(&c.k13)?.unwrap_or(0.0),
                opt(&c.k23)?.unwrap_or(0.0),
            ]),
        };

        let n = f.numerics.clone().unwrap_or_default();
        let mut numerics = Numerics::default();
        numerics.backend = n.backend.unwrap_or_default();
        numerics.lumped_mass = n.lumped_mass.unwrap_or(false);
        numerics.ball_quadrature = n.ball_quadrature.unwrap_or_default();
        numerics.allow_cfl_violation = n.allow_cfl_violation.unwrap_or(false);
        if let Some(t) = &n.rel_tol {
            numerics.solver.rel_tol = t.value()?;
        }
        if let Some(t) = &n.abs_tol {
            numerics.solver.abs_tol = t.value()?;
        }
        numerics.solver.max_iter = n.max_iter;

        let (time_study, space_study) = match &f.study {
            None => (None, None),
            Some(s) => {
                let ts = match (&s.k, &s.k_ref) {
                    (Some(ks), Some(r)) => Some(TimeStudy {
                        ks: ks.iter().map(Num::value).collect::<Result<_>>()?,
                        k_ref: r.value()?,
                    }),
                    (None, None) => None,
                    _ => return Err(Error::Config("study needs both `k` and `k_ref`".into())),
                };
                let ss = match (&s.cells, s.cells_ref) {
                    (Some(c), Some(r)) => Some(SpaceStudy {
                        cells: c.clone(),
                        cells_ref: r,
                        k: opt(&s.space_k)?.unwrap_or(k),
                    }),
                    (None, None) => None,
                    _ => return Err(Error::Config("study needs both `cells` and `cells_ref`".into())),
                };
                (ts, ss)
            }
        };

        let cfg = Self {
            name: f.name.clone().unwrap_or_else(|| "scenario".into()),
            domain,
            degree,
            k,
            t_final,
            c_sr,
            params,
            moduli,
            source,
            kappa0,
            initial: init.displacement.unwrap_or_default(),
            seed: init.seed.unwrap_or(0),
            initial_amplitude: opt(&init.amplitude)?.unwrap_or(1.0),
            numerics,
            vtk_snapshots: f.output.as_ref().and_then(|o| o.vtk_snapshots).unwrap_or(4),
            time_study,
            space_study,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.scheme_config().num_steps().map_err(cfg_err)?;
        if !(self.c_sr > 0.0) {
            return Err(Error::Config(format!("C_sr must be positive, got {}", self.c_sr)));
        }
        let limit = (2.0 * self.params.nu).sqrt();
        if self.c_sr >= limit && !self.numerics.allow_cfl_violation {
            return Err(Error::Config(format!(
                "C_sr = {} must be below sqrt(2 nu) = {limit}; pass the CFL override to run anyway",
                self.c_sr
            )));
        }
        let s = &self.numerics.solver;
        if !(s.rel_tol >= 0.0) || !(s.abs_tol >= 0.0) || s.rel_tol + s.abs_tol == 0.0 {
            return Err(Error::Config("solver tolerances must be non-negative and not both zero".into()));
        }
        if let Some(ts) = &self.time_study {
            if ts.ks.is_empty() {
                return Err(Error::Config("time study needs at least one k".into()));
            }
            for &k in &ts.ks {
                if !divides(k, self.t_final) {
                    return Err(Error::Config(format!("study k = {k} does not divide T_f = {}", self.t_final)));
                }
                if ts.k_ref > k * (1.0 + 1e-12) || !divides(ts.k_ref, k) {
                    return Err(Error::Config(format!(
                        "reference k = {} must be the smallest step and divide k = {k}",
                        ts.k_ref
                    )));
                }
            }
        }
        if let Some(ss) = &self.space_study {
            if ss.cells.is_empty() || ss.cells.iter().any(|&c| c == 0 || ss.cells_ref % c != 0) {
                return Err(Error::Config(format!(
                    "study cells {:?} must be positive divisors of cells_ref = {}",
                    ss.cells, ss.cells_ref
                )));
            }
            if !divides(ss.k, self.t_final) {
                return Err(Error::Config(format!("study k = {} does not divide T_f", ss.k)));
            }
        }
        Ok(())
    }

    pub fn scheme_config(&self) -> SchemeConfig {
        let mut s = SchemeConfig::new(self.k, self.t_final, self.c_sr, self.params, self.source);
        s.allow_cfl_violation = self.numerics.allow_cfl_violation;
        s.solver = self.numerics.solver;
        s.lumped_mass = self.numerics.lumped_mass;
        s.backend = self.numerics.backend;
        s.ball_quadrature = self.numerics.ball_quadrature;
        s
    }

    /// Nominal grid spacing (largest cell edge).
    pub fn spacing(&self) -> f64 {
        self.domain.cell_size().into_iter().fold(0.0, f64::max)
    }

    pub fn initial_data(&self, space: &FunctionSpace) -> InitialData {
        let field = |salt: u64| match self.initial {
            InitialKind::Zero => InitialField::Zero,
            InitialKind::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed.wrapping_mul(2).wrapping_add(salt));
                let mut c: Vec<f64> = (0..space.num_vector_dofs())
                    .map(|_| self.initial_amplitude * (2.0 * rng.gen::<f64>() - 1.0))
                    .collect();
                space.zero_boundary(&mut c);
                InitialField::Coefficients(c)
            }
        };
        InitialData {
            w0: field(0),
            w1: field(1),
            kappa0: self.kappa0,
        }
    }

    /// The configuration in file form; parsing it gives back `self`.
    pub fn to_file(&self) -> ConfigFile {
        let src = &self.source;
        let k0 = self.kappa0;
        let n = &self.numerics;
        ConfigFile {
            name: Some(self.name.clone()),
            degree: Some(self.degree),
            domain: DomainSection {
                lo: nums(self.domain.lo),
                hi: nums(self.domain.hi),
                cells: Some(self.domain.cells),
                spacing: None,
            },
            time: TimeSection {
                k: self.k.into(),
                t_final: self.t_final.into(),
                c_sr: self.c_sr.into(),
            },
            material: MaterialSection {
                nu: self.params.nu.into(),
                young_modulus: self.moduli.map(|m| m.0.into()),
                poisson_ratio: self.moduli.map(|m| m.1.into()),
                lambda: Some(self.params.lambda.into()),
                mu: Some(self.params.mu.into()),
            },
            source: (!src.is_zero()).then(|| SourceSection {
                g_c: src.g_c.into(),
                t0: Some(src.t0.into()),
                center: nums(src.center),
                radius: src.radius.into(),
                profile: Some(src.profile),
                amplitude: Some(src.amplitude.into()),
            }),
            initial: Some(InitialSection {
                displacement: Some(self.initial),
                seed: Some(self.seed),
                amplitude: Some(self.initial_amplitude.into()),
                kappa0: Some(Kappa0Section {
                    k11: Some(k0.xx.into()),
                    k22: Some(k0.yy.into()),
                    k33: Some(k0.zz.into()),
                    k12: Some(k0.xy.into()),
                    k13: Some(k0.xz.into()),
                    k23: Some(k0.yz.into()),
                }),
            }),
            numerics: Some(NumericsSection {
                backend: Some(n.backend),
                lumped_mass: Some(n.lumped_mass),
                ball_quadrature: Some(n.ball_quadrature),
                rel_tol: Some(n.solver.rel_tol.into()),
                abs_tol: Some(n.solver.abs_tol.into()),
                max_iter: n.solver.max_iter,
                allow_cfl_violation: Some(n.allow_cfl_violation),
            }),
            output: Some(OutputSection {
                vtk_snapshots: Some(self.vtk_snapshots),
            }),
            study: if self.time_study.is_none() && self.space_study.is_none() {
                None
            } else {
                Some(StudySection {
                    k: self.time_study.as_ref().map(|t| t.ks.iter().map(|&k| k.into()).collect()),
                    k_ref: self.time_study.as_ref().map(|t| t.k_ref.into()),
                    cells: self.space_study.as_ref().map(|s| s.cells.clone()),
                    cells_ref: self.space_study.as_ref().map(|s| s.cells_ref),
                    space_k: self.space_study.as_ref().map(|s| s.k.into()),
                })
            },
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(&self.to_file()).map_err(|e| Error::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
name = "toy"
degree = 1

[domain]
lo = [0, 0, 0]
hi = [1, 1, 1]
cells = [2, 2, 2]

[time]
k = "3^-3"
t_final = "1/9"
c_sr = 1

[material]
nu = 1
E = 2.5
alpha = 0.25
"#;

    #[test]
    fn expressions() {
        assert_eq!(eval_expr("3^-5"), Some(3f64.powi(-5)));
        assert_eq!(eval_expr("1/3"), Some(1.0 / 3.0));
        assert_eq!(eval_expr("1/pi"), Some(1.0 / PI));
        assert_eq!(eval_expr("2.5"), Some(2.5));
        assert_eq!(eval_expr("1/0"), None);
        assert_eq!(eval_expr("abc"), None);
    }

    #[test]
    fn parses_minimal_config() {
        let c = parse_config(BASE).unwrap();
        assert_eq!(c.degree, 1);
        assert!((c.params.lambda - 1.0).abs() < 1e-14 && (c.params.mu - 1.0).abs() < 1e-14);
        assert_eq!(c.moduli, Some((2.5, 0.25)));
        assert!(c.source.is_zero());
        assert_eq!(c.scheme_config().num_steps().unwrap(), 3);
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = parse_config(&format!("{BASE}\nbogus = 1\n")).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        let err = parse_config(&BASE.replace("alpha = 0.25", "alpha = 0.25\ncolour = 2")).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn lame_and_moduli_consistency() {
        let ok = BASE.replace("alpha = 0.25", "alpha = 0.25\nlambda = 1\nmu = 1");
        assert!(parse_config(&ok).is_ok());
        let bad = BASE.replace("alpha = 0.25", "alpha = 0.25\nlambda = 2\nmu = 1");
        assert!(matches!(parse_config(&bad), Err(Error::Config(_))));
        let lame_only = BASE.replace("E = 2.5\nalpha = 0.25", "lambda = -1.25\nmu = 0.625");
        let c = parse_config(&lame_only).unwrap();
        assert!(!c.params.is_coercive());
        let half = BASE.replace("alpha = 0.25", "");
        assert!(matches!(parse_config(&half), Err(Error::Config(_))));
    }

    #[test]
    fn missing_section_and_bad_ratio() {
        let no_time = BASE.replace("[time]\nk = \"3^-3\"\nt_final = \"1/9\"\nc_sr = 1\n", "");
        assert!(matches!(parse_config(&no_time), Err(Error::Config(_))));
        let bad = BASE.replace("t_final = \"1/9\"", "t_final = 0.1");
        assert!(matches!(parse_config(&bad), Err(Error::Config(_))));
    }

    #[test]
    fn csr_constant_needs_override() {
        let bad = BASE.replace("c_sr = 1", "c_sr = 1.5");
        assert!(matches!(parse_config(&bad), Err(Error::Config(_))));
        let forced = format!("{bad}\n[numerics]\nallow_cfl_violation = true\n");
        assert!(parse_config(&forced).is_ok());
    }

    #[test]
    fn spacing_and_source() {
        let text = BASE.replace("cells = [2, 2, 2]", "spacing = \"3^-1\"")
            + "\n[source]\ng_c = \"1/pi\"\ncenter = [0.5, 0.5, 0.5]\nradius = \"3^-3\"\n";
        let c = parse_config(&text).unwrap();
        assert_eq!(c.domain.cells, [3, 3, 3]);
        assert_eq!(c.source.g_c, 1.0 / PI);
        assert_eq!(c.source.t0, 0.0);
    }

    #[test]
    fn round_trip_through_file_form() {
        let text = BASE.to_string()
            + "\n[source]\ng_c = 0.2\nt0 = 1\ncenter = [0.5, 0.5, 0.5]\nradius = 0.3\n\
               [initial]\ndisplacement = \"random\"\nseed = 5\nkappa0 = { k22 = 0.3, k13 = 1e-3 }\n\
               [study]\nk = [\"3^-2\"]\nk_ref = \"3^-3\"\ncells = [1]\ncells_ref = 2\n";
        let c = parse_config(&text).unwrap();
        let again = parse_config(&c.to_toml().unwrap()).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn study_validation() {
        let bad = BASE.to_string() + "\n[study]\nk = [\"3^-4\"]\nk_ref = \"3^-3\"\n";
        assert!(matches!(parse_config(&bad), Err(Error::Config(_))));
        let bad = BASE.to_string() + "\n[study]\ncells = [2]\ncells_ref = 3\n";
        assert!(matches!(parse_config(&bad), Err(Error::Config(_))));
    }

    #[test]
    fn random_initial_data_is_seeded_and_interior() {
        use crate::mesh::build_box_mesh;
        use std::sync::Arc;
        let mut c = parse_config(BASE).unwrap();
        c.initial = InitialKind::Random;
        let mesh = build_box_mesh(&c.domain).unwrap();
        let sp = FunctionSpace::new(Arc::new(mesh), 1).unwrap();
        let coeffs = |d: &InitialData| match &d.w0 {
            InitialField::Coefficients(v) => v.clone(),
            _ => panic!(),
        };
        let a = coeffs(&c.initial_data(&sp));
        assert_eq!(a, coeffs(&c.initial_data(&sp)));
        for &b in sp.boundary_vector_dofs().iter() {
            assert_eq!(a[b], 0.0);
        }
        assert!(a.iter().any(|v| *v != 0.0));
    }
}
