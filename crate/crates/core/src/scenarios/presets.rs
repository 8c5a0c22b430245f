//! Built-in scenarios: the two verification examples and four landslide
//! sites, all on `[-1,1]³` except Example 1.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::config::{InitialKind, Numerics, ScenarioConfig, SpaceStudy, TimeStudy};
use crate::assembly::MaterialParams;
use crate::mesh::BoxDomain;
use crate::source::SourceConfig;
use crate::stress::SymTensor;
use crate::{Error, Point3, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Example1,
    Example2,
    DschangSlope,
    DschangAltitude,
    Mbankolo,
    Gouache,
}

/// Reference max-in-time norms, kept as informational targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceTargets {
    pub displacement: f64,
    /// Order 11, 22, 33, 12, 13, 23.
    pub stress: [f64; 6],
}

/// Stated parameters of a preset plus the resolutions used to run it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioPreset {
    pub name: &'static str,
    pub description: &'static str,
    pub lo: Point3,
    pub hi: Point3,
    pub t_final: f64,
    pub nu: f64,
    pub young_modulus: f64,
    pub poisson_ratio: f64,
    pub g_c: f64,
    pub g_c_note: &'static str,
    pub kappa0: SymTensor,
    pub center: Point3,
    pub radius: f64,
    pub c_sr: f64,
    /// Reference grid spacing, degree and time step.
    pub spacing: f64,
    pub degree: usize,
    pub k: f64,
    /// Reduced resolution used unless `--full` is given.
    pub desk_spacing: f64,
    pub desk_degree: usize,
    pub desk_k: f64,
    pub reference: Option<ReferenceTargets>,
}

/// Initial stress of the landslide scenarios.
pub fn site_kappa0() -> SymTensor {
    SymTensor {
        xx: 2e-2,
        yy: 3e-1,
        zz: 1.5e-2,
        xy: 0.5e-3,
        xz: 0.75e-3,
        yz: 1.25e-3,
    }
}

fn p3(e: i32) -> f64 {
    3f64.powi(e)
}

impl Preset {
    pub const ALL: [Preset; 6] = [
        Preset::Example1,
        Preset::Example2,
        Preset::DschangSlope,
        Preset::DschangAltitude,
        Preset::Mbankolo,
        Preset::Gouache,
    ];

    pub const SITES: [Preset; 4] = [
        Preset::DschangSlope,
        Preset::DschangAltitude,
        Preset::Mbankolo,
        Preset::Gouache,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Example1 => "example1",
            Preset::Example2 => "example2",
            Preset::DschangSlope => "dschang-slope",
            Preset::DschangAltitude => "dschang-altitude",
            Preset::Mbankolo => "mbankolo",
            Preset::Gouache => "gouache",
        }
    }

    pub fn parameters(&self) -> ScenarioPreset {
        let site = |name, description, g_c, g_c_note, t_final, reference| ScenarioPreset {
            name,
            description,
            lo: [-1.0; 3],
            hi: [1.0; 3],
            t_final,
            nu: 1.0,
            young_modulus: 2.5,
            poisson_ratio: 0.25,
            g_c,
            g_c_note,
            kappa0: site_kappa0(),
            center: [0.0; 3],
            radius: p3(-2),
            c_sr: 1.0 / 3.0,
            spacing: p3(-3),
            degree: 4,
            k: p3(-5),
            desk_spacing: 1.0 / 3.0,
            desk_degree: 2,
            desk_k: p3(-5),
            reference: Some(reference),
        };
        match self {
            Preset::Example1 => ScenarioPreset {
                name: "example1",
                description: "unit cube, zero initial data, ball source at the centre",
                lo: [0.0; 3],
                hi: [1.0; 3],
                t_final: 1.0,
                nu: 1.0,
                young_modulus: 2.5,
                poisson_ratio: 1.0,
                g_c: 1.0 / PI,
                g_c_note: "dimensionless",
                kappa0: SymTensor::zero(),
                center: [0.5; 3],
                radius: p3(-3),
                c_sr: 1.0,
                spacing: p3(-3),
                degree: 4,
                k: p3(-7),
                desk_spacing: p3(-2),
                desk_degree: 2,
                desk_k: p3(-5),
                reference: None,
            },
            Preset::Example2 => ScenarioPreset {
                name: "example2",
                description: "[-1,1]^3 over [0,2], zero initial data, ball source at the origin",
                lo: [-1.0; 3],
                hi: [1.0; 3],
                t_final: 2.0,
                nu: 1.0,
                young_modulus: 2.5,
                poisson_ratio: 0.25,
                g_c: 1.0 / PI,
                g_c_note: "dimensionless",
                kappa0: SymTensor::zero(),
                center: [0.0; 3],
                radius: p3(-3),
                c_sr: 1.0 / 3.0,
                spacing: p3(-3),
                degree: 4,
                k: p3(-5),
                desk_spacing: 2.0 * p3(-2),
                desk_degree: 2,
                desk_k: p3(-5),
                reference: None,
            },
            Preset::DschangSlope => site(
                "dschang-slope",
                "Dschang cliff, driven by the slope action",
                0.076,
                "slope 7.6 %",
                3.0,
                ReferenceTargets {
                    displacement: 0.1182,
                    stress: [0.6632, 0.8961, 4.2313, 0.0269, 0.2708, 0.3203],
                },
            ),
            Preset::DschangAltitude => site(
                "dschang-altitude",
                "Dschang cliff, driven by the altitude difference",
                0.7,
                "altitude difference 1450 m - 750 m = 0.7 km",
                3.0,
                ReferenceTargets {
                    displacement: 0.0783,
                    stress: [0.4412, 0.8961, 2.7684, 0.0174, 0.1774, 0.2092],
                },
            ),
            Preset::Mbankolo => site(
                "mbankolo",
                "Mbankolo, driven by the altitude difference",
                0.0438,
                "altitude difference 823.8 m - 780 m = 0.0438 km",
                3.0,
                ReferenceTargets {
                    displacement: 0.1189,
                    stress: [0.6670, 0.8961, 4.2471, 0.0271, 0.2725, 0.3222],
                },
            ),
            Preset::Gouache => site(
                "gouache",
                "Gouache, driven by the altitude difference",
                0.209,
                "altitude difference 1532 m - 1323 m = 0.209 km",
                1.0,
                ReferenceTargets {
                    displacement: 0.0132,
                    stress: [0.0909, 0.8961, 0.4738, 0.0033, 0.0302, 0.0356],
                },
            ),
        }
    }

    /// Runnable configuration at desk or reference resolution.
    pub fn config(&self, full: bool) -> Result<ScenarioConfig> {
        let s = self.parameters();
        let (spacing, degree, k) = if full {
            (s.spacing, s.degree, s.k)
        } else {
            (s.desk_spacing, s.desk_degree, s.desk_k)
        };
        let params = MaterialParams::from_young(s.nu, s.young_modulus, s.poisson_ratio)?;
        let source = SourceConfig::new(s.g_c, 0.0, s.center, s.radius)?;
        let cfg = ScenarioConfig {
            name: s.name.to_string(),
            domain: BoxDomain::with_spacing(s.lo, s.hi, spacing)?,
            degree,
            k,
            t_final: s.t_final,
            c_sr: s.c_sr,
            params,
            moduli: Some((s.young_modulus, s.poisson_ratio)),
            source,
            kappa0: s.kappa0,
            initial: InitialKind::Zero,
            seed: 0,
            initial_amplitude: 1.0,
            numerics: Numerics::default(),
            vtk_snapshots: 4,
            time_study: None,
            space_study: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Temporal study: Example-2 physics on a 3-cell mesh of degree 2,
    /// steps `3⁻³..3⁻⁵` against `3⁻⁶`. The pulse is centred at
    /// `t₀ = 1/(π g_c)` so that the source starts from zero.
    pub fn time_study(&self, full: bool) -> Result<ScenarioConfig> {
        if *self != Preset::Example2 {
            return Err(Error::Config(format!(
                "preset {} has no temporal study; use example2 or a config with a [study] section",
                self.name()
            )));
        }
        let mut cfg = self.config(full)?;
        cfg.name = "example2-time".into();
        cfg.source.t0 = 1.0 / (PI * cfg.source.g_c);
        if full {
            cfg.time_study = Some(TimeStudy {
                ks: (2..=8).map(|e| p3(-e)).collect(),
                k_ref: p3(-9),
            });
        } else {
            cfg.domain = BoxDomain::new(cfg.domain.lo, cfg.domain.hi, [3; 3])?;
            cfg.degree = 2;
            cfg.time_study = Some(TimeStudy {
                ks: vec![p3(-3), p3(-4), p3(-5)],
                k_ref: p3(-6),
            });
        }
        cfg.k = cfg.time_study.as_ref().map(|t| t.k_ref).unwrap_or(cfg.k);
        cfg.validate()?;
        Ok(cfg)
    }

    /// Spatial study on the unit cube with degree 4. The material is
    /// replaced by `λ = μ = ν = 1` and the ball by one containing the whole
    /// cube, so the solution is smooth; `T_f = 3⁻⁴` at `k = 3⁻⁷`.
    pub fn space_study(&self, full: bool) -> Result<ScenarioConfig> {
        if *self != Preset::Example1 {
            return Err(Error::Config(format!(
                "preset {} has no spatial study; use example1 or a config with a [study] section",
                self.name()
            )));
        }
        let mut cfg = self.config(full)?;
        cfg.name = "example1-space".into();
        cfg.params = MaterialParams::new(1.0, 1.0, 1.0)?;
        cfg.moduli = None;
        cfg.source = SourceConfig::new(1.0 / PI, 0.0, [0.5; 3], 1.0)?;
        cfg.degree = 4;
        cfg.k = p3(-7);
        cfg.c_sr = 1.0 / 3.0;
        if full {
            cfg.t_final = 1.0;
            cfg.space_study = Some(SpaceStudy {
                cells: vec![3, 9, 27, 81, 243],
                cells_ref: 729,
                k: p3(-7),
            });
        } else {
            cfg.t_final = p3(-4);
            cfg.space_study = Some(SpaceStudy {
                cells: vec![3, 9],
                cells_ref: 27,
                k: p3(-7),
            });
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Preset::ALL.iter().map(|p| p.name()).collect();
                Error::Config(format!("unknown preset {s:?}; expected one of {}", names.join(", ")))
            })
    }
}
