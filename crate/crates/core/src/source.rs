//! Ball-localised Ricker-type driving force.
//!
//! `g(x, t) = s(t) g₀(x) 𝟙_B(x) (1, 1, 1)` with
//! `s(t) = [1 - (π g_c (t - t₀))²] exp(-(π g_c (t - t₀))²)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Point3, Result};

/// Spatial profile `g₀`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SpatialProfile {
    /// `[sin(πx₁) sin(πx₂) sin(πx₃)]²`
    #[default]
    SineSquared,
    /// `g₀ ≡ 1`
    Uniform,
}

impl SpatialProfile {
    pub fn eval(&self, x: &Point3) -> f64 {
        match self {
            SpatialProfile::SineSquared => {
                let s = (PI * x[0]).sin() * (PI * x[1]).sin() * (PI * x[2]).sin();
                s * s
            }
            SpatialProfile::Uniform => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceConfig {
    pub g_c: f64,
    pub t0: f64,
    pub center: Point3,
    pub radius: f64,
    #[serde(default)]
    pub profile: SpatialProfile,
    /// Overall amplitude; zero switches the source off.
    #[serde(default = "one")]
    pub amplitude: f64,
}

fn one() -> f64 {
    1.0
}

impl SourceConfig {
    pub fn new(g_c: f64, t0: f64, center: Point3, radius: f64) -> Result<Self> {
        let cfg = Self {
            g_c,
            t0,
            center,
            radius,
            profile: SpatialProfile::default(),
            amplitude: 1.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// A source that is identically zero.
    pub fn zero() -> Self {
        Self {
            g_c: 0.0,
            t0: 0.0,
            center: [0.0; 3],
            radius: 1.0,
            profile: SpatialProfile::default(),
            amplitude: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "source radius must be positive, got {}",
                self.radius
            )));
        }
        if !self.g_c.is_finite() || !self.t0.is_finite() || !self.amplitude.is_finite() {
            return Err(Error::InvalidArgument("source parameters must be finite".into()));
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.amplitude == 0.0
    }

    /// Scalar time factor `s(t)` including the amplitude.
    pub fn time_factor(&self, t: f64) -> f64 {
        let a = PI * self.g_c * (t - self.t0);
        let a2 = a * a;
        self.amplitude * (1.0 - a2) * (-a2).exp()
    }

    pub fn in_ball(&self, x: &Point3) -> bool {
        let d2: f64 = (0..3).map(|i| (x[i] - self.center[i]).powi(2)).sum();
        d2 < self.radius * self.radius
    }

    /// `g₀(x) 𝟙_B(x)`.
    pub fn spatial(&self, x: &Point3) -> f64 {
        if self.in_ball(x) {
            self.profile.eval(x)
        } else {
            0.0
        }
    }
}

/// Pointwise value of the driving force.
pub fn eval_source(cfg: &SourceConfig, x: &Point3, t: f64) -> [f64; 3] {
    if !cfg.in_ball(x) {
        return [0.0; 3];
    }
    let v = cfg.time_factor(t) * cfg.profile.eval(x);
    [v, v, v]
}

/// `∫_{t_a}^{t_b} s(t) dt` by three-point Gauss–Legendre.
pub fn integrate_source_in_time(cfg: &SourceConfig, t_a: f64, t_b: f64) -> f64 {
    let half = 0.5 * (t_b - t_a);
    let mid = 0.5 * (t_a + t_b);
    let x = (0.6f64).sqrt();
    half * (5.0 / 9.0 * cfg.time_factor(mid - half * x)
        + 8.0 / 9.0 * cfg.time_factor(mid)
        + 5.0 / 9.0 * cfg.time_factor(mid + half * x))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(g_c: f64) -> SourceConfig {
        SourceConfig::new(g_c, 0.3, [0.5; 3], 0.25).unwrap()
    }

    #[test]
    fn peak_value_at_center_time() {
        let c = cfg(1.0 / PI);
        let x = [0.55, 0.45, 0.5];
        let g = eval_source(&c, &x, 0.3);
        assert_eq!(g, [c.profile.eval(&x); 3]);
    }

    #[test]
    fn zero_outside_ball_and_at_bracket_root() {
        let c = cfg(1.0 / PI);
        assert_eq!(eval_source(&c, &[0.9, 0.5, 0.5], 0.3), [0.0; 3]);
        assert_eq!(eval_source(&c, &[0.5, 0.5, 0.75], 0.3), [0.0; 3]);
        let g = eval_source(&c, &[0.5; 3], 1.3);
        assert!(g.iter().all(|v| v.abs() < 1e-16));
    }

    #[test]
    fn constant_factor_integrates_exactly() {
        let c = cfg(0.0);
        assert_eq!(integrate_source_in_time(&c, 0.25, 1.75), 1.5);
    }

    #[test]
    fn matches_closed_form_antiderivative() {
        // ∫ (1 - a²u²) e^{-a²u²} du = √π/(4a) erf(au) + (u/2) e^{-a²u²}
        let c = cfg(0.7);
        let a = PI * c.g_c;
        let anti = |t: f64| {
            let u = t - c.t0;
            PI.sqrt() / (4.0 * a) * libm::erf(a * u) + 0.5 * u * (-(a * u).powi(2)).exp()
        };
        let k = 3f64.powi(-5);
        for n in 0..50 {
            let (lo, hi) = (n as f64 * k, (n + 1) as f64 * k);
            let approx = integrate_source_in_time(&c, lo, hi);
            assert!((approx - (anti(hi) - anti(lo))).abs() < 1e-10);
        }
    }

    #[test]
    fn symmetric_interval_matches_trapezoid_oracle() {
        let c = cfg(0.45);
        let half = 0.4;
        let gauss = integrate_source_in_time(&c, c.t0 - half, c.t0 + half);
        let panels = 100_000;
        let dt = half / panels as f64;
        let mut trap = 0.5 * (c.time_factor(c.t0) + c.time_factor(c.t0 + half));
        for i in 1..panels {
            trap += c.time_factor(c.t0 + i as f64 * dt);
        }
        trap *= 2.0 * dt;
        // a single 3-point panel over the whole pulse is only approximate
        assert!((gauss - trap).abs() < 1e-3);
        let mut composite = 0.0;
        let m = 64;
        for i in 0..m {
            let lo = c.t0 - half + 2.0 * half * i as f64 / m as f64;
            composite += integrate_source_in_time(&c, lo, lo + 2.0 * half / m as f64);
        }
        assert!((composite - trap).abs() < 1e-9);
    }

    #[test]
    fn separability() {
        let c = cfg(0.2);
        let x = [0.45, 0.5, 0.6];
        let g = eval_source(&c, &x, 0.9);
        assert_eq!(g[0], c.time_factor(0.9) * c.spatial(&x));
    }

    #[test]
    fn rejects_nonpositive_radius() {
        assert!(SourceConfig::new(1.0, 0.0, [0.0; 3], 0.0).is_err());
    }
}
