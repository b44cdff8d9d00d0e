//! Physical parameters, reduction to oscillator units, the piecewise-harmonic
//! double-well potential and the trap-separation trajectory.
//!
//! Internally every length is measured in `1/α = sqrt(ħ/(m ω_x))`, every time in
//! `1/ω_x` and every energy in `ħ ω_x`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{GateError, Result};

pub mod constants {
    /// Reduced Planck constant (J s).
    pub const HBAR: f64 = 1.054571817e-34;
    /// Bohr radius (m).
    pub const BOHR_RADIUS: f64 = 5.29177210903e-11;
    /// Mass of a 87Rb atom (kg).
    pub const MASS_RB87: f64 = 1.44316e-25;
    /// Mass of an 85Rb atom (kg).
    pub const MASS_RB85: f64 = 1.40999e-25;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Longitudinal trap angular frequency (rad/s).
    pub omega_x: f64,
    /// Transverse trap angular frequency (rad/s).
    pub omega_p: f64,
    /// Atomic mass (kg).
    pub mass: f64,
    /// s-wave scattering length (m, signed).
    pub a_t: f64,
    /// Half separations in units of 1/α.
    pub a_max: f64,
    pub a_min: f64,
    /// Ramp and interaction durations in units of 1/ω_x.
    pub t_r: f64,
    pub t_i: f64,
    pub ramp: RampShape,
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(GateError::invalid(name, format!("must be finite and > 0, got {v}")))
            }
        };
        positive("omega_x", self.omega_x)?;
        positive("omega_p", self.omega_p)?;
        positive("mass", self.mass)?;
        positive("a_min", self.a_min)?;
        positive("t_r", self.t_r)?;
        if !self.a_t.is_finite() {
            return Err(GateError::invalid("a_t", "must be finite"));
        }
        if !(self.a_max.is_finite() && self.a_max >= self.a_min) {
            return Err(GateError::invalid(
                "a_max/a_min",
                format!("require a_max >= a_min, got a_max = {}, a_min = {}", self.a_max, self.a_min),
            ));
        }
        if !(self.t_i.is_finite() && self.t_i >= 0.0) {
            return Err(GateError::invalid("t_i", format!("must be >= 0, got {}", self.t_i)));
        }
        Ok(())
    }

    /// Oscillator length 1/α in metres.
    pub fn oscillator_length(&self) -> f64 {
        (constants::HBAR / (self.mass * self.omega_x)).sqrt()
    }
}

/// Shape of the approach/separation ramps. Both are a quarter period of a cosine;
/// they differ in which end of the ramp the cosine is flat.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RampShape {
    /// `a = a_max - (a_max - a_min) sin(π τ / 2 t_r)`: zero velocity on entering the plateau.
    #[default]
    FlatAtMinimum,
    /// `a = a_min + (a_max - a_min) cos(π τ / 2 t_r)`: zero velocity when leaving a_max.
    FlatAtMaximum,
}

impl RampShape {
    pub fn name(&self) -> &'static str {
        match self {
            RampShape::FlatAtMinimum => "flat-min",
            RampShape::FlatAtMaximum => "flat-max",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "flat-min" => Some(RampShape::FlatAtMinimum),
            "flat-max" => Some(RampShape::FlatAtMaximum),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapTrajectory {
    pub a_max: f64,
    pub a_min: f64,
    pub t_r: f64,
    pub t_i: f64,
    pub ramp: RampShape,
}

impl TrapTrajectory {
    pub fn new(a_max: f64, a_min: f64, t_r: f64, t_i: f64, ramp: RampShape) -> Result<Self> {
        if !(a_min.is_finite() && a_min > 0.0) {
            return Err(GateError::invalid("a_min", "must be > 0"));
        }
        if !(a_max.is_finite() && a_max >= a_min) {
            return Err(GateError::invalid("a_max/a_min", "require a_max >= a_min"));
        }
        if !(t_r.is_finite() && t_r > 0.0) {
            return Err(GateError::invalid("t_r", "must be > 0"));
        }
        if !(t_i.is_finite() && t_i >= 0.0) {
            return Err(GateError::invalid("t_i", "must be >= 0"));
        }
        Ok(TrapTrajectory { a_max, a_min, t_r, t_i, ramp })
    }

    /// Traps held fixed at `a` for `duration`.
    pub fn stationary(a: f64, duration: f64) -> Result<Self> {
        let t_r = duration / 4.0;
        Self::new(a, a, t_r, duration - 2.0 * t_r, RampShape::default())
    }

    pub fn total_time(&self) -> f64 {
        2.0 * self.t_r + self.t_i
    }

    /// Times where the velocity may be discontinuous.
    pub fn breakpoints(&self) -> [f64; 2] {
        [self.t_r, self.t_r + self.t_i]
    }

    fn check(&self, tau: f64) -> Result<f64> {
        let total = self.total_time();
        let slack = 1e-12 * total.max(1.0);
        if !(tau >= -slack && tau <= total + slack) {
            return Err(GateError::Domain { tau, total });
        }
        Ok(tau.clamp(0.0, total))
    }

    fn ramp_in(&self, tau: f64) -> (f64, f64) {
        let span = self.a_max - self.a_min;
        let w = PI / (2.0 * self.t_r);
        let (s, c) = (w * tau).sin_cos();
        match self.ramp {
            RampShape::FlatAtMinimum => (self.a_max - span * s, -span * w * c),
            RampShape::FlatAtMaximum => (self.a_min + span * c, -span * w * s),
        }
    }

    /// Half-separation and its time derivative at `tau`.
    pub fn state(&self, tau: f64) -> Result<(f64, f64)> {
        let tau = self.check(tau)?;
        let total = self.total_time();
        if tau <= self.t_r {
            Ok(self.ramp_in(tau))
        } else if tau <= self.t_r + self.t_i {
            Ok((self.a_min, 0.0))
        } else {
            let (a, v) = self.ramp_in(total - tau);
            Ok((a, -v))
        }
    }

    pub fn separation(&self, tau: f64) -> Result<f64> {
        self.state(tau).map(|s| s.0)
    }

    pub fn velocity(&self, tau: f64) -> Result<f64> {
        self.state(tau).map(|s| s.1)
    }
}

/// Free-function form of [`TrapTrajectory::separation`].
pub fn trap_separation(tau: f64, traj: &TrapTrajectory) -> Result<f64> {
    traj.separation(tau)
}

/// Dimensionless double-well potential, harmonic about `-a` for x < 0 and `+a` for x >= 0.
#[inline]
pub fn potential(x: f64, a: f64) -> f64 {
    if x < 0.0 {
        0.5 * (x + a) * (x + a)
    } else {
        0.5 * (x - a) * (x - a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionlessModel {
    /// Contact coupling in units of ħω_x · (1/α).
    pub g: f64,
    /// Oscillator length 1/α (m).
    pub alpha_inv: f64,
    pub trajectory: TrapTrajectory,
}

impl DimensionlessModel {
    /// Model given directly in oscillator units; `alpha_inv` is left at 0 (unknown).
    pub fn new(g: f64, trajectory: TrapTrajectory) -> Self {
        DimensionlessModel { g, alpha_inv: 0.0, trajectory }
    }

    pub fn with_trajectory(&self, trajectory: TrapTrajectory) -> Self {
        DimensionlessModel { trajectory, ..*self }
    }

    pub fn with_coupling(&self, g: f64) -> Self {
        DimensionlessModel { g, ..*self }
    }
}

/// Reduce SI parameters to oscillator units. The 1D contact strength
/// `2 a_t ħ ω_p` becomes `g = 2 (a_t α)(ω_p / ω_x)`.
pub fn derive_dimensionless(params: &PhysicalParams) -> Result<DimensionlessModel> {
    params.validate()?;
    let alpha_inv = params.oscillator_length();
    let g = 2.0 * (params.a_t / alpha_inv) * (params.omega_p / params.omega_x);
    let trajectory = TrapTrajectory::new(params.a_max, params.a_min, params.t_r, params.t_i, params.ramp)?;
    Ok(DimensionlessModel { g, alpha_inv, trajectory })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rb87(a_t_bohr: f64) -> PhysicalParams {
        PhysicalParams {
            omega_x: 1.25e4,
            omega_p: 7.9e6,
            mass: constants::MASS_RB87,
            a_t: a_t_bohr * constants::BOHR_RADIUS,
            a_max: 5.0,
            a_min: 1.99,
            t_r: 70.0,
            t_i: 69.0,
            ramp: RampShape::FlatAtMinimum,
        }
    }

    #[test]
    fn zero_scattering_length_gives_zero_coupling() {
        assert_eq!(derive_dimensionless(&rb87(0.0)).unwrap().g, 0.0);
    }

    #[test]
    fn rb87_coupling() {
        let m = derive_dimensionless(&rb87(106.0)).unwrap();
        // 1/α from the pinned mass is 241.8 nm (caption quotes 241 nm).
        assert!((m.alpha_inv - 2.4180e-7).abs() < 1e-10, "{}", m.alpha_inv);
        let expected = 2.0 * 106.0 * constants::BOHR_RADIUS / m.alpha_inv * (7.9e6 / 1.25e4);
        assert!((m.g - expected).abs() < 1e-12);
        assert!((m.g - 29.4).abs() < 0.15, "g = {}", m.g);
    }

    #[test]
    fn rb85_coupling() {
        let p = PhysicalParams {
            omega_p: 1.6e6,
            mass: constants::MASS_RB85,
            a_t: -369.0 * constants::BOHR_RADIUS,
            a_min: 1.956,
            t_r: 77.0,
            t_i: 97.2,
            ..rb87(0.0)
        };
        let m = derive_dimensionless(&p).unwrap();
        assert!((m.g + 20.5).abs() < 0.15, "g = {}", m.g);
        let rel = (m.alpha_inv - (constants::HBAR / (p.mass * p.omega_x)).sqrt()).abs() / m.alpha_inv;
        assert!(rel < 1e-12);
    }

    #[test]
    fn coupling_is_linear_in_scattering_length() {
        let g1 = derive_dimensionless(&rb87(53.0)).unwrap().g;
        let g2 = derive_dimensionless(&rb87(106.0)).unwrap().g;
        assert!((g2 - 2.0 * g1).abs() < 1e-12 * g2.abs());
    }

    #[test]
    fn invalid_params_rejected() {
        let mut p = rb87(106.0);
        p.omega_x = 0.0;
        assert!(matches!(derive_dimensionless(&p), Err(GateError::InvalidParameter { .. })));
        let mut p = rb87(106.0);
        p.mass = -1.0;
        assert!(derive_dimensionless(&p).is_err());
        let mut p = rb87(106.0);
        p.a_min = 6.0;
        let err = derive_dimensionless(&p).unwrap_err();
        assert!(err.to_string().contains("a_max") && err.to_string().contains("a_min"));
    }

    #[test]
    fn trajectory_endpoints() {
        for ramp in [RampShape::FlatAtMinimum, RampShape::FlatAtMaximum] {
            let t = TrapTrajectory::new(5.0, 1.99, 70.0, 69.0, ramp).unwrap();
            assert_eq!(t.separation(0.0).unwrap(), 5.0);
            assert!((t.separation(70.0).unwrap() - 1.99).abs() < 1e-14);
            assert!((t.separation(t.total_time()).unwrap() - 5.0).abs() < 1e-14);
            assert_eq!(t.separation(100.0).unwrap(), 1.99);
        }
    }

    #[test]
    fn trajectory_quarter_point() {
        let span = 5.0 - 1.99;
        let t = TrapTrajectory::new(5.0, 1.99, 70.0, 69.0, RampShape::FlatAtMaximum).unwrap();
        let a = t.separation(35.0).unwrap();
        assert!((a - (1.99 + span / 2f64.sqrt())).abs() < 1e-13);
        let t = TrapTrajectory::new(5.0, 1.99, 70.0, 69.0, RampShape::FlatAtMinimum).unwrap();
        let a = t.separation(35.0).unwrap();
        assert!((a - (5.0 - span / 2f64.sqrt())).abs() < 1e-13);
    }

    #[test]
    fn trajectory_domain_error() {
        let t = TrapTrajectory::new(5.0, 1.99, 70.0, 69.0, RampShape::default()).unwrap();
        assert!(matches!(t.separation(-1.0), Err(GateError::Domain { .. })));
        assert!(matches!(t.separation(210.0), Err(GateError::Domain { .. })));
    }

    #[test]
    fn trajectory_continuity_and_reversal() {
        for ramp in [RampShape::FlatAtMinimum, RampShape::FlatAtMaximum] {
            let t = TrapTrajectory::new(5.0, 1.99, 70.0, 69.0, ramp).unwrap();
            for b in t.breakpoints() {
                let lo = t.separation(b - 1e-13).unwrap();
                let hi = t.separation(b + 1e-13).unwrap();
                assert!((lo - hi).abs() < 1e-12);
            }
            let total = t.total_time();
            for k in 0..=400 {
                let tau = total * k as f64 / 400.0;
                let a = t.separation(tau).unwrap();
                let b = t.separation(total - tau).unwrap();
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn velocity_matches_finite_difference() {
        for ramp in [RampShape::FlatAtMinimum, RampShape::FlatAtMaximum] {
            let t = TrapTrajectory::new(5.0, 1.99, 70.0, 69.0, ramp).unwrap();
            for tau in [3.0, 31.0, 66.0, 100.0, 150.0, 190.0] {
                let d = 1e-5;
                let fd = (t.separation(tau + d).unwrap() - t.separation(tau - d).unwrap()) / (2.0 * d);
                assert!((fd - t.velocity(tau).unwrap()).abs() < 1e-8, "{ramp:?} {tau}");
            }
        }
    }

    #[test]
    fn potential_values() {
        let a = 1.7;
        assert_eq!(potential(a, a), 0.0);
        assert_eq!(potential(-a, a), 0.0);
        assert!((potential(0.0, a) - a * a / 2.0).abs() < 1e-15);
        assert!((potential(-a - 1.0, a) - 0.5).abs() < 1e-15);
        let left = 0.5 * (0.0 + a) * (0.0 + a);
        let right = 0.5 * (0.0 - a) * (0.0 - a);
        assert_eq!(left, right);
    }

    #[test]
    fn potential_is_even() {
        for k in -200..=200 {
            let x = k as f64 * 0.05;
            for a in [0.0, 0.5, 1.99, 5.0] {
                assert!((potential(x, a) - potential(-x, a)).abs() < 1e-14);
            }
        }
    }
}
